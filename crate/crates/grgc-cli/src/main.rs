//! Command-line surface for the samplers, censuses, and verification runs.
//!
//! Exit codes: 0 success, 1 assert-mode threshold failure, 2 usage error,
//! 3 config validation error, 4 I/O failure. Acceptance judgments live in the
//! output files; the exit code only reflects them under `--assert`.

mod config;
mod output;

use config::{build_config, RawConfig, RunSettings, TypedConfig};
use grgc::cycles::{census, CycleCensus};
use grgc::graph::{sample_graph, sample_graph_fast, GraphSample};
use grgc::harness::{self, ExperimentConfig, LengthSet, Scenario, SUPERCRITICAL_CAP};
use grgc::rng::Stream;
use grgc::weights::{Regime, WeightModel};
use output::{evaluate_asserts, fmt_f64, result_csv, result_json};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const USAGE: &str = "grgc - rank-1 random graph cycle laboratory

USAGE:
    grgc <SUBCOMMAND> [OPTIONS]

SUBCOMMANDS:
    generate        sample one graph and dump its edge list
    census          sample one graph and emit its cycle census as CSV
    verify-poisson  marginal (or joint) Poisson law of cycle counts
    verify-rate     total-variation convergence rate over an n-grid
    no-long-cycles  frequency of cycles longer than a*ln(n)
    extremes        shortest/longest cycle laws
    cramer-wold     thinned cycle-count sums
    bounds          Stein-Chen bound decomposition
    domination      coupled-sampler subset and count ordering

OPTIONS:
    --config <path>        flat key=value config file
    --override key=value   override one config key (repeatable)
    --out <dir>            output directory (default .)
    --format csv|json      write only that format (default: both)
    --assert               evaluate thresholds; exit 1 on any failure
    --help                 this message, or per-subcommand usage

Config keys: scenario, weight.kind, weight.c, weight.v1, weight.v2,
weight.prob, weight.rate, weight.shape, weight.scale, weight.tail_index,
graph.kind, n_grid, reps, length_set, a_log_constant, master_seed, workers,
quenched, variant, sampler, full_scan, thin.<k>, assert.*.
Environment: GRGC_WORKERS overrides the worker count.
";

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Config(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(4),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Io(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Subcommand {
    Generate,
    Census,
    VerifyPoisson,
    VerifyRate,
    NoLongCycles,
    Extremes,
    CramerWold,
    Bounds,
    Domination,
}

impl Subcommand {
    fn parse(s: &str) -> Option<Subcommand> {
        Some(match s {
            "generate" => Subcommand::Generate,
            "census" => Subcommand::Census,
            "verify-poisson" => Subcommand::VerifyPoisson,
            "verify-rate" => Subcommand::VerifyRate,
            "no-long-cycles" => Subcommand::NoLongCycles,
            "extremes" => Subcommand::Extremes,
            "cramer-wold" => Subcommand::CramerWold,
            "bounds" => Subcommand::Bounds,
            "domination" => Subcommand::Domination,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Subcommand::Generate => "generate",
            Subcommand::Census => "census",
            Subcommand::VerifyPoisson => "verify-poisson",
            Subcommand::VerifyRate => "verify-rate",
            Subcommand::NoLongCycles => "no-long-cycles",
            Subcommand::Extremes => "extremes",
            Subcommand::CramerWold => "cramer-wold",
            Subcommand::Bounds => "bounds",
            Subcommand::Domination => "domination",
        }
    }

    /// Scenarios this subcommand may run; the first is the default.
    fn scenarios(self) -> &'static [Scenario] {
        match self {
            Subcommand::Generate | Subcommand::Census => &[Scenario::PoissonFixedK],
            Subcommand::VerifyPoisson => &[Scenario::PoissonFixedK, Scenario::PoissonJoint],
            Subcommand::VerifyRate => &[Scenario::RateBounded, Scenario::RateUnbounded],
            Subcommand::NoLongCycles => &[Scenario::NoLongCycles],
            Subcommand::Extremes => &[Scenario::Extremes],
            Subcommand::CramerWold => &[Scenario::CramerWold],
            Subcommand::Bounds => &[Scenario::BoundsCheck],
            Subcommand::Domination => &[Scenario::Domination],
        }
    }

    /// Built-in defaults: closed-form subcritical models for law checks, the
    /// supercritical exponential for the domination smoke test.
    fn default_experiment(self) -> ExperimentConfig {
        let mut cfg = match self {
            Subcommand::NoLongCycles => {
                let mut c =
                    ExperimentConfig::new(Scenario::NoLongCycles, WeightModel::Constant(0.5));
                c.n_grid = vec![2000];
                c.reps = 10_000;
                c
            }
            Subcommand::Domination => {
                let mut c = ExperimentConfig::new(
                    Scenario::Domination,
                    WeightModel::Exponential { rate: 1.0 },
                );
                c.n_grid = vec![100];
                c.reps = 1000;
                c
            }
            Subcommand::VerifyRate => {
                let mut c =
                    ExperimentConfig::new(Scenario::RateBounded, WeightModel::Constant(0.9));
                c.n_grid = vec![50, 100, 200, 400];
                c.reps = 100_000;
                c
            }
            Subcommand::CramerWold => {
                let mut c =
                    ExperimentConfig::new(Scenario::CramerWold, WeightModel::Constant(0.9));
                c.length_set = LengthSet::Set(vec![3, 4]);
                c.thinning = [(3, 0.5), (4, 0.25)].into_iter().collect();
                c.reps = 100_000;
                c
            }
            Subcommand::Bounds => {
                let mut c =
                    ExperimentConfig::new(Scenario::BoundsCheck, WeightModel::Constant(1.0));
                c.n_grid = vec![4, 5, 6, 7];
                c
            }
            Subcommand::Generate | Subcommand::Census => {
                let mut c =
                    ExperimentConfig::new(Scenario::PoissonFixedK, WeightModel::Constant(0.5));
                c.n_grid = vec![100];
                c
            }
            Subcommand::VerifyPoisson | Subcommand::Extremes => {
                let mut c = ExperimentConfig::new(self.scenarios()[0], WeightModel::Constant(0.9));
                c.reps = 100_000;
                c
            }
        };
        cfg.scenario = self.scenarios()[0];
        cfg
    }
}

struct Invocation {
    subcommand: Subcommand,
    experiment: ExperimentConfig,
    settings: RunSettings,
    out_dir: PathBuf,
    format: Format,
    assert_mode: bool,
}

fn parse_args(args: &[String]) -> Result<Option<Invocation>, CliError> {
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        print!("{USAGE}");
        return Ok(None);
    }
    let subcommand = Subcommand::parse(&args[0])
        .ok_or_else(|| CliError::Usage(format!("unknown subcommand `{}`\n{USAGE}", args[0])))?;

    let mut config_path: Option<PathBuf> = None;
    let mut overrides: Vec<String> = Vec::new();
    let mut out_dir = PathBuf::from(".");
    let mut format = Format::Both;
    let mut assert_mode = false;

    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--help" | "-h" => {
                println!(
                    "grgc {} — see the config keys in the top-level help.\n{USAGE}",
                    subcommand.name()
                );
                return Ok(None);
            }
            "--config" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage("--config needs a path argument".to_string()))?;
                config_path = Some(PathBuf::from(v));
            }
            "--override" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage("--override needs key=value".to_string()))?;
                overrides.push(v.clone());
            }
            "--out" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage("--out needs a directory".to_string()))?;
                out_dir = PathBuf::from(v);
            }
            "--format" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage("--format needs csv or json".to_string()))?;
                format = match v.as_str() {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => {
                        return Err(CliError::Usage(format!("unknown format `{other}`")));
                    }
                };
            }
            "--assert" => assert_mode = true,
            other => {
                return Err(CliError::Usage(format!("unknown option `{other}`\n{USAGE}")));
            }
        }
    }

    let mut raw = match &config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
            RawConfig::parse_file(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => RawConfig::default(),
    };
    for assignment in &overrides {
        raw.push_override(assignment)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }

    let TypedConfig { mut experiment, settings, scenario_given } =
        build_config(&raw, subcommand.scenarios()[0], subcommand.default_experiment())
            .map_err(|e| CliError::Config(e.to_string()))?;

    if let Some(given) = scenario_given {
        if !subcommand.scenarios().contains(&given)
            && !matches!(subcommand, Subcommand::Generate | Subcommand::Census)
        {
            return Err(CliError::Config(format!(
                "scenario `{given}` does not belong to subcommand `{}`",
                subcommand.name()
            )));
        }
    }
    // an unbounded length set under verify-rate selects the unbounded scenario
    if subcommand == Subcommand::VerifyRate
        && scenario_given.is_none()
        && experiment.length_set == LengthSet::AllFrom3
    {
        experiment.scenario = Scenario::RateUnbounded;
    }
    if let Ok(workers) = std::env::var("GRGC_WORKERS") {
        experiment.workers = workers.parse().map_err(|_| {
            CliError::Config(format!("GRGC_WORKERS must be an integer, got `{workers}`"))
        })?;
    }

    Ok(Some(Invocation { subcommand, experiment, settings, out_dir, format, assert_mode }))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn single_grid_point(experiment: &ExperimentConfig) -> Result<usize, CliError> {
    match experiment.n_grid.as_slice() {
        [n] => Ok(*n),
        _ => Err(CliError::Config("this subcommand needs exactly one n_grid entry".to_string())),
    }
}

fn sample_one_graph(inv: &Invocation, n: usize) -> GraphSample {
    let exp = &inv.experiment;
    let stream = Stream::root(exp.master_seed).child_str("generate");
    let weights = exp.model.sample(n, stream.child_str("w"));
    if inv.settings.sampler_naive {
        sample_graph(exp.graph_kind, &weights, stream.child_str("g"))
    } else {
        sample_graph_fast(exp.graph_kind, &weights, stream.child_str("g"))
    }
}

fn census_csv(census: &CycleCensus) -> String {
    let mut out = String::from("k,count\n");
    for (k, c) in census.counts_by_length() {
        out.push_str(&format!("{k},{c}\n"));
    }
    let (s, l) = census.shortest_longest();
    out.push_str("shortest,longest\n");
    out.push_str(&format!("{s},{l}\n"));
    out
}

fn run_invocation(inv: &Invocation) -> Result<ExitCode, CliError> {
    inv.experiment.validate().map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::create_dir_all(&inv.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", inv.out_dir.display())))?;

    match inv.subcommand {
        Subcommand::Generate => {
            let n = single_grid_point(&inv.experiment)?;
            let graph = sample_one_graph(inv, n);
            let path = inv.out_dir.join("graph.txt");
            write_file(&path, &graph.dump())?;
            println!(
                "generate n={} m={} kind={} seed={} -> {}",
                graph.n(),
                graph.edge_count(),
                graph.kind(),
                graph.seed().id(),
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Subcommand::Census => {
            let n = single_grid_point(&inv.experiment)?;
            let graph = sample_one_graph(inv, n);
            let max_len = if inv.settings.full_scan {
                n
            } else if inv.experiment.model.regime() == Regime::Subcritical {
                ((inv.experiment.a_log_constant * (n as f64).ln()).ceil() as usize + 10).min(n)
            } else {
                SUPERCRITICAL_CAP.min(n)
            };
            let census = census(&graph, max_len.max(3));
            let path = inv.out_dir.join("census.csv");
            write_file(&path, &census_csv(&census))?;
            let (s, l) = census.shortest_longest();
            println!(
                "census n={n} scanned_to={} total={} shortest={s} longest={l} -> {}",
                census.max_length_scanned(),
                census.total_cycles(),
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        _ => {
            let result = harness::run(&inv.experiment).map_err(|e| match e {
                harness::RunError::Config(c) => CliError::Config(c.to_string()),
                other => CliError::Config(other.to_string()),
            })?;
            for r in &result.records {
                println!(
                    "{} n={} estimate={} se={} reps={}{}",
                    inv.subcommand.name(),
                    r.n,
                    fmt_f64(r.primary.value),
                    fmt_f64(r.primary.se),
                    r.reps,
                    if r.guard_ok { "" } else { " [GUARD FAILED]" }
                );
            }
            if let Some(fit) = &result.fit {
                println!("{} fit slope={}", inv.subcommand.name(), fmt_f64(fit.slope));
            }

            let asserts =
                inv.assert_mode.then(|| evaluate_asserts(&result, &inv.settings.asserts));
            let stem = inv.subcommand.name();
            if matches!(inv.format, Format::Csv | Format::Both) {
                write_file(&inv.out_dir.join(format!("{stem}.csv")), &result_csv(&result))?;
            }
            if matches!(inv.format, Format::Json | Format::Both) {
                write_file(
                    &inv.out_dir.join(format!("{stem}.json")),
                    &result_json(&result, asserts.as_deref()),
                )?;
            }

            if let Some(outcomes) = &asserts {
                let mut failed = false;
                for a in outcomes {
                    println!(
                        "assert {}: {} (observed {}, threshold {})",
                        a.name,
                        if a.pass { "pass" } else { "FAIL" },
                        fmt_f64(a.observed),
                        fmt_f64(a.threshold)
                    );
                    failed |= !a.pass;
                }
                if failed {
                    return Ok(ExitCode::from(1));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match parse_args(&args) {
        Ok(Some(inv)) => match run_invocation(&inv) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
