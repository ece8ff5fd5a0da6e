//! Scenario runner: seeded, parallel Monte Carlo experiments over an n-grid.
//!
//! Every replication derives its own stream from the master seed through the
//! label path `scenario -> n -> replication index`, so results are identical
//! whatever the worker count or schedule. Workers only ever merge integer
//! histograms and integer moment sums, which are exactly associative and
//! commutative; floating-point summaries are derived once after the merge.
//!
//! Rate acceptance is slope- and trend-based, never absolute-constant-based:
//! the limit theorems only assert the existence of constants.

use crate::cycles::{CensusScratch, CycleCensus};
use crate::graph::{sample_coupled, sample_graph_fast, GraphSample, ModelKind};
use crate::poisson::{PoissonError, PoissonReference};
use crate::rng::Stream;
use crate::stats::{
    kolmogorov_distance, tv_distance, EmpiricalLaw, StatsError,
};
use crate::steinchen::{
    b1_exact, b1_mc, b2_exact, b2_mc, exact_inputs_constant, tv_bound, mc_inputs, BVariant,
    Method, SteinChenError, SteinChenReport, EXACT_LIMIT, MAX_BOUND_LENGTH,
};
use crate::weights::{Regime, WeightError, WeightModel, WeightVector};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;

/// Extra census depth beyond `ceil(a ln n)` in capped scans.
pub const CAP_SLACK: usize = 10;

/// Census depth for smoke runs outside the subcritical regime, where
/// exhaustive enumeration of long cycles is exponential.
pub const SUPERCRITICAL_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    PoissonFixedK,
    PoissonJoint,
    RateBounded,
    RateUnbounded,
    NoLongCycles,
    Extremes,
    Domination,
    CramerWold,
    BoundsCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::PoissonFixedK,
        Scenario::PoissonJoint,
        Scenario::RateBounded,
        Scenario::RateUnbounded,
        Scenario::NoLongCycles,
        Scenario::Extremes,
        Scenario::Domination,
        Scenario::CramerWold,
        Scenario::BoundsCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::PoissonFixedK => "poisson-fixed-k",
            Scenario::PoissonJoint => "poisson-joint",
            Scenario::RateBounded => "rate-bounded",
            Scenario::RateUnbounded => "rate-unbounded",
            Scenario::NoLongCycles => "no-long-cycles",
            Scenario::Extremes => "extremes",
            Scenario::Domination => "domination",
            Scenario::CramerWold => "cramer-wold",
            Scenario::BoundsCheck => "bounds-check",
        }
    }

    pub fn parse(s: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|sc| sc.as_str() == s)
    }

    /// Scenarios whose statements (or acceptance bands) only hold below
    /// criticality. Both rate flavors are gated: the trend thresholds assume
    /// the subcritical regime even where the bounded-set theorem does not.
    pub fn subcritical_only(self) -> bool {
        matches!(
            self,
            Scenario::RateBounded
                | Scenario::RateUnbounded
                | Scenario::NoLongCycles
                | Scenario::Extremes
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Cycle lengths under study: an explicit finite set, or every length from 3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LengthSet {
    Set(Vec<usize>),
    AllFrom3,
}

impl LengthSet {
    pub fn as_bounded(&self) -> Option<&[usize]> {
        match self {
            LengthSet::Set(v) => Some(v),
            LengthSet::AllFrom3 => None,
        }
    }

    pub fn canonical_string(&self) -> String {
        match self {
            LengthSet::Set(v) => v
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            LengthSet::AllFrom3 => "all".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    EmptyGrid,
    GridNotIncreasing,
    ZeroReps,
    RegimeViolation { scenario: Scenario, regime: Regime },
    UnboundedSet { scenario: Scenario },
    NeedTwoLengths,
    LengthOutOfRange { k: usize, n: usize },
    ThinningOutsideSet { k: usize },
    ThinningOutOfRange { k: usize, q: f64 },
    NeedThreeGridPoints { scenario: Scenario },
    BoundLengthTooLarge { k: usize },
    Model(WeightError),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::EmptyGrid => write!(f, "n_grid must not be empty"),
            ConfigError::GridNotIncreasing => write!(f, "n_grid must be strictly increasing"),
            ConfigError::ZeroReps => write!(f, "reps must be at least 1"),
            ConfigError::RegimeViolation { scenario, regime } => {
                write!(f, "scenario {scenario} requires a subcritical model, got {regime}")
            }
            ConfigError::UnboundedSet { scenario } => {
                write!(f, "scenario {scenario} needs a bounded length set (use rate-unbounded)")
            }
            ConfigError::NeedTwoLengths => {
                write!(f, "joint scenario needs at least two cycle lengths")
            }
            ConfigError::LengthOutOfRange { k, n } => {
                write!(f, "cycle length {k} out of range for smallest grid point n={n}")
            }
            ConfigError::ThinningOutsideSet { k } => {
                write!(f, "thinning probability given for length {k} outside the length set")
            }
            ConfigError::ThinningOutOfRange { k, q } => {
                write!(f, "thinning probability for length {k} outside [0,1]: {q}")
            }
            ConfigError::NeedThreeGridPoints { scenario } => {
                write!(f, "scenario {scenario} needs at least 3 grid points for the rate fit")
            }
            ConfigError::BoundLengthTooLarge { k } => {
                write!(f, "bound evaluation capped at cycle length {MAX_BOUND_LENGTH}, got {k}")
            }
            ConfigError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// One experiment: which statement to probe, with which model, grid, and seed.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub model: WeightModel,
    pub graph_kind: ModelKind,
    pub n_grid: Vec<usize>,
    pub reps: u64,
    pub length_set: LengthSet,
    pub a_log_constant: f64,
    pub master_seed: u64,
    /// Per-length thinning probabilities (Cramer-Wold scenario).
    pub thinning: BTreeMap<usize, f64>,
    /// Neighborhood variant reported by the bounds scenario.
    pub variant: BVariant,
    /// Fixed weight vector across replications instead of fresh draws.
    pub quenched: bool,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, model: WeightModel) -> Self {
        ExperimentConfig {
            scenario,
            model,
            graph_kind: ModelKind::Grg,
            n_grid: vec![400],
            reps: 10_000,
            length_set: LengthSet::Set(vec![3]),
            a_log_constant: 3.0,
            master_seed: 42,
            thinning: BTreeMap::new(),
            variant: BVariant::VertexSharing,
            quenched: false,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate().map_err(ConfigError::Model)?;
        if self.n_grid.is_empty() {
            return Err(ConfigError::EmptyGrid);
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::GridNotIncreasing);
        }
        if self.reps == 0 {
            return Err(ConfigError::ZeroReps);
        }
        let regime = self.model.regime();
        if self.scenario.subcritical_only() && regime != Regime::Subcritical {
            return Err(ConfigError::RegimeViolation { scenario: self.scenario, regime });
        }
        let min_n = self.n_grid[0];
        match (&self.length_set, self.scenario) {
            (LengthSet::AllFrom3, Scenario::RateUnbounded) => {}
            (LengthSet::AllFrom3, Scenario::NoLongCycles | Scenario::Extremes | Scenario::Domination) => {}
            (LengthSet::AllFrom3, scenario) => {
                return Err(ConfigError::UnboundedSet { scenario });
            }
            // these scenarios never consume the length set
            (LengthSet::Set(_), Scenario::Domination | Scenario::NoLongCycles) => {}
            (LengthSet::Set(lengths), _) => {
                for &k in lengths {
                    if k < 3 || k > min_n {
                        return Err(ConfigError::LengthOutOfRange { k, n: min_n });
                    }
                    if self.scenario == Scenario::BoundsCheck && k > MAX_BOUND_LENGTH {
                        return Err(ConfigError::BoundLengthTooLarge { k });
                    }
                }
                if self.scenario == Scenario::PoissonJoint && lengths.len() < 2 {
                    return Err(ConfigError::NeedTwoLengths);
                }
            }
        }
        if matches!(self.scenario, Scenario::RateBounded | Scenario::RateUnbounded)
            && self.n_grid.len() < 3
        {
            return Err(ConfigError::NeedThreeGridPoints { scenario: self.scenario });
        }
        if self.scenario == Scenario::CramerWold {
            let lengths = self
                .length_set
                .as_bounded()
                .ok_or(ConfigError::UnboundedSet { scenario: self.scenario })?;
            for (&k, &q) in &self.thinning {
                if !lengths.contains(&k) {
                    return Err(ConfigError::ThinningOutsideSet { k });
                }
                if !(0.0..=1.0).contains(&q) {
                    return Err(ConfigError::ThinningOutOfRange { k, q });
                }
            }
        }
        Ok(())
    }

    /// Stable textual form of every field; hashing it gives the config hash
    /// embedded in outputs.
    pub fn canonical_string(&self) -> String {
        let thinning = self
            .thinning
            .iter()
            .map(|(k, q)| format!("{k}:{q}"))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "scenario={};model={};graph={};n_grid={};reps={};length_set={};a={};seed={};thin={};variant={};quenched={}",
            self.scenario,
            self.model,
            self.graph_kind,
            self.n_grid
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            self.reps,
            self.length_set.canonical_string(),
            self.a_log_constant,
            self.master_seed,
            thinning,
            self.variant.as_str(),
            self.quenched,
        )
    }

    pub fn config_hash(&self) -> u64 {
        Stream::root(0xc0f1).child_str(&self.canonical_string()).id()
    }

    fn root_stream(&self) -> Stream {
        Stream::root(self.master_seed).child_str(self.scenario.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Per-grid-point results: the scenario's headline estimate plus named
/// scalars for the result document.
#[derive(Debug, Clone)]
pub struct GridRecord {
    pub n: usize,
    pub reps: u64,
    /// What the primary estimate measures ("tv", "frequency", ...).
    pub quantity: String,
    pub primary: Estimate,
    pub details: Vec<(String, f64)>,
    /// False when a full-depth guard replication found a cycle beyond the
    /// census cap, invalidating capped scans at this grid point.
    pub guard_ok: bool,
}

impl GridRecord {
    pub fn detail(&self, name: &str) -> Option<f64> {
        self.details
            .iter()
            .find(|(k, _)| k == name)
            .map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: u64,
    pub master_seed: u64,
    pub code_version: String,
    pub config_echo: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub records: Vec<GridRecord>,
    pub fit: Option<RateFit>,
    pub provenance: Provenance,
}

impl ExperimentResult {
    pub fn record_for(&self, n: usize) -> Option<&GridRecord> {
        self.records.iter().find(|r| r.n == n)
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Stats(StatsError),
    Poisson(PoissonError),
    SteinChen(SteinChenError),
    /// Log-log fitting needs positive estimates.
    NonPositiveEstimate { n: usize, value: f64 },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Stats(e) => write!(f, "{e}"),
            RunError::Poisson(e) => write!(f, "{e}"),
            RunError::SteinChen(e) => write!(f, "{e}"),
            RunError::NonPositiveEstimate { n, value } => {
                write!(f, "cannot fit a rate through non-positive estimate {value} at n={n}")
            }
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}
impl From<StatsError> for RunError {
    fn from(e: StatsError) -> Self {
        RunError::Stats(e)
    }
}
impl From<PoissonError> for RunError {
    fn from(e: PoissonError) -> Self {
        RunError::Poisson(e)
    }
}
impl From<SteinChenError> for RunError {
    fn from(e: SteinChenError) -> Self {
        RunError::SteinChen(e)
    }
}

/// Run the configured experiment.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    config.validate()?;
    match config.scenario {
        Scenario::PoissonFixedK => run_poisson_fixed_k(config),
        Scenario::PoissonJoint => run_poisson_joint(config),
        Scenario::RateBounded | Scenario::RateUnbounded => run_rate(config),
        Scenario::NoLongCycles => run_no_long_cycles(config),
        Scenario::Extremes => run_extremes(config),
        Scenario::Domination => run_domination(config),
        Scenario::CramerWold => run_cramer_wold(config),
        Scenario::BoundsCheck => run_bounds(config),
    }
}

fn provenance(config: &ExperimentConfig) -> Provenance {
    Provenance {
        config_hash: config.config_hash(),
        master_seed: config.master_seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_echo: config.canonical_string(),
    }
}

/// Census depth for capped scans in the subcritical regime.
fn log_cap(n: usize, a: f64) -> usize {
    let cap = (a * (n as f64).ln()).ceil() as usize + CAP_SLACK;
    cap.clamp(3, n)
}

fn census_cap(config: &ExperimentConfig, n: usize) -> usize {
    match (&config.length_set, config.scenario) {
        (_, Scenario::NoLongCycles) => n,
        (LengthSet::Set(lengths), _) => lengths.iter().copied().max().unwrap_or(3).min(n),
        (LengthSet::AllFrom3, _) => {
            if config.model.regime() == Regime::Subcritical {
                log_cap(n, config.a_log_constant)
            } else {
                SUPERCRITICAL_CAP.min(n)
            }
        }
    }
}

/// Per-worker reusable buffers.
struct RepScratch {
    weights_buf: Vec<f64>,
    census: CensusScratch,
}

impl RepScratch {
    fn new(n: usize) -> Self {
        RepScratch { weights_buf: Vec::with_capacity(n), census: CensusScratch::new(n) }
    }
}

/// Weight source for one grid point: quenched vectors are drawn once from the
/// grid stream; constant models are quenched by definition.
enum WeightSource {
    Fixed(WeightVector),
    Fresh(WeightModel),
}

impl WeightSource {
    fn for_grid(config: &ExperimentConfig, n: usize, grid_stream: Stream) -> WeightSource {
        if config.quenched || matches!(config.model, WeightModel::Constant(_)) {
            WeightSource::Fixed(config.model.sample(n, grid_stream.child_str("quench")))
        } else {
            WeightSource::Fresh(config.model)
        }
    }

    fn weights(&self, n: usize, rep_stream: Stream, scratch: &mut RepScratch) -> WeightVector {
        match self {
            WeightSource::Fixed(w) => w.clone(),
            WeightSource::Fresh(model) => {
                let mut rng = rep_stream.child_str("w").rng();
                model.sample_into(n, &mut rng, &mut scratch.weights_buf);
                WeightVector::new(scratch.weights_buf.clone())
            }
        }
    }
}

fn sample_rep_graph(
    config: &ExperimentConfig,
    source: &WeightSource,
    n: usize,
    rep_stream: Stream,
    scratch: &mut RepScratch,
) -> GraphSample {
    let weights = source.weights(n, rep_stream, scratch);
    sample_graph_fast(config.graph_kind, &weights, rep_stream.child_str("g"))
}

fn rep_census(graph: &GraphSample, cap: usize, scratch: &mut RepScratch) -> Option<CycleCensus> {
    if graph.n() < 3 {
        return None;
    }
    Some(scratch.census.run(graph, cap.clamp(3, graph.n())))
}

/// Parallel replication with an exactly associative integer merge. The step
/// function must derive all randomness from the replication stream.
fn replicate<A, Step>(config: &ExperimentConfig, n: usize, grid_stream: Stream, step: Step) -> A
where
    A: Default + Send,
    Step: Fn(&mut A, Stream, &mut RepScratch) + Sync,
    A: Merge,
{
    let reps = config.reps;
    let run_serial = || {
        let mut acc = A::default();
        let mut scratch = RepScratch::new(n);
        for rep in 0..reps {
            step(&mut acc, grid_stream.child(rep), &mut scratch);
        }
        acc
    };
    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map_or(1, |p| p.get())
    } else {
        config.workers
    };
    if workers <= 1 || reps < 64 {
        return run_serial();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..reps)
            .into_par_iter()
            .fold(
                || (A::default(), RepScratch::new(n)),
                |(mut acc, mut scratch), rep| {
                    step(&mut acc, grid_stream.child(rep), &mut scratch);
                    (acc, scratch)
                },
            )
            .map(|(acc, _)| acc)
            .reduce(A::default, |mut a, b| {
                a.merge(b);
                a
            })
    })
}

trait Merge {
    fn merge(&mut self, other: Self);
}

impl Merge for EmpiricalLaw {
    fn merge(&mut self, other: Self) {
        EmpiricalLaw::merge(self, &other);
    }
}

/// Guard replication: one full-depth census confirming that nothing lives
/// beyond the cap this grid point scans to.
fn guard_full_depth(
    config: &ExperimentConfig,
    source: &WeightSource,
    n: usize,
    cap: usize,
    grid_stream: Stream,
) -> bool {
    if cap >= n || n < 3 {
        return true;
    }
    let mut scratch = RepScratch::new(n);
    let graph = sample_rep_graph(config, source, n, grid_stream.child_str("guard"), &mut scratch);
    let census = scratch.census.run(&graph, n);
    census.counts_by_length().keys().all(|&k| k <= cap)
}

// ---------------------------------------------------------------------------
// scenario: marginal Poisson law on a bounded length set
// ---------------------------------------------------------------------------

fn run_poisson_fixed_k(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let lengths = config.length_set.as_bounded().expect("validated bounded");
    let reference = PoissonReference::for_model(&config.model)?;
    let target = reference.lambda_sum(lengths);
    let root = config.root_stream();

    let mut records = Vec::new();
    for &n in &config.n_grid {
        let grid_stream = root.child(n as u64);
        let source = WeightSource::for_grid(config, n, grid_stream);
        let cap = census_cap(config, n);
        let law: EmpiricalLaw = replicate(config, n, grid_stream, |law: &mut EmpiricalLaw, rep_stream, scratch| {
            let graph = sample_rep_graph(config, &source, n, rep_stream, scratch);
            let count = match rep_census(&graph, cap, scratch) {
                Some(census) => census.count_in_set(lengths).expect("cap covers set"),
                None => 0,
            };
            law.push(count);
        });
        let summary = law.summary()?;
        let tv = tv_distance(&law, target)?;
        let mut details = vec![
            ("mean".into(), summary.mean),
            ("mean_se".into(), summary.se),
            ("variance".into(), summary.variance),
            ("target_mean".into(), target),
            ("tv".into(), tv.value),
            ("tv_se".into(), tv.standard_error),
        ];
        if summary.mean > 0.0 {
            details.push(("dispersion".into(), summary.variance / summary.mean));
        }
        records.push(GridRecord {
            quantity: "tv".into(),
            n,
            reps: config.reps,
            primary: Estimate { value: tv.value, se: tv.standard_error },
            details,
            guard_ok: true,
        });
    }
    Ok(ExperimentResult {
        scenario: config.scenario,
        records,
        fit: None,
        provenance: provenance(config),
    })
}

// ---------------------------------------------------------------------------
// scenario: joint law / asymptotic independence
// ---------------------------------------------------------------------------

#[derive(Default)]
struct JointAcc {
    /// per length: sum x, sum x^2
    sums: BTreeMap<usize, (u128, u128)>,
    /// per ordered pair (k, l), k < l: sums of xy, x^2 y, x y^2, x^2 y^2
    cross: BTreeMap<(usize, usize), (u128, u128, u128, u128)>,
    laws: BTreeMap<usize, EmpiricalLaw>,
}

impl Merge for JointAcc {
    fn merge(&mut self, other: Self) {
        for (k, (s, s2)) in other.sums {
            let e = self.sums.entry(k).or_default();
            e.0 += s;
            e.1 += s2;
        }
        for (key, (a, b, c, d)) in other.cross {
            let e = self.cross.entry(key).or_default();
            e.0 += a;
            e.1 += b;
            e.2 += c;
            e.3 += d;
        }
        for (k, law) in other.laws {
            self.laws.entry(k).or_default().merge(&law);
        }
    }
}

fn run_poisson_joint(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let lengths = config.length_set.as_bounded().expect("validated bounded").to_vec();
    let reference = PoissonReference::for_model(&config.model)?;
    let root = config.root_stream();

    let mut records = Vec::new();
    for &n in &config.n_grid {
        let grid_stream = root.child(n as u64);
        let source = WeightSource::for_grid(config, n, grid_stream);
        let cap = census_cap(config, n);
        let lengths_ref = &lengths;
        let acc: JointAcc = replicate(config, n, grid_stream, |acc: &mut JointAcc, rep_stream, scratch| {
            let graph = sample_rep_graph(config, &source, n, rep_stream, scratch);
            let census = rep_census(&graph, cap, scratch);
            let counts: Vec<u64> = lengths_ref
                .iter()
                .map(|&k| census.as_ref().map_or(0, |c| c.count(k)))
                .collect();
            for (&k, &x) in lengths_ref.iter().zip(&counts) {
                let e = acc.sums.entry(k).or_default();
                e.0 += u128::from(x);
                e.1 += u128::from(x) * u128::from(x);
                acc.laws.entry(k).or_default().push(x);
            }
            for i in 0..lengths_ref.len() {
                for j in (i + 1)..lengths_ref.len() {
                    let (x, y) = (u128::from(counts[i]), u128::from(counts[j]));
                    let e = acc.cross.entry((lengths_ref[i], lengths_ref[j])).or_default();
                    e.0 += x * y;
                    e.1 += x * x * y;
                    e.2 += x * y * y;
                    e.3 += x * x * y * y;
                }
            }
        });

        let m = config.reps as f64;
        let mut details = Vec::new();
        let mut means = BTreeMap::new();
        for &k in &lengths {
            let (s, s2) = acc.sums[&k];
            let mean = s as f64 / m;
            let var = ((s2 as f64 / m) - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
            means.insert(k, mean);
            details.push((format!("mean_{k}"), mean));
            details.push((format!("mean_se_{k}"), (var / m).sqrt()));
            details.push((format!("variance_{k}"), var));
            details.push((format!("target_mean_{k}"), reference.lambda(k)));
            if mean > 0.0 {
                details.push((format!("dispersion_{k}"), var / mean));
            }
        }
        let mut primary: Option<(String, Estimate)> = None;
        for (&(k, l), &(sxy, sx2y, sxy2, sx2y2)) in &acc.cross {
            let (a, b) = (means[&k], means[&l]);
            let exy = sxy as f64 / m;
            let cov = exy - a * b;
            // variance of (x - a)(y - b) via raw cross moments
            let ex2y = sx2y as f64 / m;
            let exy2 = sxy2 as f64 / m;
            let ex2y2 = sx2y2 as f64 / m;
            let ex2 = acc.sums[&k].1 as f64 / m;
            let ey2 = acc.sums[&l].1 as f64 / m;
            let e_u2 = ex2y2 - 2.0 * b * ex2y + b * b * ex2 - 2.0 * a * exy2
                + 4.0 * a * b * exy
                - 2.0 * a * b * b * means[&k]
                + a * a * ey2
                - 2.0 * a * a * b * means[&l]
                + a * a * b * b;
            let cov_se = ((e_u2 - cov * cov).max(0.0) / m).sqrt();
            details.push((format!("cov_{k}_{l}"), cov));
            details.push((format!("cov_se_{k}_{l}"), cov_se));
            if primary.is_none() {
                primary = Some((format!("cov_{k}_{l}"), Estimate { value: cov, se: cov_se }));
            }
        }
        let (quantity, primary) = primary.expect("at least two lengths");
        records.push(GridRecord {
            n,
            reps: config.reps,
            quantity,
            primary,
            details,
            guard_ok: true,
        });
    }
    Ok(ExperimentResult {
        scenario: config.scenario,
        records,
        fit: None,
        provenance: provenance(config),
    })
}

// ---------------------------------------------------------------------------
// scenario: rate of TV convergence (bounded or unbounded length set)
// ---------------------------------------------------------------------------

fn run_rate(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let reference = PoissonReference::for_model(&config.model)?;
    let target = match config.length_set.as_bounded() {
        Some(lengths) => reference.lambda_sum(lengths),
        None => reference.total_intensity()?,
    };
    let root = config.root_stream();

    let mut records = Vec::new();
    for &n in &config.n_grid {
        let grid_stream = root.child(n as u64);
        let source = WeightSource::for_grid(config, n, grid_stream);
        let cap = census_cap(config, n);
        let bounded = config.length_set.as_bounded();
        let law: EmpiricalLaw = replicate(config, n, grid_stream, |law: &mut EmpiricalLaw, rep_stream, scratch| {
            let graph = sample_rep_graph(config, &source, n, rep_stream, scratch);
            let count = match rep_census(&graph, cap, scratch) {
                Some(census) => match bounded {
                    Some(lengths) => census.count_in_set(lengths).expect("cap covers set"),
                    None => census.total_cycles(),
                },
                None => 0,
            };
            law.push(count);
        });
        let guard_ok = if bounded.is_none() {
            guard_full_depth(config, &source, n, cap, grid_stream)
        } else {
            true
        };
        let summary = law.summary()?;
        let tv = tv_distance(&law, target)?;
        records.push(GridRecord {
            quantity: "tv".into(),
            n,
            reps: config.reps,
            primary: Estimate { value: tv.value, se: tv.standard_error },
            details: vec![
                ("mean".into(), summary.mean),
                ("mean_se".into(), summary.se),
                ("target_mean".into(), target),
                ("tv".into(), tv.value),
                ("tv_se".into(), tv.standard_error),
                ("census_cap".into(), cap as f64),
            ],
            guard_ok,
        });
    }
    let points: Vec<(usize, f64, f64)> = records
        .iter()
        .map(|r| (r.n, r.primary.value, r.primary.se))
        .collect();
    let fit = Some(fit_rate(&points)?);
    Ok(ExperimentResult {
        scenario: config.scenario,
        records,
        fit,
        provenance: provenance(config),
    })
}

// ---------------------------------------------------------------------------
// scenario: absence of logarithmically long cycles
// ---------------------------------------------------------------------------

fn run_no_long_cycles(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let p = config.model.long_cycle_base().map_err(ConfigError::Model)?;
    let root = config.root_stream();

    let mut records = Vec::new();
    for &n in &config.n_grid {
        let grid_stream = root.child(n as u64);
        let source = WeightSource::for_grid(config, n, grid_stream);
        let threshold = (config.a_log_constant * (n as f64).ln()).floor() as usize;
        let law: EmpiricalLaw = replicate(config, n, grid_stream, |law: &mut EmpiricalLaw, rep_stream, scratch| {
            let graph = sample_rep_graph(config, &source, n, rep_stream, scratch);
            let long = match rep_census(&graph, n, scratch) {
                // a threshold below 3 counts every cycle
                Some(census) => census
                    .counts_by_length()
                    .keys()
                    .any(|&k| k > threshold),
                None => false,
            };
            law.push(u64::from(long));
        });
        let freq = law.frequency(1);
        let se = (freq * (1.0 - freq) / config.reps as f64).sqrt();
        records.push(GridRecord {
            quantity: "frequency".into(),
            n,
            reps: config.reps,
            primary: Estimate { value: freq, se },
            details: vec![
                ("frequency".into(), freq),
                ("frequency_se".into(), se),
                ("threshold".into(), threshold as f64),
                ("decay_base".into(), p),
                ("theoretical_exponent".into(), config.a_log_constant * p.ln()),
                ("theoretical_bound_shape".into(), (n as f64).powf(config.a_log_constant * p.ln())),
            ],
            guard_ok: true,
        });
    }
    Ok(ExperimentResult {
        scenario: config.scenario,
        records,
        fit: None,
        provenance: provenance(config),
    })
}

// ---------------------------------------------------------------------------
// scenario: shortest and longest cycle laws
// ---------------------------------------------------------------------------

#[derive(Default)]
struct ExtremesAcc {
    shortest: EmpiricalLaw,
    longest: EmpiricalLaw,
    both_zero: u64,
    either_zero: u64,
}

impl Merge for ExtremesAcc {
    fn merge(&mut self, other: Self) {
        self.shortest.merge(&other.shortest);
        self.longest.merge(&other.longest);
        self.both_zero += other.both_zero;
        self.either_zero += other.either_zero;
    }
}

fn run_extremes(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let reference = PoissonReference::for_model(&config.model)?;
    let atom = reference.law_shortest(0)?;
    let root = config.root_stream();

    let mut records = Vec::new();
    for &n in &config.n_grid {
        let grid_stream = root.child(n as u64);
        let source = WeightSource::for_grid(config, n, grid_stream);
        let cap = log_cap(n, config.a_log_constant);
        let acc: ExtremesAcc = replicate(config, n, grid_stream, |acc: &mut ExtremesAcc, rep_stream, scratch| {
            let graph = sample_rep_graph(config, &source, n, rep_stream, scratch);
            let (s, l) = match rep_census(&graph, cap, scratch) {
                Some(census) => census.shortest_longest(),
                None => (0, 0),
            };
            acc.shortest.push(s as u64);
            acc.longest.push(l as u64);
            acc.both_zero += u64::from(s == 0 && l == 0);
            acc.either_zero += u64::from(s == 0 || l == 0);
        });
        let guard_ok = guard_full_depth(config, &source, n, cap, grid_stream);

        let sref = reference.clone();
        let dkol_shortest = kolmogorov_distance(&acc.shortest, move |t| {
            let t = t as usize;
            if t < 3 {
                sref.law_shortest(0).unwrap()
            } else {
                sref.law_shortest(t).unwrap()
            }
        })?;
        let lref = reference.clone();
        let dkol_longest = kolmogorov_distance(&acc.longest, move |t| {
            let t = t as usize;
            if t < 3 {
                lref.law_longest(0).unwrap()
            } else {
                lref.law_longest(t).unwrap()
            }
        })?;
        let p0 = acc.shortest.frequency(0);
        let p0_se = (p0 * (1.0 - p0) / config.reps as f64).sqrt();
        let worst = if dkol_shortest.value >= dkol_longest.value {
            dkol_shortest
        } else {
            dkol_longest
        };
        records.push(GridRecord {
            quantity: "dkol_max".into(),
            n,
            reps: config.reps,
            primary: Estimate { value: worst.value, se: worst.standard_error },
            details: vec![
                ("dkol_shortest".into(), dkol_shortest.value),
                ("dkol_shortest_se".into(), dkol_shortest.standard_error),
                ("dkol_longest".into(), dkol_longest.value),
                ("dkol_longest_se".into(), dkol_longest.standard_error),
                ("p_no_cycle".into(), p0),
                ("p_no_cycle_se".into(), p0_se),
                ("target_p_no_cycle".into(), atom),
                ("zero_convention_consistent".into(), f64::from(acc.both_zero == acc.either_zero)),
                ("census_cap".into(), cap as f64),
            ],
            guard_ok,
        });
    }
    Ok(ExperimentResult {
        scenario: config.scenario,
        records,
        fit: None,
        provenance: provenance(config),
    })
}

// ---------------------------------------------------------------------------
// scenario: stochastic domination of the three models
// ---------------------------------------------------------------------------

#[derive(Default)]
struct DominationAcc {
    subset_violations: u64,
    count_violations: u64,
    edges: [u128; 3],
    cycles: [u128; 3],
}

impl Merge for DominationAcc {
    fn merge(&mut self, other: Self) {
        self.subset_violations += other.subset_violations;
        self.count_violations += other.count_violations;
        for i in 0..3 {
            self.edges[i] += other.edges[i];
            self.cycles[i] += other.cycles[i];
        }
    }
}

fn run_domination(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let root = config.root_stream();
    let subcritical = config.model.regime() == Regime::Subcritical;

    let mut records = Vec::new();
    for &n in &config.n_grid {
        let grid_stream = root.child(n as u64);
        let source = WeightSource::for_grid(config, n, grid_stream);
        let cap = if subcritical {
            log_cap(n, config.a_log_constant)
        } else {
            SUPERCRITICAL_CAP.min(n)
        };
        let acc: DominationAcc = replicate(config, n, grid_stream, |acc: &mut DominationAcc, rep_stream, scratch| {
            let weights = source.weights(n, rep_stream, scratch);
            let (grg, nr, cl) = sample_coupled(&weights, rep_stream.child_str("g"));
            if !grg.is_subgraph_of(&nr) || !nr.is_subgraph_of(&cl) {
                acc.subset_violations += 1;
            }
            acc.edges[0] += grg.edge_count() as u128;
            acc.edges[1] += nr.edge_count() as u128;
            acc.edges[2] += cl.edge_count() as u128;
            if n >= 3 {
                let c_grg = scratch.census.run(&grg, cap.clamp(3, n));
                let c_nr = scratch.census.run(&nr, cap.clamp(3, n));
                let c_cl = scratch.census.run(&cl, cap.clamp(3, n));
                // per-length ordering must hold on every sample
                for k in 3..=cap.clamp(3, n) {
                    let (a, b, c) = (c_grg.count(k), c_nr.count(k), c_cl.count(k));
                    if a > b || b > c {
                        acc.count_violations += 1;
                        break;
                    }
                }
                acc.cycles[0] += u128::from(c_grg.total_cycles());
                acc.cycles[1] += u128::from(c_nr.total_cycles());
                acc.cycles[2] += u128::from(c_cl.total_cycles());
            }
        });
        let m = config.reps as f64;
        let total_violations = acc.subset_violations + acc.count_violations;
        records.push(GridRecord {
            quantity: "violation_frequency".into(),
            n,
            reps: config.reps,
            primary: Estimate { value: total_violations as f64 / m, se: 0.0 },
            details: vec![
                ("subset_violations".into(), acc.subset_violations as f64),
                ("count_violations".into(), acc.count_violations as f64),
                ("mean_edges_grg".into(), acc.edges[0] as f64 / m),
                ("mean_edges_nr".into(), acc.edges[1] as f64 / m),
                ("mean_edges_cl".into(), acc.edges[2] as f64 / m),
                ("mean_cycles_grg".into(), acc.cycles[0] as f64 / m),
                ("mean_cycles_nr".into(), acc.cycles[1] as f64 / m),
                ("mean_cycles_cl".into(), acc.cycles[2] as f64 / m),
                ("census_cap".into(), cap as f64),
            ],
            guard_ok: true,
        });
    }
    Ok(ExperimentResult {
        scenario: config.scenario,
        records,
        fit: None,
        provenance: provenance(config),
    })
}

// ---------------------------------------------------------------------------
// scenario: thinned sums (Cramer-Wold device)
// ---------------------------------------------------------------------------

fn run_cramer_wold(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let lengths = config.length_set.as_bounded().expect("validated bounded").to_vec();
    let reference = PoissonReference::for_model(&config.model)?;
    let q = |k: usize| config.thinning.get(&k).copied().unwrap_or(1.0);
    let target: f64 = lengths.iter().map(|&k| q(k) * reference.lambda(k)).sum();
    let root = config.root_stream();

    let mut records = Vec::new();
    for &n in &config.n_grid {
        let grid_stream = root.child(n as u64);
        let source = WeightSource::for_grid(config, n, grid_stream);
        let cap = census_cap(config, n);
        let lengths_ref = &lengths;
        let law: EmpiricalLaw = replicate(config, n, grid_stream, |law: &mut EmpiricalLaw, rep_stream, scratch| {
            let graph = sample_rep_graph(config, &source, n, rep_stream, scratch);
            let census = rep_census(&graph, cap, scratch);
            let mut rng = rep_stream.child_str("thin").rng();
            let mut total = 0u64;
            for &k in lengths_ref {
                let count = census.as_ref().map_or(0, |c| c.count(k));
                total += crate::stats::thin(count, q(k), &mut rng).expect("validated q");
            }
            law.push(total);
        });
        let summary = law.summary()?;
        let tv = tv_distance(&law, target)?;
        records.push(GridRecord {
            quantity: "tv".into(),
            n,
            reps: config.reps,
            primary: Estimate { value: tv.value, se: tv.standard_error },
            details: vec![
                ("mean".into(), summary.mean),
                ("mean_se".into(), summary.se),
                ("target_mean".into(), target),
                ("tv".into(), tv.value),
                ("tv_se".into(), tv.standard_error),
            ],
            guard_ok: true,
        });
    }
    Ok(ExperimentResult {
        scenario: config.scenario,
        records,
        fit: None,
        provenance: provenance(config),
    })
}

// ---------------------------------------------------------------------------
// scenario: Stein-Chen bound evaluation
// ---------------------------------------------------------------------------

fn run_bounds(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let lengths = config.length_set.as_bounded().expect("validated bounded").to_vec();
    let root = config.root_stream();

    let mut records = Vec::new();
    for &n in &config.n_grid {
        let grid_stream = root.child(n as u64);
        let inputs = match config.model {
            WeightModel::Constant(c) => exact_inputs_constant(c, n, &lengths)?,
            _ => mc_inputs(&config.model, n, &lengths, config.reps, grid_stream.child_str("inputs"))?,
        };
        let mut report: SteinChenReport = tv_bound(&config.model, n, &lengths, &inputs)?;
        report.variant = config.variant;

        // conditional neighborhood sums on a quenched weight vector
        let weights = match config.model {
            WeightModel::Constant(c) => WeightVector::new(vec![c; n]),
            _ => config.model.sample(n, grid_stream.child_str("quench")),
        };
        let mut mc_se = 0.0f64;
        if n <= EXACT_LIMIT {
            report.b1 = b1_exact(&weights, &lengths, config.variant)?;
            report.b2 = b2_exact(&weights, &lengths, config.variant)?;
            if matches!(config.model, WeightModel::Constant(_)) {
                report.method = Method::ExactSmallN;
            }
        } else {
            let e1 = b1_mc(&weights, &lengths, config.variant, config.reps, grid_stream.child_str("b1"))?;
            let e2 = b2_mc(&weights, &lengths, config.variant, config.reps, grid_stream.child_str("b2"))?;
            report.b1 = e1.value;
            report.b2 = e2.value;
            mc_se = e1.se.max(e2.se);
            let prior_se = match report.method {
                Method::MonteCarlo { standard_error, .. } => standard_error,
                Method::ExactSmallN => 0.0,
            };
            report.method = Method::MonteCarlo {
                reps: config.reps,
                standard_error: prior_se.max(mc_se),
            };
        }

        let (method_exact, method_se) = match report.method {
            Method::ExactSmallN => (1.0, 0.0),
            Method::MonteCarlo { standard_error, .. } => (0.0, standard_error.max(mc_se)),
        };
        records.push(GridRecord {
            quantity: "total_bound".into(),
            n,
            reps: config.reps,
            primary: Estimate { value: report.total_bound, se: method_se },
            details: vec![
                ("b1".into(), report.b1),
                ("b2".into(), report.b2),
                ("b3".into(), report.b3.value()),
                ("summand1".into(), report.summand1),
                ("summand2".into(), report.summand2),
                ("summand3".into(), report.summand3),
                ("total_bound".into(), report.total_bound),
                ("vacuous".into(), f64::from(report.vacuous)),
                ("method_exact".into(), method_exact),
                ("method_se".into(), method_se),
            ],
            guard_ok: true,
        });
    }
    Ok(ExperimentResult {
        scenario: config.scenario,
        records,
        fit: None,
        provenance: provenance(config),
    })
}

/// Least squares of `ln(estimate)` on `ln(n)`. Needs at least three points
/// with positive estimates.
pub fn fit_rate(points: &[(usize, f64, f64)]) -> Result<RateFit, RunError> {
    assert!(points.len() >= 3, "rate fit needs at least 3 points");
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, estimate, _se) in points {
        if estimate <= 0.0 {
            return Err(RunError::NonPositiveEstimate { n, value: estimate });
        }
        xs.push((n as f64).ln());
        ys.push(estimate.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();
    Ok(RateFit { slope, intercept, residuals })
}
