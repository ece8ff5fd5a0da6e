//! Flat dotted-key config files and command-line overrides.
//!
//! The format is one `key = value` per line, `#` comments, values either bare
//! or double-quoted, lists comma-separated. Unknown keys are a hard error:
//! a typo like `weigth.c` must fail the run, not silently default.

use grgc::graph::ModelKind;
use grgc::harness::{ExperimentConfig, LengthSet, Scenario};
use grgc::steinchen::BVariant;
use grgc::weights::WeightModel;
use std::collections::BTreeMap;
use std::fmt;

/// Assert thresholds with per-scenario defaults; `assert.*` keys override.
#[derive(Debug, Clone)]
pub struct AssertConfig {
    pub mean_se: f64,
    pub tv_max: f64,
    pub dispersion_min: f64,
    pub dispersion_max: f64,
    pub cov_se: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    pub monotone_se: f64,
    pub freq_max: f64,
    pub dkol_max: f64,
    pub p0_se: f64,
    pub violations_max: f64,
}

impl Default for AssertConfig {
    fn default() -> Self {
        AssertConfig {
            mean_se: 3.0,
            tv_max: 0.01,
            dispersion_min: 0.9,
            dispersion_max: 1.1,
            cov_se: 3.0,
            slope_min: -1.6,
            slope_max: -0.4,
            monotone_se: 2.0,
            freq_max: 5e-4,
            dkol_max: 0.01,
            p0_se: 3.0,
            violations_max: 0.0,
        }
    }
}

/// Extra knobs that live beside the experiment config.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub sampler_naive: bool,
    pub full_scan: bool,
    pub asserts: AssertConfig,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { sampler_naive: false, full_scan: false, asserts: AssertConfig::default() }
    }
}

#[derive(Debug)]
pub struct ConfigFileError {
    pub message: String,
}

impl fmt::Display for ConfigFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigFileError {}

fn err(message: impl Into<String>) -> ConfigFileError {
    ConfigFileError { message: message.into() }
}

/// Raw key-value pairs in file order (later entries win).
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    entries: Vec<(String, String)>,
}

impl RawConfig {
    pub fn parse_file(text: &str) -> Result<RawConfig, ConfigFileError> {
        let mut raw = RawConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected `key = value`", lineno + 1)))?;
            raw.push(key.trim(), value.trim())?;
        }
        Ok(raw)
    }

    pub fn push(&mut self, key: &str, value: &str) -> Result<(), ConfigFileError> {
        if key.is_empty() {
            return Err(err("empty key"));
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    pub fn push_override(&mut self, assignment: &str) -> Result<(), ConfigFileError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| err(format!("override `{assignment}` is not key=value")))?;
        self.push(key.trim(), value.trim())
    }
}

/// Consume raw entries into typed settings, rejecting unknown keys and keys
/// that do not apply to the chosen weight kind.
pub struct TypedConfig {
    pub experiment: ExperimentConfig,
    pub settings: RunSettings,
    pub scenario_given: Option<Scenario>,
}

struct WeightParams {
    kind: Option<String>,
    params: BTreeMap<&'static str, f64>,
}

const WEIGHT_PARAM_KEYS: [&str; 7] = ["c", "v1", "v2", "prob", "rate", "shape", "scale"];

pub fn build_config(
    raw: &RawConfig,
    default_scenario: Scenario,
    defaults: ExperimentConfig,
) -> Result<TypedConfig, ConfigFileError> {
    let mut experiment = defaults;
    let mut settings = RunSettings::default();
    let mut scenario_given = None;
    let mut weight = WeightParams { kind: None, params: BTreeMap::new() };
    let mut tail_index: Option<f64> = None;
    let mut seen_weight_key = false;

    let parse_f64 = |key: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| err(format!("key `{key}`: `{v}` is not a number")))
    };
    let parse_u64 = |key: &str, v: &str| {
        v.parse::<u64>()
            .map_err(|_| err(format!("key `{key}`: `{v}` is not a nonnegative integer")))
    };
    let parse_bool = |key: &str, v: &str| match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(err(format!("key `{key}`: `{v}` is not a boolean"))),
    };

    for (key, value) in &raw.entries {
        match key.as_str() {
            "scenario" => {
                let sc = Scenario::parse(value)
                    .ok_or_else(|| err(format!("key `scenario`: unknown scenario `{value}`")))?;
                scenario_given = Some(sc);
                experiment.scenario = sc;
            }
            "weight.kind" => {
                weight.kind = Some(value.clone());
                seen_weight_key = true;
            }
            "weight.tail_index" => {
                tail_index = Some(parse_f64(key, value)?);
                seen_weight_key = true;
            }
            k if k.strip_prefix("weight.").is_some_and(|p| WEIGHT_PARAM_KEYS.contains(&p)) => {
                let param = k.strip_prefix("weight.").unwrap();
                let param = WEIGHT_PARAM_KEYS
                    .iter()
                    .find(|&&p| p == param)
                    .expect("matched above");
                weight.params.insert(param, parse_f64(key, value)?);
                seen_weight_key = true;
            }
            "graph.kind" => {
                experiment.graph_kind = ModelKind::parse(value)
                    .ok_or_else(|| err(format!("key `graph.kind`: unknown model `{value}`")))?;
            }
            "n_grid" => {
                let mut grid = Vec::new();
                for piece in value.split(',') {
                    let piece = piece.trim();
                    grid.push(piece.parse::<usize>().map_err(|_| {
                        err(format!("key `n_grid`: `{piece}` is not a positive integer"))
                    })?);
                }
                experiment.n_grid = grid;
            }
            "reps" => experiment.reps = parse_u64(key, value)?,
            "length_set" => {
                experiment.length_set = if value == "all" || value == "all-from-3" {
                    LengthSet::AllFrom3
                } else {
                    let mut lengths = Vec::new();
                    for piece in value.split(',') {
                        let piece = piece.trim();
                        lengths.push(piece.parse::<usize>().map_err(|_| {
                            err(format!("key `length_set`: `{piece}` is not an integer"))
                        })?);
                    }
                    lengths.sort_unstable();
                    lengths.dedup();
                    LengthSet::Set(lengths)
                };
            }
            "a_log_constant" => experiment.a_log_constant = parse_f64(key, value)?,
            "master_seed" => experiment.master_seed = parse_u64(key, value)?,
            "workers" => experiment.workers = parse_u64(key, value)? as usize,
            "quenched" => experiment.quenched = parse_bool(key, value)?,
            "variant" => {
                experiment.variant = match value.as_str() {
                    "edge-sharing" | "edge" => BVariant::EdgeSharing,
                    "vertex-sharing" | "vertex" => BVariant::VertexSharing,
                    other => {
                        return Err(err(format!("key `variant`: unknown variant `{other}`")));
                    }
                };
            }
            "sampler" => {
                settings.sampler_naive = match value.as_str() {
                    "naive" => true,
                    "fast" => false,
                    other => return Err(err(format!("key `sampler`: unknown sampler `{other}`"))),
                };
            }
            "full_scan" => settings.full_scan = parse_bool(key, value)?,
            k if k.starts_with("thin.") => {
                let suffix = &k[5..];
                let length: usize = suffix.parse().map_err(|_| {
                    err(format!("key `{k}`: thinning keys look like thin.<length>"))
                })?;
                experiment.thinning.insert(length, parse_f64(key, value)?);
            }
            k if k.starts_with("assert.") => {
                let v = parse_f64(key, value)?;
                let a = &mut settings.asserts;
                match &k[7..] {
                    "mean_se" => a.mean_se = v,
                    "tv_max" => a.tv_max = v,
                    "dispersion_min" => a.dispersion_min = v,
                    "dispersion_max" => a.dispersion_max = v,
                    "cov_se" => a.cov_se = v,
                    "slope_min" => a.slope_min = v,
                    "slope_max" => a.slope_max = v,
                    "monotone_se" => a.monotone_se = v,
                    "freq_max" => a.freq_max = v,
                    "dkol_max" => a.dkol_max = v,
                    "p0_se" => a.p0_se = v,
                    "violations_max" => a.violations_max = v,
                    other => {
                        return Err(err(format!("unknown config key `assert.{other}`")));
                    }
                }
            }
            other => return Err(err(format!("unknown config key `{other}`"))),
        }
    }

    if seen_weight_key {
        experiment.model = build_weight_model(&weight, tail_index)?;
    }
    if scenario_given.is_none() {
        experiment.scenario = default_scenario;
    }
    Ok(TypedConfig { experiment, settings, scenario_given })
}

fn build_weight_model(
    weight: &WeightParams,
    tail_index: Option<f64>,
) -> Result<WeightModel, ConfigFileError> {
    let kind = weight
        .kind
        .as_deref()
        .ok_or_else(|| err("weight parameters given without `weight.kind`"))?;
    let get = |name: &'static str| {
        weight
            .params
            .get(name)
            .copied()
            .ok_or_else(|| err(format!("weight kind `{kind}` needs `weight.{name}`")))
    };
    let allowed: &[&str] = match kind {
        "constant" => &["c"],
        "two-point" => &["v1", "v2", "prob"],
        "exponential" => &["rate"],
        "gamma" => &["shape", "scale"],
        "pareto" => &["scale"],
        other => return Err(err(format!("key `weight.kind`: unknown kind `{other}`"))),
    };
    for given in weight.params.keys() {
        if !allowed.contains(given) {
            return Err(err(format!(
                "key `weight.{given}` does not apply to weight kind `{kind}`"
            )));
        }
    }
    if tail_index.is_some() && kind != "pareto" {
        return Err(err(format!(
            "key `weight.tail_index` does not apply to weight kind `{kind}`"
        )));
    }
    let model = match kind {
        "constant" => WeightModel::Constant(get("c")?),
        "two-point" => WeightModel::TwoPoint { v1: get("v1")?, v2: get("v2")?, prob: get("prob")? },
        "exponential" => WeightModel::Exponential { rate: get("rate")? },
        "gamma" => WeightModel::Gamma { shape: get("shape")?, scale: get("scale")? },
        "pareto" => WeightModel::Pareto {
            scale: get("scale")?,
            tail_index: tail_index
                .ok_or_else(|| err("weight kind `pareto` needs `weight.tail_index`"))?,
        },
        _ => unreachable!("kind validated above"),
    };
    model
        .validate()
        .map_err(|e| err(format!("invalid weight model: {e}")))?;
    Ok(model)
}
