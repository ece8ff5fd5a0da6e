//! Result serialization (JSON and CSV) and threshold evaluation.
//!
//! Every float is written with 17 significant digits so the decimal text
//! round-trips the underlying double exactly; the CSV and JSON writers share
//! the formatter, which is what makes cross-format number equality testable.

use crate::config::AssertConfig;
use grgc::harness::{ExperimentResult, GridRecord, Scenario};

/// 17-significant-digit scientific notation; round-trips f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Outcome of one threshold check.
#[derive(Debug, Clone)]
pub struct AssertOutcome {
    pub name: String,
    pub pass: bool,
    pub observed: f64,
    pub threshold: f64,
}

/// The per-grid-point CSV: `n,estimate,se,reps` rows.
pub fn result_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("n,estimate,se,reps\n");
    for r in &result.records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            fmt_f64(r.primary.value),
            fmt_f64(r.primary.se),
            r.reps
        ));
    }
    out
}

/// The full result document.
pub fn result_json(result: &ExperimentResult, asserts: Option<&[AssertOutcome]>) -> String {
    let mut out = String::from("{\n");
    out.push_str("  \"schema\": \"grgc-result-v1\",\n");
    out.push_str(&format!("  \"scenario\": \"{}\",\n", result.scenario));
    out.push_str(&format!("  \"config_hash\": {},\n", result.provenance.config_hash));
    out.push_str(&format!("  \"master_seed\": {},\n", result.provenance.master_seed));
    out.push_str(&format!(
        "  \"code_version\": \"{}\",\n",
        json_escape(&result.provenance.code_version)
    ));
    out.push_str(&format!(
        "  \"config\": \"{}\",\n",
        json_escape(&result.provenance.config_echo)
    ));
    let model = result
        .provenance
        .config_echo
        .split(';')
        .find_map(|kv| kv.strip_prefix("model="))
        .unwrap_or("unknown")
        .to_string();
    out.push_str("  \"records\": [\n");
    for (i, r) in result.records.iter().enumerate() {
        out.push_str(&record_json(r, &model, result.provenance.master_seed, "    "));
        out.push_str(if i + 1 < result.records.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ],\n");
    match &result.fit {
        Some(fit) => {
            out.push_str("  \"fit\": {\n");
            out.push_str(&format!("    \"slope\": {},\n", fmt_f64(fit.slope)));
            out.push_str(&format!("    \"intercept\": {},\n", fmt_f64(fit.intercept)));
            let residuals: Vec<String> = fit.residuals.iter().map(|&r| fmt_f64(r)).collect();
            out.push_str(&format!("    \"residuals\": [{}]\n", residuals.join(", ")));
            out.push_str("  }");
        }
        None => out.push_str("  \"fit\": null"),
    }
    match asserts {
        Some(outcomes) => {
            out.push_str(",\n  \"asserts\": [\n");
            for (i, a) in outcomes.iter().enumerate() {
                out.push_str(&format!(
                    "    {{\"name\": \"{}\", \"pass\": {}, \"observed\": {}, \"threshold\": {}}}",
                    json_escape(&a.name),
                    a.pass,
                    fmt_f64(a.observed),
                    fmt_f64(a.threshold)
                ));
                out.push_str(if i + 1 < outcomes.len() { ",\n" } else { "\n" });
            }
            out.push_str("  ]\n");
        }
        None => out.push_str(",\n  \"asserts\": null\n"),
    }
    out.push_str("}\n");
    out
}

fn record_json(r: &GridRecord, model: &str, seed: u64, indent: &str) -> String {
    let mut out = format!("{indent}{{\n");
    out.push_str(&format!("{indent}  \"n\": {},\n", r.n));
    out.push_str(&format!("{indent}  \"model\": \"{}\",\n", json_escape(model)));
    out.push_str(&format!("{indent}  \"quantity\": \"{}\",\n", json_escape(&r.quantity)));
    out.push_str(&format!("{indent}  \"estimate\": {},\n", fmt_f64(r.primary.value)));
    out.push_str(&format!("{indent}  \"se\": {},\n", fmt_f64(r.primary.se)));
    out.push_str(&format!("{indent}  \"reps\": {},\n", r.reps));
    out.push_str(&format!("{indent}  \"seed\": {},\n", seed));
    out.push_str(&format!("{indent}  \"guard_ok\": {},\n", r.guard_ok));
    out.push_str(&format!("{indent}  \"details\": {{\n"));
    for (i, (name, value)) in r.details.iter().enumerate() {
        out.push_str(&format!(
            "{indent}    \"{}\": {}{}\n",
            json_escape(name),
            fmt_f64(*value),
            if i + 1 < r.details.len() { "," } else { "" }
        ));
    }
    out.push_str(&format!("{indent}  }}\n"));
    out.push_str(&format!("{indent}}}"));
    out
}

/// Evaluate the scenario's acceptance thresholds against the records.
pub fn evaluate_asserts(result: &ExperimentResult, a: &AssertConfig) -> Vec<AssertOutcome> {
    let mut outcomes = Vec::new();
    let mut check = |name: String, pass: bool, observed: f64, threshold: f64| {
        outcomes.push(AssertOutcome { name, pass, observed, threshold });
    };
    let guard_all = result.records.iter().all(|r| r.guard_ok);
    match result.scenario {
        Scenario::PoissonFixedK => {
            for r in &result.records {
                let mean = r.detail("mean").unwrap_or(f64::NAN);
                let se = r.detail("mean_se").unwrap_or(f64::NAN);
                let target = r.detail("target_mean").unwrap_or(f64::NAN);
                check(
                    format!("mean_within_{}se_n{}", a.mean_se, r.n),
                    (mean - target).abs() <= a.mean_se * se,
                    mean,
                    target,
                );
                if let Some(d) = r.detail("dispersion") {
                    check(
                        format!("dispersion_n{}", r.n),
                        (a.dispersion_min..=a.dispersion_max).contains(&d),
                        d,
                        a.dispersion_max,
                    );
                }
                check(
                    format!("tv_n{}", r.n),
                    r.detail("tv").unwrap_or(f64::NAN) <= a.tv_max,
                    r.detail("tv").unwrap_or(f64::NAN),
                    a.tv_max,
                );
            }
        }
        Scenario::PoissonJoint => {
            for r in &result.records {
                for (name, value) in &r.details {
                    if let Some(rest) = name.strip_prefix("cov_") {
                        if rest.starts_with("se") {
                            continue;
                        }
                        let se = r.detail(&format!("cov_se_{rest}")).unwrap_or(f64::NAN);
                        check(
                            format!("cov_{rest}_within_{}se_n{}", a.cov_se, r.n),
                            value.abs() <= a.cov_se * se,
                            *value,
                            a.cov_se * se,
                        );
                    }
                    if let Some(k) = name.strip_prefix("mean_") {
                        if k.starts_with("se") {
                            continue;
                        }
                        let se = r.detail(&format!("mean_se_{k}")).unwrap_or(f64::NAN);
                        let target = r.detail(&format!("target_mean_{k}")).unwrap_or(f64::NAN);
                        check(
                            format!("mean_{k}_within_{}se_n{}", a.mean_se, r.n),
                            (value - target).abs() <= a.mean_se * se,
                            *value,
                            target,
                        );
                    }
                }
            }
        }
        Scenario::RateBounded | Scenario::RateUnbounded => {
            for pair in result.records.windows(2) {
                let (lo, hi) = (&pair[0], &pair[1]);
                let combined = (lo.primary.se.powi(2) + hi.primary.se.powi(2)).sqrt();
                check(
                    format!("tv_nonincreasing_{}_{}", lo.n, hi.n),
                    hi.primary.value <= lo.primary.value + a.monotone_se * combined,
                    hi.primary.value - lo.primary.value,
                    a.monotone_se * combined,
                );
            }
            if let Some(fit) = &result.fit {
                check(
                    "slope_in_band".to_string(),
                    (a.slope_min..=a.slope_max).contains(&fit.slope),
                    fit.slope,
                    a.slope_max,
                );
            }
            check("guard_ok".to_string(), guard_all, f64::from(guard_all), 1.0);
        }
        Scenario::NoLongCycles => {
            for r in &result.records {
                check(
                    format!("long_cycle_freq_n{}", r.n),
                    r.primary.value <= a.freq_max,
                    r.primary.value,
                    a.freq_max,
                );
            }
        }
        Scenario::Extremes => {
            for r in &result.records {
                for which in ["shortest", "longest"] {
                    let d = r.detail(&format!("dkol_{which}")).unwrap_or(f64::NAN);
                    check(format!("dkol_{which}_n{}", r.n), d <= a.dkol_max, d, a.dkol_max);
                }
                let p0 = r.detail("p_no_cycle").unwrap_or(f64::NAN);
                let p0_se = r.detail("p_no_cycle_se").unwrap_or(f64::NAN);
                let target = r.detail("target_p_no_cycle").unwrap_or(f64::NAN);
                check(
                    format!("p_no_cycle_within_{}se_n{}", a.p0_se, r.n),
                    (p0 - target).abs() <= a.p0_se * p0_se,
                    p0,
                    target,
                );
                check(
                    format!("zero_convention_n{}", r.n),
                    r.detail("zero_convention_consistent") == Some(1.0),
                    r.detail("zero_convention_consistent").unwrap_or(0.0),
                    1.0,
                );
            }
            check("guard_ok".to_string(), guard_all, f64::from(guard_all), 1.0);
        }
        Scenario::Domination => {
            for r in &result.records {
                let violations = r.detail("subset_violations").unwrap_or(f64::NAN)
                    + r.detail("count_violations").unwrap_or(f64::NAN);
                check(
                    format!("violations_n{}", r.n),
                    violations <= a.violations_max,
                    violations,
                    a.violations_max,
                );
            }
        }
        Scenario::CramerWold => {
            for r in &result.records {
                let mean = r.detail("mean").unwrap_or(f64::NAN);
                let se = r.detail("mean_se").unwrap_or(f64::NAN);
                let target = r.detail("target_mean").unwrap_or(f64::NAN);
                check(
                    format!("mean_within_{}se_n{}", a.mean_se, r.n),
                    (mean - target).abs() <= a.mean_se * se,
                    mean,
                    target,
                );
                check(
                    format!("tv_n{}", r.n),
                    r.detail("tv").unwrap_or(f64::NAN) <= a.tv_max,
                    r.detail("tv").unwrap_or(f64::NAN),
                    a.tv_max,
                );
            }
        }
        Scenario::BoundsCheck => {
            for r in &result.records {
                for s in ["summand1", "summand2", "summand3"] {
                    let v = r.detail(s).unwrap_or(f64::NAN);
                    check(format!("{s}_nonnegative_n{}", r.n), v >= 0.0, v, 0.0);
                }
            }
            for pair in result.records.windows(2) {
                let (lo, hi) = (&pair[0], &pair[1]);
                let (s_lo, s_hi) = (
                    lo.detail("summand3").unwrap_or(f64::NAN),
                    hi.detail("summand3").unwrap_or(f64::NAN),
                );
                check(
                    format!("summand3_decreasing_{}_{}", lo.n, hi.n),
                    s_hi < s_lo,
                    s_hi,
                    s_lo,
                );
            }
        }
    }
    outcomes
}
