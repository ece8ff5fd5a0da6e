//! The limiting Poisson point process of cycle counts.
//!
//! Cycle counts converge to independent Poisson variables with intensity
//! `lambda_k = rho^k / (2k)` where `rho = E[W^2] / E[W]`. In the subcritical
//! regime (`rho < 1`) the total intensity is finite, which yields closed-form
//! laws for the shortest and longest cycle length: both live on `{0, 3, 4, ...}`
//! with a shared atom at zero.
//!
//! Tail sums use the identity `sum_{k>=1} rho^k / k = -ln(1 - rho)` minus the
//! finitely many leading terms, so no truncation error enters the laws.

use crate::rng::StreamRng;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

#[derive(Debug, Clone, PartialEq)]
pub enum PoissonError {
    /// Tail sums diverge at or above the critical ratio.
    DivergentTail { rho: f64 },
    /// The extreme-cycle laws place no mass on lengths 1 and 2.
    UnsupportedPoint { t: usize },
    /// Construction requires a positive finite ratio.
    InvalidRho { rho: f64 },
}

impl fmt::Display for PoissonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoissonError::DivergentTail { rho } => {
                write!(f, "intensity tail diverges for rho = {rho} >= 1")
            }
            PoissonError::UnsupportedPoint { t } => {
                write!(f, "extreme-cycle laws have no mass at t = {t}; use 0 or t >= 3")
            }
            PoissonError::InvalidRho { rho } => write!(f, "rho must be positive and finite, got {rho}"),
        }
    }
}

impl std::error::Error for PoissonError {}

/// Intensity reference for the limit process: the ratio `rho`, cached
/// intensities, and the cutoff beyond which the geometric remainder of the
/// tail drops below 1e-12 (subcritical only).
#[derive(Debug, Clone)]
pub struct PoissonReference {
    rho: f64,
    lambda_cache: Vec<f64>,
    tail_cutoff: Option<usize>,
}

impl PoissonReference {
    pub fn new(rho: f64) -> Result<Self, PoissonError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(PoissonError::InvalidRho { rho });
        }
        // remainder after K terms is below rho^(K+1) / ((2K+2)(1-rho))
        let tail_cutoff = (rho < 1.0).then(|| {
            let mut k = 3usize;
            while rho.powi(k as i32 + 1) / ((2 * k + 2) as f64 * (1.0 - rho)) >= 1e-12 {
                k += 1;
            }
            k
        });
        let cache_len = tail_cutoff.map_or(64, |c| c.max(64)) + 1;
        let lambda_cache = (0..cache_len)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    rho.powi(k as i32) / (2.0 * k as f64)
                }
            })
            .collect();
        Ok(PoissonReference { rho, lambda_cache, tail_cutoff })
    }

    /// Build from a weight model's exact moments.
    pub fn for_model(model: &crate::weights::WeightModel) -> Result<Self, PoissonError> {
        let rho = model.rho().map_err(|_| PoissonError::InvalidRho { rho: f64::INFINITY })?;
        Self::new(rho)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Cutoff used by the truncated cross-check path; `None` when `rho >= 1`.
    pub fn tail_cutoff(&self) -> Option<usize> {
        self.tail_cutoff
    }

    /// Intensity at length `k >= 1`: `rho^k / (2k)`.
    pub fn lambda(&self, k: usize) -> f64 {
        assert!(k >= 1, "lambda is defined for k >= 1");
        self.lambda_cache
            .get(k)
            .copied()
            .unwrap_or_else(|| self.rho.powi(k as i32) / (2.0 * k as f64))
    }

    /// Sum of intensities over a finite set of lengths.
    pub fn lambda_sum(&self, lengths: &[usize]) -> f64 {
        lengths.iter().map(|&k| self.lambda(k)).sum()
    }

    /// `sum_{k >= from_k} lambda_k`, in closed form. Requires `rho < 1`.
    pub fn lambda_tail(&self, from_k: usize) -> Result<f64, PoissonError> {
        if self.rho >= 1.0 {
            return Err(PoissonError::DivergentTail { rho: self.rho });
        }
        assert!(from_k >= 1, "tail starts at k >= 1");
        let mut head = 0.0;
        for k in 1..from_k {
            head += self.rho.powi(k as i32) / k as f64;
        }
        Ok(((-(1.0 - self.rho).ln()) - head) / 2.0)
    }

    /// Total intensity `sum_{k >= 3} lambda_k`; the atom of the extreme-cycle
    /// laws at zero is `exp(-total_intensity())`.
    pub fn total_intensity(&self) -> Result<f64, PoissonError> {
        self.lambda_tail(3)
    }

    /// CDF of the limiting shortest-cycle length at integer `t`; defined for
    /// `t = 0` (the no-cycle atom) and `t >= 3`.
    pub fn law_shortest(&self, t: usize) -> Result<f64, PoissonError> {
        let atom = (-self.total_intensity()?).exp();
        match t {
            0 => Ok(atom),
            1 | 2 => Err(PoissonError::UnsupportedPoint { t }),
            _ => {
                let head: f64 = (3..=t).map(|k| self.lambda(k)).sum();
                Ok(atom + 1.0 - (-head).exp())
            }
        }
    }

    /// CDF of the limiting longest-cycle length at integer `t`; defined for
    /// `t = 0` and `t >= 3`.
    pub fn law_longest(&self, t: usize) -> Result<f64, PoissonError> {
        match t {
            0 => Ok((-self.total_intensity()?).exp()),
            1 | 2 => Err(PoissonError::UnsupportedPoint { t }),
            _ => Ok((-self.lambda_tail(t + 1)?).exp()),
        }
    }

    /// Sample the limit process: independent Poisson(lambda_k) counts.
    ///
    /// With `max_k = Some(m)` only lengths `3..=m` are drawn. `None` draws the
    /// full process (requires `rho < 1`): the total count is Poisson with the
    /// full tail intensity and each point is then placed by the normalized
    /// discrete law, so no intensity mass is dropped.
    pub fn sample_eta(
        &self,
        max_k: Option<usize>,
        rng: &mut StreamRng,
    ) -> Result<BTreeMap<usize, u64>, PoissonError> {
        let mut counts = BTreeMap::new();
        match max_k {
            Some(m) => {
                for k in 3..=m {
                    let lam = self.lambda(k);
                    let draw = Poisson::new(lam).expect("positive intensity").sample(rng) as u64;
                    if draw > 0 {
                        counts.insert(k, draw);
                    }
                }
            }
            None => {
                let total_intensity = self.total_intensity()?;
                let total =
                    Poisson::new(total_intensity).expect("positive intensity").sample(rng) as u64;
                for _ in 0..total {
                    let mut u: f64 = rng.random::<f64>() * total_intensity;
                    let mut k = 3;
                    loop {
                        let lam = self.lambda(k);
                        if u < lam || k > 10_000 {
                            break;
                        }
                        u -= lam;
                        k += 1;
                    }
                    *counts.entry(k).or_insert(0) += 1;
                }
            }
        }
        Ok(counts)
    }
}

/// Poisson probability mass `e^{-mu} mu^j / j!`, computed in log space.
pub fn poisson_pmf(mu: f64, j: u64) -> f64 {
    assert!(mu >= 0.0, "mean must be nonnegative");
    if mu == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    ((j as f64) * mu.ln() - mu - ln_factorial(j)).exp()
}

/// Poisson CDF `P(X <= j)` by pmf summation.
pub fn poisson_cdf(mu: f64, j: u64) -> f64 {
    (0..=j).map(|i| poisson_pmf(mu, i)).sum::<f64>().min(1.0)
}

/// Total variation between two Poisson laws is at most the difference of
/// their means.
pub fn tv_poisson_poisson_bound(lam: f64, mu: f64) -> f64 {
    assert!(lam >= 0.0 && mu >= 0.0);
    (lam - mu).abs()
}

static LN_FACTORIAL_TABLE: LazyLock<Vec<f64>> = LazyLock::new(|| {
    let mut table = Vec::with_capacity(1024);
    table.push(0.0);
    let mut acc = 0.0f64;
    for j in 1..1024u64 {
        acc += (j as f64).ln();
        table.push(acc);
    }
    table
});

/// `ln(j!)`: exact cumulative sums below 1024, Stirling series above.
pub fn ln_factorial(j: u64) -> f64 {
    if let Some(&v) = LN_FACTORIAL_TABLE.get(j as usize) {
        return v;
    }
    let x = (j + 1) as f64;
    // Stirling series for ln Gamma(x)
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn partial_tail(rho: f64, from_k: usize, up_to: usize) -> f64 {
        (from_k..=up_to).map(|k| rho.powi(k as i32) / (2.0 * k as f64)).sum()
    }

    #[test]
    fn lambda_examples() {
        let r = PoissonReference::new(0.5).unwrap();
        assert!((r.lambda(3) - 1.0 / 48.0).abs() < 1e-15);
        let r1 = PoissonReference::new(1.0).unwrap();
        assert!((r1.lambda(4) - 0.125).abs() < 1e-15);
        let r9 = PoissonReference::new(0.9).unwrap();
        assert!((r9.lambda(3) - 0.1215).abs() < 1e-15);
    }

    #[test]
    fn lambda_tail_closed_form_vs_partial_sum() {
        for rho in [0.5, 0.9] {
            let r = PoissonReference::new(rho).unwrap();
            let tail = r.lambda_tail(3).unwrap();
            // sum far enough that the geometric remainder is below 1e-12
            let horizon = r.tail_cutoff().unwrap().max(200);
            let partial = partial_tail(rho, 3, horizon);
            assert!(
                (tail - partial).abs() <= 1e-12,
                "rho={rho}: closed {tail} vs partial {partial}"
            );
        }
        let r = PoissonReference::new(0.5).unwrap();
        assert!((r.lambda_tail(3).unwrap() - 0.03407359027997265).abs() < 1e-12);
        let r9 = PoissonReference::new(0.9).unwrap();
        assert!((r9.lambda_tail(3).unwrap() - 0.49879254649702285).abs() < 1e-12);
    }

    #[test]
    fn lambda_tail_diverges_at_critical() {
        let r = PoissonReference::new(1.0).unwrap();
        assert!(matches!(r.lambda_tail(3), Err(PoissonError::DivergentTail { .. })));
        assert!(matches!(r.sample_eta(None, &mut Stream::root(1).rng()),
            Err(PoissonError::DivergentTail { .. })));
    }

    #[test]
    fn tail_differences_recover_lambda() {
        let r = PoissonReference::new(0.77).unwrap();
        for k in 3..40 {
            let diff = r.lambda_tail(k).unwrap() - r.lambda_tail(k + 1).unwrap();
            assert!((diff - r.lambda(k)).abs() <= 1e-12);
        }
    }

    #[test]
    fn extreme_laws_values() {
        let r = PoissonReference::new(0.5).unwrap();
        let p0 = r.law_shortest(0).unwrap();
        assert!((p0 - 0.9665004).abs() < 1e-6);
        assert_eq!(p0, r.law_longest(0).unwrap());
        let l3 = r.law_longest(3).unwrap();
        assert!((l3 - 0.986847).abs() < 1e-6);

        let r9 = PoissonReference::new(0.9).unwrap();
        assert!((r9.law_shortest(0).unwrap() - (-0.49879254649702285f64).exp()).abs() < 1e-14);
        assert!((r9.law_shortest(0).unwrap() - 0.6072635).abs() < 1e-6);
    }

    #[test]
    fn extreme_laws_are_cdfs() {
        for rho in [0.3, 0.5, 0.9, 0.99] {
            let r = PoissonReference::new(rho).unwrap();
            let horizon = r.tail_cutoff().unwrap().max(200);
            let mut prev_s = r.law_shortest(0).unwrap();
            let mut prev_l = r.law_longest(0).unwrap();
            assert_eq!(prev_s, prev_l);
            for t in 3..=horizon {
                let s = r.law_shortest(t).unwrap();
                let l = r.law_longest(t).unwrap();
                assert!(s >= prev_s && s <= 1.0 + 1e-15);
                assert!(l >= prev_l && l <= 1.0 + 1e-15);
                prev_s = s;
                prev_l = l;
            }
            assert!((prev_s - 1.0).abs() < 1e-9, "shortest law mass: {prev_s}");
            assert!((prev_l - 1.0).abs() < 1e-9, "longest law mass: {prev_l}");
        }
    }

    #[test]
    fn extreme_laws_reject_one_and_two() {
        let r = PoissonReference::new(0.5).unwrap();
        for t in [1usize, 2] {
            assert!(matches!(r.law_shortest(t), Err(PoissonError::UnsupportedPoint { .. })));
            assert!(matches!(r.law_longest(t), Err(PoissonError::UnsupportedPoint { .. })));
        }
        let critical = PoissonReference::new(1.3).unwrap();
        assert!(critical.law_shortest(0).is_err());
    }

    #[test]
    fn atom_two_routes_agree() {
        let r = PoissonReference::new(0.9).unwrap();
        let closed = r.law_shortest(0).unwrap();
        let cutoff = r.tail_cutoff().unwrap();
        let truncated = (-partial_tail(0.9, 3, cutoff)).exp();
        assert!(
            (closed - truncated).abs() <= 1e-10,
            "closed {closed} vs truncated {truncated} (cutoff {cutoff})"
        );
    }

    #[test]
    fn pmf_values() {
        assert!((poisson_pmf(1.0, 0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(poisson_pmf(0.0, 0), 1.0);
        assert_eq!(poisson_pmf(0.0, 3), 0.0);
        for mu in [0.25f64, 1.0, 7.5, 40.0] {
            let j_max = (mu + 40.0 * (mu + 1.0).sqrt()) as u64;
            let total: f64 = (0..=j_max).map(|j| poisson_pmf(mu, j)).sum();
            assert!((total - 1.0).abs() <= 1e-12, "mu={mu}: mass {total}");
        }
    }

    #[test]
    fn ln_factorial_continuity_at_table_edge() {
        // Stirling branch must agree with the exact cumulative sum
        let mut exact = 0.0;
        for j in 1..=2000u64 {
            exact += (j as f64).ln();
            if j >= 1020 {
                let approx = ln_factorial(j);
                assert!(
                    (approx - exact).abs() <= 1e-10 * exact,
                    "j={j}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn tv_bound_examples_and_pmf_oracle() {
        assert_eq!(tv_poisson_poisson_bound(1.0, 1.0), 0.0);
        assert!((tv_poisson_poisson_bound(0.5, 0.2) - 0.3).abs() < 1e-15);
        // exact TV by pmf summation stays below the mean-difference bound
        let exact: f64 = 0.5
            * (0..60)
                .map(|j| (poisson_pmf(0.5, j) - poisson_pmf(0.2, j)).abs())
                .sum::<f64>();
        assert!(exact <= 0.3 + 1e-12, "exact {exact}");
        assert!(exact > 0.0);
    }

    #[test]
    fn eta_bounded_marginal_mean() {
        let r = PoissonReference::new(0.5).unwrap();
        let mut rng = Stream::root(0xe7a).rng();
        let reps = 1_000_000u64;
        let mut total3 = 0u64;
        for _ in 0..reps {
            let counts = r.sample_eta(Some(3), &mut rng).unwrap();
            for (&k, &c) in &counts {
                assert_eq!(k, 3);
                total3 += c;
            }
        }
        let mean = total3 as f64 / reps as f64;
        let lam = r.lambda(3);
        let se = (lam / reps as f64).sqrt();
        assert!((mean - lam).abs() <= 3.0 * se, "mean {mean} vs lambda {lam}");
    }

    #[test]
    fn eta_unbounded_total_mean_and_independence() {
        let r = PoissonReference::new(0.5).unwrap();
        let mut rng = Stream::root(0xe7b).rng();
        let reps = 1_000_000u64;
        let target = r.total_intensity().unwrap();
        let mut sum_total = 0u64;
        let (mut s3, mut s4, mut s34) = (0u64, 0u64, 0u64);
        for _ in 0..reps {
            let counts = r.sample_eta(None, &mut rng).unwrap();
            let total: u64 = counts.values().sum();
            sum_total += total;
            let c3 = counts.get(&3).copied().unwrap_or(0);
            let c4 = counts.get(&4).copied().unwrap_or(0);
            s3 += c3;
            s4 += c4;
            s34 += c3 * c4;
        }
        let m = reps as f64;
        let mean = sum_total as f64 / m;
        let se = (target / m).sqrt();
        assert!((mean - target).abs() <= 3.0 * se, "mean {mean} vs {target}");

        // coordinates at 3 and 4 are independent: covariance within 3 SE of 0
        let (m3, m4) = (s3 as f64 / m, s4 as f64 / m);
        let cov = s34 as f64 / m - m3 * m4;
        let cov_se = (m3 * m4 / m).sqrt(); // Poisson product variance dominates
        assert!(cov.abs() <= 3.0 * cov_se, "cov {cov} (se {cov_se})");
    }
}
