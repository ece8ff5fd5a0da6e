//! Empirical laws of integer observables and distances to reference laws.
//!
//! An [`EmpiricalLaw`] is a complete histogram, so every summary derived from
//! it (mean, variance, distances) is exactly independent of observation order
//! and of how partial histograms were merged across workers.
//!
//! The plug-in total variation estimator includes the reference's tail mass
//! beyond the observed support; without it the estimator is biased low
//! exactly where the harness compares small distances. Its remaining positive
//! bias scales like sqrt(support size / sample size), which callers keep
//! below their acceptance thresholds by choosing the sample size.

use crate::poisson::poisson_pmf;
use crate::rng::{Stream, StreamRng};

use rand_distr::{Binomial, Distribution};
use std::collections::BTreeMap;
use std::fmt;

/// Number of bootstrap resamples behind every reported standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum StatsError {
    EmptyInput,
    InvalidProbability { q: f64 },
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::EmptyInput => write!(f, "need at least one observation"),
            StatsError::InvalidProbability { q } => write!(f, "probability outside [0,1]: {q}"),
        }
    }
}

impl std::error::Error for StatsError {}

/// Histogram of nonnegative integer observations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmpiricalLaw {
    counts: BTreeMap<u64, u64>,
    sample_size: u64,
}

impl EmpiricalLaw {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: u64) {
        *self.counts.entry(value).or_insert(0) += 1;
        self.sample_size += 1;
    }

    /// Merge another histogram in. Commutative and associative, so partial
    /// aggregation across workers is exactly order-independent.
    pub fn merge(&mut self, other: &EmpiricalLaw) {
        for (&v, &c) in &other.counts {
            *self.counts.entry(v).or_insert(0) += c;
        }
        self.sample_size += other.sample_size;
    }

    pub fn from_observations<I: IntoIterator<Item = u64>>(obs: I) -> Self {
        let mut law = Self::new();
        for v in obs {
            law.push(v);
        }
        law
    }

    pub fn sample_size(&self) -> u64 {
        self.sample_size
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn count(&self, value: u64) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    /// Empirical probability of a value.
    pub fn frequency(&self, value: u64) -> f64 {
        if self.sample_size == 0 {
            0.0
        } else {
            self.count(value) as f64 / self.sample_size as f64
        }
    }

    pub fn max_value(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    /// Mean, sample variance, and standard error of the mean, all derived
    /// from the histogram in one deterministic pass.
    pub fn summary(&self) -> Result<Summary, StatsError> {
        if self.sample_size == 0 {
            return Err(StatsError::EmptyInput);
        }
        let m = self.sample_size as f64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for (&v, &c) in &self.counts {
            let vf = v as f64;
            let cf = c as f64;
            sum += vf * cf;
            sumsq += vf * vf * cf;
        }
        let mean = sum / m;
        let variance = if self.sample_size > 1 {
            ((sumsq - m * mean * mean) / (m - 1.0)).max(0.0)
        } else {
            0.0
        };
        Ok(Summary { mean, variance, se: (variance / m).sqrt(), sample_size: self.sample_size })
    }

    /// Empirical CDF at `t`.
    pub fn cdf(&self, t: u64) -> f64 {
        if self.sample_size == 0 {
            return 0.0;
        }
        let below: u64 = self
            .counts
            .range(..=t)
            .map(|(_, &c)| c)
            .sum();
        below as f64 / self.sample_size as f64
    }
}

/// Deterministic merge of integer observations into a histogram plus summary.
pub fn aggregate<I: IntoIterator<Item = u64>>(obs: I) -> Result<(EmpiricalLaw, Summary), StatsError> {
    let law = EmpiricalLaw::from_observations(obs);
    let summary = law.summary()?;
    Ok((law, summary))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    pub sample_size: u64,
}

/// Which distance an estimate carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMethod {
    PluginTv,
    KolmogorovSup,
}

/// A distance estimate in [0,1] with a bootstrap standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub method: DistanceMethod,
}

/// Bootstrap standard errors are deterministic functions of the inputs: the
/// resampling stream is derived from the histogram contents and the target.
fn bootstrap_stream(law: &EmpiricalLaw, tag: u64) -> Stream {
    let mut s = Stream::root(0xb007).child(tag).child(law.sample_size());
    for (&v, &c) in law.counts() {
        s = s.child(v ^ c.rotate_left(17));
    }
    s
}

/// Multinomial resample of the histogram via the conditional binomial chain.
fn resample(law: &EmpiricalLaw, rng: &mut StreamRng) -> EmpiricalLaw {
    let mut remaining = law.sample_size();
    let mut rest_prob = 1.0f64;
    let mut out = EmpiricalLaw::new();
    for (&v, &_c) in law.counts() {
        if remaining == 0 {
            break;
        }
        let p = (law.frequency(v) / rest_prob).clamp(0.0, 1.0);
        let draw = if p >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, p).expect("valid binomial").sample(rng)
        };
        if draw > 0 {
            out.counts.insert(v, draw);
            out.sample_size += draw;
        }
        remaining -= draw;
        rest_prob -= law.frequency(v);
    }
    out
}

fn bootstrap_se<F: Fn(&EmpiricalLaw) -> f64>(law: &EmpiricalLaw, tag: u64, stat: F) -> f64 {
    if law.sample_size() == 0 {
        return 0.0;
    }
    let mut rng = bootstrap_stream(law, tag).rng();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let v = stat(&resample(law, &mut rng));
        sum += v;
        sumsq += v * v;
    }
    let m = BOOTSTRAP_RESAMPLES as f64;
    let mean = sum / m;
    ((sumsq / m - mean * mean).max(0.0) * m / (m - 1.0)).sqrt()
}

fn tv_value_vs_poisson(law: &EmpiricalLaw, mu: f64) -> f64 {
    let max = law.max_value().unwrap_or(0);
    let mut half_l1 = 0.0;
    let mut reference_head = 0.0;
    for j in 0..=max {
        let p_ref = poisson_pmf(mu, j);
        reference_head += p_ref;
        half_l1 += (law.frequency(j) - p_ref).abs();
    }
    // reference mass beyond the observed support
    half_l1 += (1.0 - reference_head).max(0.0);
    0.5 * half_l1
}

/// Plug-in total variation distance between an empirical law and Poisson(mu),
/// with a bootstrap standard error.
pub fn tv_distance(law: &EmpiricalLaw, mu: f64) -> Result<DistanceEstimate, StatsError> {
    if law.sample_size() == 0 {
        return Err(StatsError::EmptyInput);
    }
    assert!(mu >= 0.0, "reference mean must be nonnegative");
    let value = tv_value_vs_poisson(law, mu);
    let standard_error = bootstrap_se(law, mu.to_bits(), |l| tv_value_vs_poisson(l, mu));
    Ok(DistanceEstimate { value, standard_error, method: DistanceMethod::PluginTv })
}

/// Total variation distance between two empirical laws (half L1 of the
/// frequency vectors).
pub fn tv_distance_empirical(a: &EmpiricalLaw, b: &EmpiricalLaw) -> Result<f64, StatsError> {
    if a.sample_size() == 0 || b.sample_size() == 0 {
        return Err(StatsError::EmptyInput);
    }
    let max = a.max_value().unwrap_or(0).max(b.max_value().unwrap_or(0));
    let mut half_l1 = 0.0;
    for j in 0..=max {
        half_l1 += (a.frequency(j) - b.frequency(j)).abs();
    }
    Ok(0.5 * half_l1)
}

fn kolmogorov_value<C: Fn(u64) -> f64>(law: &EmpiricalLaw, reference_cdf: &C, horizon: u64) -> f64 {
    let mut sup = 0.0f64;
    for t in 0..=horizon {
        let gap = (law.cdf(t) - reference_cdf(t)).abs();
        if gap > sup {
            sup = gap;
        }
    }
    sup
}

/// Kolmogorov distance between an empirical law and a reference CDF on the
/// nonnegative integers. Both CDFs are step functions with jumps only at
/// integers, so the supremum over real thresholds is attained on the integer
/// scan up to the point where both laws have essentially full mass.
pub fn kolmogorov_distance<C: Fn(u64) -> f64>(
    law: &EmpiricalLaw,
    reference_cdf: C,
) -> Result<DistanceEstimate, StatsError> {
    if law.sample_size() == 0 {
        return Err(StatsError::EmptyInput);
    }
    let mut horizon = law.max_value().unwrap_or(0);
    // extend until the reference has no mass left to change the supremum
    while reference_cdf(horizon) < 1.0 - 1e-13 && horizon < 1_000_000 {
        horizon += 1 + horizon / 4;
    }
    let value = kolmogorov_value(law, &reference_cdf, horizon);
    let standard_error =
        bootstrap_se(law, horizon ^ 0x4b01, |l| kolmogorov_value(l, &reference_cdf, horizon));
    Ok(DistanceEstimate { value, standard_error, method: DistanceMethod::KolmogorovSup })
}

/// Binomial thinning: the number of kept points when each of `count` points
/// survives independently with probability `q`.
pub fn thin(count: u64, q: f64, rng: &mut StreamRng) -> Result<u64, StatsError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(StatsError::InvalidProbability { q });
    }
    if count == 0 || q == 0.0 {
        return Ok(0);
    }
    if q == 1.0 {
        return Ok(count);
    }
    Ok(Binomial::new(count, q).expect("validated").sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::poisson_cdf;
    use crate::rng::Stream;
    use rand_distr::Poisson;

    fn poisson_law(mu: f64, reps: u64, stream: Stream) -> EmpiricalLaw {
        let mut rng = stream.rng();
        let d = Poisson::new(mu).unwrap();
        EmpiricalLaw::from_observations((0..reps).map(|_| d.sample(&mut rng) as u64))
    }

    #[test]
    fn tv_zero_for_degenerate_match() {
        let law = EmpiricalLaw::from_observations(std::iter::repeat_n(0u64, 1000));
        let d = tv_distance(&law, 0.0).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.standard_error, 0.0);
    }

    #[test]
    fn tv_point_mass_vs_unit_poisson() {
        let law = EmpiricalLaw::from_observations(std::iter::repeat_n(0u64, 10_000));
        let d = tv_distance(&law, 1.0).unwrap();
        let expected = 1.0 - (-1.0f64).exp();
        assert!((d.value - expected).abs() < 1e-12, "{} vs {}", d.value, expected);
    }

    #[test]
    fn tv_self_calibration() {
        let law = poisson_law(1.0, 1_000_000, Stream::root(0x71f1));
        let d = tv_distance(&law, 1.0).unwrap();
        assert!(d.value <= 0.005, "plug-in TV {} too large", d.value);
        assert!(d.standard_error > 0.0);
    }

    #[test]
    fn tv_plugin_decays_like_root_m() {
        let mut points = Vec::new();
        for (i, m) in [1_000u64, 10_000, 100_000, 1_000_000].iter().enumerate() {
            let law = poisson_law(2.0, *m, Stream::root(0xdecae).child(i as u64));
            points.push(((*m as f64).ln(), tv_distance(&law, 2.0).unwrap().value.ln()));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!(
            (-0.65..=-0.35).contains(&slope),
            "plug-in decay slope {slope} outside [-0.65, -0.35]"
        );
    }

    #[test]
    fn tv_empirical_metric_properties() {
        let root = Stream::root(0x3e7);
        for rep in 0..10u64 {
            let p = poisson_law(1.5, 2000, root.child(rep).child(0));
            let q = poisson_law(0.7, 2000, root.child(rep).child(1));
            let r = poisson_law(3.0, 2000, root.child(rep).child(2));
            let dpq = tv_distance_empirical(&p, &q).unwrap();
            let dqp = tv_distance_empirical(&q, &p).unwrap();
            assert_eq!(dpq, dqp);
            assert_eq!(tv_distance_empirical(&p, &p).unwrap(), 0.0);
            let dpr = tv_distance_empirical(&p, &r).unwrap();
            let dqr = tv_distance_empirical(&q, &r).unwrap();
            assert!(dpr <= dpq + dqr + 1e-15);
            assert!((0.0..=1.0).contains(&dpq));
        }
    }

    #[test]
    fn kolmogorov_exact_reference_is_zero() {
        // plug the reference's own atoms in as the empirical law
        let mu = 1.25;
        let reps = 1_000_000u64;
        let mut law = EmpiricalLaw::new();
        let mut assigned = 0u64;
        for j in 0..30 {
            let c = (poisson_pmf(mu, j) * reps as f64).round() as u64;
            for _ in 0..c {
                law.push(j);
            }
            assigned += c;
        }
        // exact CDF of the rounded atoms
        let law_ref = law.clone();
        let d = kolmogorov_distance(&law, move |t| law_ref.cdf(t)).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(assigned > 0);
    }

    #[test]
    fn kolmogorov_point_mass_vs_shortest_law() {
        // point mass at 0 against the shortest-cycle law at rho = 0.5:
        // the supremum is the missing mass 1 - P(S = 0) at every t >= 0
        let r = crate::poisson::PoissonReference::new(0.5).unwrap();
        let law = EmpiricalLaw::from_observations(std::iter::repeat_n(0u64, 1000));
        let reference = move |t: u64| match t {
            0..=2 => r.law_shortest(0).unwrap(),
            t => r.law_shortest(t as usize).unwrap(),
        };
        let d = kolmogorov_distance(&law, reference).unwrap();
        assert!((d.value - 0.033500).abs() < 1e-6, "{}", d.value);
    }

    #[test]
    fn kolmogorov_sup_attained_at_jump_points() {
        // dense real-valued scan never exceeds the integer-point scan
        let mu = 0.8;
        let law = poisson_law(1.2, 20_000, Stream::root(0x4b02));
        let d = kolmogorov_distance(&law, move |t| poisson_cdf(mu, t)).unwrap();
        let mut dense_sup = 0.0f64;
        for i in 0..4000 {
            let t = i as f64 * 0.01 - 5.0;
            let emp = if t < 0.0 { 0.0 } else { law.cdf(t.floor() as u64) };
            let reference = if t < 0.0 { 0.0 } else { poisson_cdf(mu, t.floor() as u64) };
            dense_sup = dense_sup.max((emp - reference).abs());
        }
        assert!((d.value - dense_sup).abs() < 1e-12);
    }

    #[test]
    fn thin_edge_cases_and_mean() {
        let mut rng = Stream::root(0x7417).rng();
        assert_eq!(thin(5, 0.0, &mut rng).unwrap(), 0);
        assert_eq!(thin(5, 1.0, &mut rng).unwrap(), 5);
        assert!(thin(5, 1.5, &mut rng).is_err());

        let reps = 1_000_000u64;
        let mut sum = 0u64;
        for _ in 0..reps {
            sum += thin(10, 0.3, &mut rng).unwrap();
        }
        let mean = sum as f64 / reps as f64;
        let se = (10.0 * 0.3 * 0.7 / reps as f64).sqrt();
        assert!((mean - 3.0).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn thinned_poisson_is_poisson() {
        // thin(Y, q) with Y ~ Poi(lambda) is Poi(q * lambda)
        let (lambda, q) = (2.0, 0.35);
        let mut rng = Stream::root(0x7418).rng();
        let d = Poisson::new(lambda).unwrap();
        let mut law = EmpiricalLaw::new();
        for _ in 0..1_000_000u64 {
            let y = d.sample(&mut rng) as u64;
            law.push(thin(y, q, &mut rng).unwrap());
        }
        let tv = tv_distance(&law, q * lambda).unwrap();
        assert!(tv.value <= 0.005, "TV {} too large", tv.value);
    }

    #[test]
    fn aggregate_examples() {
        let (law, summary) = aggregate([0u64, 0, 1]).unwrap();
        assert!((summary.mean - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(law.count(0), 2);
        assert_eq!(law.count(1), 1);
        assert!(matches!(aggregate(std::iter::empty()), Err(StatsError::EmptyInput)));
    }

    #[test]
    fn aggregation_is_partition_independent() {
        let obs: Vec<u64> = (0..5000u64).map(|i| (i * 7 + 3) % 11).collect();
        let (single, s1) = aggregate(obs.iter().copied()).unwrap();
        let mut left = EmpiricalLaw::from_observations(obs[..1234].iter().copied());
        let right = EmpiricalLaw::from_observations(obs[1234..].iter().copied());
        left.merge(&right);
        assert_eq!(single, left);
        let s2 = left.summary().unwrap();
        assert!((s1.mean - s2.mean).abs() <= 1e-12);
        assert!((s1.variance - s2.variance).abs() <= 1e-12);

        // reversed order gives the identical histogram and summary
        let (rev, s3) = aggregate(obs.iter().rev().copied()).unwrap();
        assert_eq!(single, rev);
        assert_eq!(s1, s3);
    }

    #[test]
    fn poisson_dispersion_near_one() {
        let law = poisson_law(2.0, 1_000_000, Stream::root(0xd15b));
        let s = law.summary().unwrap();
        let ratio = s.variance / s.mean;
        assert!((0.99..=1.01).contains(&ratio), "dispersion {ratio}");
    }
}
