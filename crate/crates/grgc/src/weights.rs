//! Weight distributions, their closed-form moments, and the criticality regime.
//!
//! The graph models in this crate attach i.i.d. positive weights to vertices.
//! Everything downstream (limit intensities, regime gates, bound constants) is
//! a functional of exact moments, so moments are computed in closed form per
//! distribution kind and never estimated.

use crate::rng::{Stream, StreamRng};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Pareto};
use std::fmt;

/// A weight distribution. All parameters are strictly positive; `TwoPoint`
/// takes `v1` with probability `prob` and `v2` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightModel {
    Constant(f64),
    TwoPoint { v1: f64, v2: f64, prob: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    Pareto { scale: f64, tail_index: f64 },
}

/// Closed-form moment value; `Infinite` marks a divergent moment (Pareto with
/// tail index at or below the moment order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    /// The finite value, or an error naming the divergent order.
    pub fn finite(self, order: u32) -> Result<f64, WeightError> {
        match self {
            Moment::Finite(v) => Ok(v),
            Moment::Infinite => Err(WeightError::InfiniteMoment { order }),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Moment::Finite(_))
    }
}

/// Criticality regime: the first and second moment comparison that decides
/// whether the graph has a giant component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Subcritical => write!(f, "subcritical"),
            Regime::Critical => write!(f, "critical"),
            Regime::Supercritical => write!(f, "supercritical"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightError {
    /// A constructor parameter violated positivity or range constraints.
    InvalidParameter(String),
    /// A computation required a finite moment of the given order.
    InfiniteMoment { order: u32 },
    /// The operation is only defined in the subcritical regime.
    NotSubcritical { regime: Regime },
}

impl fmt::Display for WeightError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightError::InvalidParameter(msg) => write!(f, "invalid weight parameter: {msg}"),
            WeightError::InfiniteMoment { order } => {
                write!(f, "moment of order {order} is infinite")
            }
            WeightError::NotSubcritical { regime } => {
                write!(f, "operation requires the subcritical regime, model is {regime}")
            }
        }
    }
}

impl std::error::Error for WeightError {}

impl WeightModel {
    /// Validate parameter positivity (and `prob` in (0,1) for `TwoPoint`).
    pub fn validate(&self) -> Result<(), WeightError> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(WeightError::InvalidParameter(format!(
                    "{name} must be a positive finite real, got {v}"
                )))
            }
        };
        match *self {
            WeightModel::Constant(c) => pos(c, "c"),
            WeightModel::TwoPoint { v1, v2, prob } => {
                pos(v1, "v1")?;
                pos(v2, "v2")?;
                if prob > 0.0 && prob < 1.0 {
                    Ok(())
                } else {
                    Err(WeightError::InvalidParameter(format!(
                        "prob must lie in (0,1), got {prob}"
                    )))
                }
            }
            WeightModel::Exponential { rate } => pos(rate, "rate"),
            WeightModel::Gamma { shape, scale } => {
                pos(shape, "shape")?;
                pos(scale, "scale")
            }
            WeightModel::Pareto { scale, tail_index } => {
                pos(scale, "scale")?;
                pos(tail_index, "tail_index")
            }
        }
    }

    /// Closed-form r-th moment, `r >= 1`.
    pub fn moment(&self, r: u32) -> Moment {
        assert!(r >= 1, "moment order must be at least 1");
        let rf = f64::from(r);
        match *self {
            WeightModel::Constant(c) => Moment::Finite(c.powi(r as i32)),
            WeightModel::TwoPoint { v1, v2, prob } => {
                Moment::Finite(prob * v1.powi(r as i32) + (1.0 - prob) * v2.powi(r as i32))
            }
            WeightModel::Exponential { rate } => {
                // r! / rate^r
                let mut m = 1.0;
                for i in 1..=r {
                    m *= f64::from(i) / rate;
                }
                Moment::Finite(m)
            }
            WeightModel::Gamma { shape, scale } => {
                // scale^r * shape (shape+1) ... (shape+r-1)
                let mut m = 1.0;
                for i in 0..r {
                    m *= scale * (shape + f64::from(i));
                }
                Moment::Finite(m)
            }
            WeightModel::Pareto { scale, tail_index } => {
                if tail_index <= rf {
                    Moment::Infinite
                } else {
                    Moment::Finite(tail_index * scale.powi(r as i32) / (tail_index - rf))
                }
            }
        }
    }

    /// Regime classification by comparing the first two moments. An infinite
    /// second moment is supercritical by definition of the comparison.
    pub fn regime(&self) -> Regime {
        let m1 = match self.moment(1) {
            Moment::Finite(v) => v,
            Moment::Infinite => return Regime::Supercritical,
        };
        match self.moment(2) {
            Moment::Infinite => Regime::Supercritical,
            Moment::Finite(m2) => {
                if m2 < m1 {
                    Regime::Subcritical
                } else if m2 > m1 {
                    Regime::Supercritical
                } else {
                    Regime::Critical
                }
            }
        }
    }

    /// The limit intensity ratio `E[W^2] / E[W]`.
    pub fn rho(&self) -> Result<f64, WeightError> {
        let m1 = self.moment(1).finite(1)?;
        let m2 = self.moment(2).finite(2)?;
        Ok(m2 / m1)
    }

    /// Base of the geometric decay governing the probability that any long
    /// cycle exists: `2 E[W^2] / (E[W^2] + E[W])`. Below one, hence meaningful,
    /// only in the subcritical regime; other regimes are rejected.
    pub fn long_cycle_base(&self) -> Result<f64, WeightError> {
        let regime = self.regime();
        if regime != Regime::Subcritical {
            return Err(WeightError::NotSubcritical { regime });
        }
        let m1 = self.moment(1).finite(1)?;
        let m2 = self.moment(2).finite(2)?;
        Ok(2.0 * m2 / (m2 + m1))
    }

    /// Draw `n` i.i.d. weights from the stream. Deterministic given the stream
    /// identity; the zero-probability event of a non-positive draw is rejected
    /// so that every entry is strictly positive.
    pub fn sample(&self, n: usize, stream: Stream) -> WeightVector {
        assert!(n >= 1, "need at least one vertex");
        let mut rng = stream.rng();
        let mut weights = Vec::with_capacity(n);
        self.sample_into(n, &mut rng, &mut weights);
        WeightVector::new(weights)
    }

    /// Fill `out` with `n` draws using an existing generator. Used by the
    /// harness to reuse buffers across replications.
    pub fn sample_into(&self, n: usize, rng: &mut StreamRng, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(n);
        match *self {
            WeightModel::Constant(c) => out.extend(std::iter::repeat_n(c, n)),
            WeightModel::TwoPoint { v1, v2, prob } => {
                for _ in 0..n {
                    let u: f64 = rng.random();
                    out.push(if u < prob { v1 } else { v2 });
                }
            }
            WeightModel::Exponential { rate } => {
                let d = Exp::new(rate).expect("validated rate");
                for _ in 0..n {
                    out.push(positive_draw(&d, rng));
                }
            }
            WeightModel::Gamma { shape, scale } => {
                let d = Gamma::new(shape, scale).expect("validated parameters");
                for _ in 0..n {
                    out.push(positive_draw(&d, rng));
                }
            }
            WeightModel::Pareto { scale, tail_index } => {
                let d = Pareto::new(scale, tail_index).expect("validated parameters");
                for _ in 0..n {
                    out.push(positive_draw(&d, rng));
                }
            }
        }
    }

    /// Short kind name used in config files and output provenance.
    pub fn kind_name(&self) -> &'static str {
        match self {
            WeightModel::Constant(_) => "constant",
            WeightModel::TwoPoint { .. } => "two-point",
            WeightModel::Exponential { .. } => "exponential",
            WeightModel::Gamma { .. } => "gamma",
            WeightModel::Pareto { .. } => "pareto",
        }
    }
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WeightModel::Constant(c) => write!(f, "constant(c={c})"),
            WeightModel::TwoPoint { v1, v2, prob } => {
                write!(f, "two-point(v1={v1},v2={v2},prob={prob})")
            }
            WeightModel::Exponential { rate } => write!(f, "exponential(rate={rate})"),
            WeightModel::Gamma { shape, scale } => write!(f, "gamma(shape={shape},scale={scale})"),
            WeightModel::Pareto { scale, tail_index } => {
                write!(f, "pareto(scale={scale},tail_index={tail_index})")
            }
        }
    }
}

fn positive_draw<D: Distribution<f64>>(d: &D, rng: &mut StreamRng) -> f64 {
    loop {
        let w = d.sample(rng);
        if w > 0.0 {
            return w;
        }
    }
}

/// An i.i.d. weight assignment for `n` vertices together with its total.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    total: f64,
}

impl WeightVector {
    /// Wrap a vector of strictly positive weights.
    pub fn new(weights: Vec<f64>) -> Self {
        assert!(!weights.is_empty(), "weight vector must be non-empty");
        assert!(
            weights.iter().all(|&w| w > 0.0 && w.is_finite()),
            "weights must be strictly positive and finite"
        );
        let total = weights.iter().sum();
        WeightVector { weights, total }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weight of vertex `v` (0-indexed).
    #[inline]
    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of all weights.
    #[inline]
    pub fn total(&self) -> f64 {
        self.total
    }
}
