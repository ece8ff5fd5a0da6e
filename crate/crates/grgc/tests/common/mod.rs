//! Independent oracles shared by integration suites.
//!
//! The neighborhood-sum oracle deliberately avoids the library's bitmask
//! tables: it enumerates unordered pairs, classifies each through the segment
//! decomposition, and multiplies plain edge probabilities over explicitly
//! deduplicated union edge lists. Two code paths, one truth.

use grgc::cycles::{
    canonical_cycle, for_each_canonical_tuple, segment_decomposition, CanonicalCycle, Overlap,
};
use grgc::steinchen::BVariant;
use grgc::weights::WeightVector;
use std::collections::BTreeSet;

fn edge_prob(weights: &WeightVector, x: u32, y: u32) -> f64 {
    let prod = weights.weight(x as usize) * weights.weight(y as usize);
    prod / (weights.total() + prod)
}

fn cycle_prob(weights: &WeightVector, cycle: &CanonicalCycle) -> f64 {
    cycle.edges().map(|(x, y)| edge_prob(weights, x, y)).product()
}

fn union_prob(weights: &WeightVector, a: &CanonicalCycle, b: &CanonicalCycle) -> f64 {
    let union: BTreeSet<(u32, u32)> = a.edges().chain(b.edges()).collect();
    union.iter().map(|&(x, y)| edge_prob(weights, x, y)).product()
}

fn all_cycles(n: usize, lengths: &[usize]) -> Vec<CanonicalCycle> {
    let mut cycles = Vec::new();
    for &k in lengths {
        for_each_canonical_tuple(n, k, |tuple| {
            cycles.push(canonical_cycle(tuple).expect("valid tuple"));
        });
    }
    cycles
}

fn related(a: &CanonicalCycle, b: &CanonicalCycle, variant: BVariant) -> bool {
    match segment_decomposition(a, b).expect("distinct cycles") {
        Overlap::Disjoint => false,
        Overlap::Intersecting(profile) => match variant {
            BVariant::VertexSharing => true,
            BVariant::EdgeSharing => profile.shared_edges >= 1,
        },
    }
}

/// Ordered-pair first-moment neighborhood sum, including the diagonal.
pub fn oracle_b1(weights: &WeightVector, lengths: &[usize], variant: BVariant) -> f64 {
    let cycles = all_cycles(weights.len(), lengths);
    let probs: Vec<f64> = cycles.iter().map(|c| cycle_prob(weights, c)).collect();
    let mut sum: f64 = probs.iter().map(|p| p * p).sum();
    for i in 0..cycles.len() {
        for j in (i + 1)..cycles.len() {
            if related(&cycles[i], &cycles[j], variant) {
                sum += 2.0 * probs[i] * probs[j];
            }
        }
    }
    sum
}

/// Ordered-pair joint-moment neighborhood sum over distinct pairs.
pub fn oracle_b2(weights: &WeightVector, lengths: &[usize], variant: BVariant) -> f64 {
    let cycles = all_cycles(weights.len(), lengths);
    let mut sum = 0.0;
    for i in 0..cycles.len() {
        for j in (i + 1)..cycles.len() {
            if related(&cycles[i], &cycles[j], variant) {
                sum += 2.0 * union_prob(weights, &cycles[i], &cycles[j]);
            }
        }
    }
    sum
}
