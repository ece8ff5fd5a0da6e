//! Rank-1 random graph samplers.
//!
//! Three models share the same skeleton: `n` vertices with positive weights,
//! every unordered pair `{i,j}` an edge independently (given the weights) with
//! a probability built from `w_i w_j / L`. They differ only in how that ratio
//! is turned into a probability, and those probabilities are pointwise ordered,
//! which the coupled sampler turns into a per-sample subset chain.
//!
//! Two samplers produce identical distributions: a quadratic reference that
//! draws one uniform per pair, and a skip sampler that runs in expected
//! O(n + m) by jumping over non-edges geometrically under a per-row bound.

use crate::rng::Stream;
use crate::weights::WeightVector;
use rand::Rng;
use std::fmt;

/// Which connection-probability rule to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// `w_i w_j / (w_i w_j + L)`
    Grg,
    /// `min(1, w_i w_j / L)`
    ChungLu,
    /// `1 - exp(-w_i w_j / L)` (erased model: independent pairs, no multi-edges)
    NorrosReittu,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Grg, ModelKind::ChungLu, ModelKind::NorrosReittu];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Grg => "grg",
            ModelKind::ChungLu => "chung-lu",
            ModelKind::NorrosReittu => "norros-reittu",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        match s {
            "grg" => Some(ModelKind::Grg),
            "chung-lu" => Some(ModelKind::ChungLu),
            "norros-reittu" => Some(ModelKind::NorrosReittu),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    /// Weights and totals entering `edge_prob` must be strictly positive.
    NonPositiveInput { wi: f64, wj: f64, total: f64 },
    /// Self-loop, duplicate, or out-of-range pair in an explicit edge list.
    InvalidEdge { u: u32, v: u32, n: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::NonPositiveInput { wi, wj, total } => write!(
                f,
                "edge probability needs positive inputs, got wi={wi}, wj={wj}, total={total}"
            ),
            GraphError::InvalidEdge { u, v, n } => {
                write!(f, "invalid edge ({u},{v}) for a graph on {n} vertices")
            }
        }
    }
}

impl std::error::Error for GraphError {}

/// Connection probability of the given model for two vertices with weights
/// `wi`, `wj` in a graph with total weight `total`.
pub fn edge_prob(kind: ModelKind, wi: f64, wj: f64, total: f64) -> Result<f64, GraphError> {
    if !(wi > 0.0 && wj > 0.0 && total > 0.0) {
        return Err(GraphError::NonPositiveInput { wi, wj, total });
    }
    Ok(edge_prob_raw(kind, wi, wj, total))
}

/// `edge_prob` without the positivity check; callers guarantee positive inputs
/// (a `WeightVector` already does). `1 - exp(-x)` is computed via `exp_m1` so
/// the Norros-Reittu value stays strictly between the other two models for
/// tiny `x` instead of collapsing into rounding noise.
#[inline]
pub(crate) fn edge_prob_raw(kind: ModelKind, wi: f64, wj: f64, total: f64) -> f64 {
    let x = wi * wj / total;
    match kind {
        ModelKind::Grg => x / (1.0 + x),
        ModelKind::ChungLu => x.min(1.0),
        ModelKind::NorrosReittu => -(-x).exp_m1(),
    }
}

/// A sampled simple graph: sorted adjacency lists plus the weights and stream
/// identity that produced it.
#[derive(Debug, Clone)]
pub struct GraphSample {
    n: usize,
    adj: Vec<Vec<u32>>,
    m: usize,
    weights: WeightVector,
    kind: ModelKind,
    seed: Stream,
}

impl GraphSample {
    /// Build a graph from an explicit edge list (for example a parsed dump).
    /// Pairs are normalized to `u < v`; self-loops, duplicate edges, and
    /// out-of-range endpoints are rejected.
    pub fn from_edge_list(
        kind: ModelKind,
        weights: WeightVector,
        seed: Stream,
        edges: &[(u32, u32)],
    ) -> Result<Self, GraphError> {
        let n = weights.len();
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::InvalidEdge { u, v, n });
            }
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::InvalidEdge { u, v, n });
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            let (u, v) = normalized.windows(2).find(|w| w[0] == w[1]).unwrap()[0];
            return Err(GraphError::InvalidEdge { u, v, n });
        }
        Ok(Self::from_edges(kind, weights, seed, &normalized))
    }

    fn from_edges(kind: ModelKind, weights: WeightVector, seed: Stream, edges: &[(u32, u32)]) -> Self {
        let n = weights.len();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            debug_assert!(u < v && (v as usize) < n);
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        GraphSample { n, adj, m: edges.len(), weights, kind, seed }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.m
    }

    /// Sorted neighbors of `v` (0-indexed).
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edge membership via binary search in the smaller endpoint's list.
    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() { (u, v) } else { (v, u) };
        self.adj[a].binary_search(&(b as u32)).is_ok()
    }

    /// All edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n {
            for &v in &self.adj[u] {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn seed(&self) -> Stream {
        self.seed
    }

    /// Plain-text dump: header `n m kind seed`, then one `u v` line per edge,
    /// 1-indexed, `u < v`, sorted. Stable for regression comparisons.
    pub fn dump(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.n, self.m, self.kind, self.seed.id());
        for (u, v) in self.edges() {
            out.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        out
    }

    /// True on every sample of [`sample_coupled`] with models ordered
    /// GRG -> NR -> CL: every edge of `self` is an edge of `other`.
    pub fn is_subgraph_of(&self, other: &GraphSample) -> bool {
        self.n == other.n
            && (0..self.n).all(|u| {
                self.adj[u]
                    .iter()
                    .all(|&v| other.adj[u].binary_search(&v).is_ok())
            })
    }
}

/// Reference sampler: one uniform per unordered pair, pairs visited in
/// lexicographic order. O(n^2) time.
pub fn sample_graph(kind: ModelKind, weights: &WeightVector, stream: Stream) -> GraphSample {
    let mut rng = stream.rng();
    let n = weights.len();
    let total = weights.total();
    let mut edges = Vec::new();
    for i in 0..n {
        let wi = weights.weight(i);
        for j in (i + 1)..n {
            let p = edge_prob_raw(kind, wi, weights.weight(j), total);
            if rng.random::<f64>() < p {
                edges.push((i as u32, j as u32));
            }
        }
    }
    GraphSample::from_edges(kind, weights.clone(), stream, &edges)
}

/// Couple the three models through shared per-pair uniforms: the pair `{i,j}`
/// is an edge of a model iff `U_ij` is below that model's probability. The
/// pointwise ordering of the probabilities makes the edge sets nested on every
/// sample: GRG inside Norros-Reittu inside Chung-Lu.
pub fn sample_coupled(
    weights: &WeightVector,
    stream: Stream,
) -> (GraphSample, GraphSample, GraphSample) {
    let mut rng = stream.rng();
    let n = weights.len();
    let total = weights.total();
    let mut grg = Vec::new();
    let mut nr = Vec::new();
    let mut cl = Vec::new();
    for i in 0..n {
        let wi = weights.weight(i);
        for j in (i + 1)..n {
            let wj = weights.weight(j);
            let u: f64 = rng.random();
            let pair = (i as u32, j as u32);
            if u < edge_prob_raw(ModelKind::Grg, wi, wj, total) {
                grg.push(pair);
            }
            if u < edge_prob_raw(ModelKind::NorrosReittu, wi, wj, total) {
                nr.push(pair);
            }
            if u < edge_prob_raw(ModelKind::ChungLu, wi, wj, total) {
                cl.push(pair);
            }
        }
    }
    (
        GraphSample::from_edges(ModelKind::Grg, weights.clone(), stream, &grg),
        GraphSample::from_edges(ModelKind::NorrosReittu, weights.clone(), stream, &nr),
        GraphSample::from_edges(ModelKind::ChungLu, weights.clone(), stream, &cl),
    )
}

/// Skip sampler, distributionally identical to [`sample_graph`], expected time
/// O(n + m).
///
/// Vertices are visited in weight-descending order. Within row `i` the
/// candidate columns `j > i` have weights no larger than the row's first
/// column, so the probability of the first column bounds the whole row. The
/// sampler jumps ahead by Geometric(bound) steps and keeps each candidate with
/// probability `p_ij / bound`. For finite-second-moment weights the acceptance
/// ratio stays bounded away from zero.
pub fn sample_graph_fast(kind: ModelKind, weights: &WeightVector, stream: Stream) -> GraphSample {
    let mut rng = stream.rng();
    let n = weights.len();
    let total = weights.total();

    // order[r] = vertex with the r-th largest weight
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| {
        weights
            .weight(b as usize)
            .partial_cmp(&weights.weight(a as usize))
            .unwrap()
            .then(a.cmp(&b))
    });
    let sorted_w: Vec<f64> = order.iter().map(|&v| weights.weight(v as usize)).collect();

    let mut edges = Vec::new();
    for row in 0..n.saturating_sub(1) {
        let wi = sorted_w[row];
        let bound = edge_prob_raw(kind, wi, sorted_w[row + 1], total);
        if bound <= 0.0 {
            continue;
        }
        // log(1-bound); bound == 1 short-circuits to stepping through every column
        let log_q = (-bound).ln_1p();
        let mut col = row; // last inspected column
        loop {
            let step = if bound >= 1.0 {
                1
            } else {
                let u: f64 = rng.random();
                // smallest g >= 1 with 1-(1-bound)^g >= u
                let g = ((1.0 - u).ln() / log_q).floor() + 1.0;
                if g >= (n - col) as f64 {
                    break;
                }
                g as usize
            };
            col += step;
            if col >= n {
                break;
            }
            let p = edge_prob_raw(kind, wi, sorted_w[col], total);
            if p >= bound || rng.random::<f64>() * bound < p {
                let (a, b) = (order[row].min(order[col]), order[row].max(order[col]));
                edges.push((a, b));
            }
        }
    }
    edges.sort_unstable();
    GraphSample::from_edges(kind, weights.clone(), stream, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use crate::weights::WeightModel;

    const SEED: u64 = 0x6ee1_77a2;

    fn constant_weights(c: f64, n: usize) -> WeightVector {
        WeightVector::new(vec![c; n])
    }

    #[test]
    fn edge_prob_examples() {
        assert!((edge_prob(ModelKind::Grg, 1.0, 1.0, 4.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((edge_prob(ModelKind::ChungLu, 1.0, 1.0, 4.0).unwrap() - 0.25).abs() < 1e-15);
        let nr = edge_prob(ModelKind::NorrosReittu, 1.0, 1.0, 4.0).unwrap();
        assert!((nr - (1.0 - (-0.25f64).exp())).abs() < 1e-15);
        assert!((nr - 0.221199).abs() < 1e-6);
    }

    #[test]
    fn edge_prob_rejects_non_positive() {
        assert!(edge_prob(ModelKind::Grg, 0.0, 1.0, 4.0).is_err());
        assert!(edge_prob(ModelKind::ChungLu, 1.0, -1.0, 4.0).is_err());
        assert!(edge_prob(ModelKind::NorrosReittu, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn chung_lu_saturates() {
        // two vertices with huge weights: w*w/L > 1
        let w = constant_weights(1e6, 2);
        assert_eq!(edge_prob(ModelKind::ChungLu, 1e6, 1e6, w.total()).unwrap(), 1.0);
        let (_, _, cl) = sample_coupled(&w, Stream::root(SEED));
        assert_eq!(cl.edge_count(), 1);
    }

    #[test]
    fn single_vertex_graphs_are_empty() {
        let w = constant_weights(1.0, 1);
        for kind in ModelKind::ALL {
            assert_eq!(sample_graph(kind, &w, Stream::root(SEED)).edge_count(), 0);
            assert_eq!(sample_graph_fast(kind, &w, Stream::root(SEED)).edge_count(), 0);
        }
        let (g, nr, cl) = sample_coupled(&w, Stream::root(SEED));
        assert_eq!((g.edge_count(), nr.edge_count(), cl.edge_count()), (0, 0, 0));
    }

    #[test]
    fn samplers_are_deterministic() {
        let w = WeightModel::Exponential { rate: 1.0 }.sample(40, Stream::root(SEED).child(0));
        let s = Stream::root(SEED).child(1);
        for kind in ModelKind::ALL {
            assert_eq!(sample_graph(kind, &w, s).edges(), sample_graph(kind, &w, s).edges());
            assert_eq!(
                sample_graph_fast(kind, &w, s).edges(),
                sample_graph_fast(kind, &w, s).edges()
            );
        }
    }

    #[test]
    fn naive_mean_edge_count_constant_weights() {
        // Constant(1), n=100, GRG: each pair present w.p. 1/101.
        let n = 100;
        let w = constant_weights(1.0, n);
        let reps = 10_000;
        let root = Stream::root(SEED).child_str("mean-edges");
        let mut total_edges = 0usize;
        for rep in 0..reps {
            total_edges += sample_graph(ModelKind::Grg, &w, root.child(rep)).edge_count();
        }
        let mean = total_edges as f64 / reps as f64;
        let pairs = (n * (n - 1) / 2) as f64;
        let p = 1.0 / 101.0;
        let expected = pairs * p; // 49.0099...
        let se = (pairs * p * (1.0 - p) / reps as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * se,
            "mean {mean} vs {expected} (se {se})"
        );
    }

    #[test]
    fn coupled_subset_chain_holds_on_every_sample() {
        let root = Stream::root(SEED).child_str("coupled");
        for rep in 0..200 {
            let w = WeightModel::Exponential { rate: 1.0 }
                .sample(30, root.child(rep).child_str("w"));
            let (grg, nr, cl) = sample_coupled(&w, root.child(rep).child_str("g"));
            assert!(grg.is_subgraph_of(&nr));
            assert!(nr.is_subgraph_of(&cl));
        }
    }

    #[test]
    fn fast_matches_naive_in_distribution_small_n() {
        // Per-pair inclusion frequencies from both samplers against the exact
        // probability, chi-square with 1 df per pair: reject below p = 0.001
        // (critical value 10.828).
        let n = 6;
        let w = WeightModel::TwoPoint { v1: 0.5, v2: 2.0, prob: 0.5 }
            .sample(n, Stream::root(SEED).child_str("w6"));
        let runs = 30_000u32;
        let root = Stream::root(SEED).child_str("chisq");
        for kind in ModelKind::ALL {
            let mut counts_naive = vec![0u32; n * n];
            let mut counts_fast = vec![0u32; n * n];
            for rep in 0..runs {
                let s = root.child(u64::from(rep));
                for g in [sample_graph(kind, &w, s.child(0)), sample_graph_fast(kind, &w, s.child(1))]
                {
                    let target: &mut Vec<u32> =
                        if g.seed() == s.child(0) { &mut counts_naive } else { &mut counts_fast };
                    for (u, v) in g.edges() {
                        target[u as usize * n + v as usize] += 1;
                    }
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let p = edge_prob_raw(kind, w.weight(i), w.weight(j), w.total());
                    let e1 = f64::from(runs) * p;
                    let e0 = f64::from(runs) * (1.0 - p);
                    for counts in [&counts_naive, &counts_fast] {
                        let o1 = f64::from(counts[i * n + j]);
                        let o0 = f64::from(runs) - o1;
                        let chi = (o1 - e1).powi(2) / e1 + (o0 - e0).powi(2) / e0;
                        assert!(
                            chi < 10.828,
                            "{kind} pair ({i},{j}): chi-square {chi} exceeds p=0.001 critical value"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn fast_sampler_joint_independence_spot_check() {
        // inclusion of two disjoint pairs must be independent: the joint
        // frequency matches the product of marginals
        let n = 6;
        let w = WeightModel::Gamma { shape: 2.0, scale: 0.8 }
            .sample(n, Stream::root(SEED).child_str("joint-w"));
        let runs = 40_000u32;
        let root = Stream::root(SEED).child_str("joint");
        let (mut c01, mut c23, mut cboth) = (0u32, 0u32, 0u32);
        for rep in 0..runs {
            let g = sample_graph_fast(ModelKind::Grg, &w, root.child(u64::from(rep)));
            let e01 = g.has_edge(0, 1);
            let e23 = g.has_edge(2, 3);
            c01 += u32::from(e01);
            c23 += u32::from(e23);
            cboth += u32::from(e01 && e23);
        }
        let m = f64::from(runs);
        let (f01, f23, fboth) = (f64::from(c01) / m, f64::from(c23) / m, f64::from(cboth) / m);
        let se = (f01 * f23 * (1.0 - f01 * f23) / m).sqrt();
        assert!(
            (fboth - f01 * f23).abs() <= 4.0 * se.max(1e-4),
            "joint {fboth} vs product {}",
            f01 * f23
        );
    }

    #[test]
    fn edge_count_concentration_at_n_1000() {
        let n = 1000;
        let w = WeightModel::Gamma { shape: 2.0, scale: 0.3 }
            .sample(n, Stream::root(SEED).child_str("w1000"));
        let total = w.total();
        for kind in ModelKind::ALL {
            let mut mean = 0.0;
            let mut var = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let p = edge_prob_raw(kind, w.weight(i), w.weight(j), total);
                    mean += p;
                    var += p * (1.0 - p);
                }
            }
            let sd = var.sqrt();
            let g = sample_graph_fast(kind, &w, Stream::root(SEED).child_str("conc"));
            let observed = g.edge_count() as f64;
            assert!(
                (observed - mean).abs() <= 5.0 * sd,
                "{kind}: observed {observed} vs mean {mean} (sd {sd})"
            );
        }
    }

    #[test]
    fn dump_format_is_stable() {
        let w = constant_weights(2.0, 4);
        let s = Stream::root(7).child(3);
        let g = sample_graph(ModelKind::ChungLu, &w, s);
        let dump = g.dump();
        let mut lines = dump.lines();
        let header = lines.next().unwrap();
        assert_eq!(header, format!("4 {} chung-lu {}", g.edge_count(), s.id()));
        let mut prev = (0u32, 0u32);
        for line in lines {
            let mut it = line.split(' ');
            let u: u32 = it.next().unwrap().parse().unwrap();
            let v: u32 = it.next().unwrap().parse().unwrap();
            assert!(u < v && u >= 1 && v <= 4);
            assert!((u, v) > prev, "edges must be sorted");
            prev = (u, v);
        }
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// GRG <= NR <= CL pointwise for positive inputs.
            #[test]
            fn edge_prob_ordering(
                wi in 1e-6f64..1e6,
                wj in 1e-6f64..1e6,
                total in 1e-6f64..1e12,
            ) {
                let grg = edge_prob_raw(ModelKind::Grg, wi, wj, total);
                let nr = edge_prob_raw(ModelKind::NorrosReittu, wi, wj, total);
                let cl = edge_prob_raw(ModelKind::ChungLu, wi, wj, total);
                prop_assert!((0.0..=1.0).contains(&grg));
                prop_assert!((0.0..=1.0).contains(&nr));
                prop_assert!((0.0..=1.0).contains(&cl));
                prop_assert!(grg <= nr, "grg {} > nr {}", grg, nr);
                prop_assert!(nr <= cl, "nr {} > cl {}", nr, cl);
            }

            /// The coupled chain never breaks, whatever the weights.
            #[test]
            fn coupled_chain_random_weights(seed in any::<u64>()) {
                let w = WeightModel::Pareto { scale: 0.5, tail_index: 2.5 }
                    .sample(12, Stream::root(seed));
                let (grg, nr, cl) = sample_coupled(&w, Stream::root(seed).child(1));
                prop_assert!(grg.is_subgraph_of(&nr));
                prop_assert!(nr.is_subgraph_of(&cl));
            }
        }
    }
}
