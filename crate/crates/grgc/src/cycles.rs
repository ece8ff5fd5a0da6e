//! Exact cycle counting and cycle-pair combinatorics.
//!
//! A cycle on vertices `(a_1, ..., a_k)` has `2k` tuple representations
//! (rotations and reflections). The canonical form fixes the minimum vertex
//! first and orients so the second entry is smaller than the last, so each
//! undirected cycle has exactly one representative. The census DFS anchors
//! every search at the cycle's minimum vertex and applies the same orientation
//! rule when closing, so each cycle is found exactly once and no post-division
//! is needed.

use crate::graph::GraphSample;
use std::collections::BTreeMap;
use std::fmt;

/// Largest `n` accepted by the exhaustive tuple-sum oracle.
pub const BRUTEFORCE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CycleError {
    /// Cycles need at least three vertices.
    TooShort { len: usize },
    /// Tuple entries must be pairwise distinct.
    RepeatedVertex { vertex: u32 },
    /// `count_canonical` needs `3 <= k <= n`.
    BadLength { n: usize, k: usize },
    /// Falling factorial exceeded 128-bit range.
    Overflow { n: usize, k: usize },
    /// Exhaustive enumeration refused: factorial blow-up.
    TooLarge { n: usize, limit: usize },
    /// `count_in_set` was asked about lengths outside the scanned range.
    OutOfScanRange { k: usize, max_scanned: usize },
    /// Segment decomposition is undefined for identical cycles.
    IdenticalCycles,
}

impl fmt::Display for CycleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleError::TooShort { len } => write!(f, "cycle needs >= 3 vertices, got {len}"),
            CycleError::RepeatedVertex { vertex } => {
                write!(f, "vertex {vertex} repeats in cycle tuple")
            }
            CycleError::BadLength { n, k } => write!(f, "need 3 <= k <= n, got k={k}, n={n}"),
            CycleError::Overflow { n, k } => {
                write!(f, "canonical tuple count overflows 128 bits for n={n}, k={k}")
            }
            CycleError::TooLarge { n, limit } => {
                write!(f, "exhaustive enumeration refused for n={n} (limit {limit})")
            }
            CycleError::OutOfScanRange { k, max_scanned } => {
                write!(f, "length {k} outside scanned range [3, {max_scanned}]")
            }
            CycleError::IdenticalCycles => write!(f, "segment profile undefined for identical cycles"),
        }
    }
}

impl std::error::Error for CycleError {}

/// The unique tuple representative of an undirected cycle: minimum vertex
/// first, second entry smaller than last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCycle {
    vertices: Vec<u32>,
}

impl CanonicalCycle {
    /// Cycle length; always at least 3.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    /// Cycle edges as normalized `(min, max)` pairs, including the wrap-around.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let k = self.vertices.len();
        (0..k).map(move |i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % k];
            (a.min(b), a.max(b))
        })
    }
}

/// Canonicalize a tuple of distinct vertex ids describing a cycle.
pub fn canonical_cycle(tuple: &[u32]) -> Result<CanonicalCycle, CycleError> {
    let k = tuple.len();
    if k < 3 {
        return Err(CycleError::TooShort { len: k });
    }
    let mut seen = tuple.to_vec();
    seen.sort_unstable();
    for w in seen.windows(2) {
        if w[0] == w[1] {
            return Err(CycleError::RepeatedVertex { vertex: w[0] });
        }
    }
    let start = (0..k).min_by_key(|&i| tuple[i]).expect("non-empty");
    let mut vertices = Vec::with_capacity(k);
    // rotate so the minimum is first, then pick the orientation with the
    // smaller second entry
    if tuple[(start + 1) % k] < tuple[(start + k - 1) % k] {
        for i in 0..k {
            vertices.push(tuple[(start + i) % k]);
        }
    } else {
        for i in 0..k {
            vertices.push(tuple[(start + k - i) % k]);
        }
    }
    Ok(CanonicalCycle { vertices })
}

/// Number of canonical k-tuples on n vertices: the falling factorial
/// `n (n-1) ... (n-k+1)` divided by `2k`.
pub fn count_canonical(n: usize, k: usize) -> Result<u128, CycleError> {
    if k < 3 || k > n {
        return Err(CycleError::BadLength { n, k });
    }
    let mut prod: u128 = 1;
    for i in 0..k {
        prod = prod
            .checked_mul((n - i) as u128)
            .ok_or(CycleError::Overflow { n, k })?;
    }
    Ok(prod / (2 * k as u128))
}

/// `ln` of [`count_canonical`], usable far beyond 128-bit range.
pub fn ln_count_canonical(n: usize, k: usize) -> Result<f64, CycleError> {
    if k < 3 || k > n {
        return Err(CycleError::BadLength { n, k });
    }
    let mut ln = -(2.0 * k as f64).ln();
    for i in 0..k {
        ln += ((n - i) as f64).ln();
    }
    Ok(ln)
}

/// Per-length cycle counts of one graph, scanned up to `max_length_scanned`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleCensus {
    counts: BTreeMap<usize, u64>,
    max_length_scanned: usize,
    total: u64,
}

impl CycleCensus {
    /// Count of cycles of exactly length `k` (0 when none were found).
    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// Non-zero counts by length.
    pub fn counts_by_length(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn max_length_scanned(&self) -> usize {
        self.max_length_scanned
    }

    /// Total number of cycles found in the scanned range.
    pub fn total_cycles(&self) -> u64 {
        self.total
    }

    /// Sum of counts over a set of lengths. Lengths outside the scanned range
    /// are an error rather than a silent zero.
    pub fn count_in_set(&self, lengths: &[usize]) -> Result<u64, CycleError> {
        let mut sum = 0u64;
        for &k in lengths {
            if k < 3 || k > self.max_length_scanned {
                return Err(CycleError::OutOfScanRange { k, max_scanned: self.max_length_scanned });
            }
            sum += self.count(k);
        }
        Ok(sum)
    }

    /// `(shortest, longest)` cycle lengths with the `(0, 0)` convention when
    /// the graph has no cycle. Meaningful for the full range only when the
    /// census was scanned far enough; callers check `max_length_scanned`.
    pub fn shortest_longest(&self) -> (usize, usize) {
        let mut it = self.counts.iter().filter(|&(_, &c)| c > 0);
        match it.next() {
            None => (0, 0),
            Some((&first, _)) => {
                let last = self
                    .counts
                    .iter()
                    .filter(|&(_, &c)| c > 0)
                    .next_back()
                    .map(|(&k, _)| k)
                    .unwrap_or(first);
                (first, last)
            }
        }
    }
}

/// Exact census of simple cycles of length 3..=`max_len`.
///
/// Rooted DFS per vertex `r`: the path stays on vertices `> r` (so `r` is the
/// cycle's minimum), a cycle closes on the edge back to `r`, and it is counted
/// only when the second-visited vertex is smaller than the last-visited one.
pub fn census(graph: &GraphSample, max_len: usize) -> CycleCensus {
    let mut counter = CensusScratch::new(graph.n());
    counter.run(graph, max_len)
}

/// Reusable buffers for [`census`]; the harness calls this once per worker.
#[derive(Debug)]
pub struct CensusScratch {
    on_path: Vec<bool>,
    path: Vec<u32>,
    iter_stack: Vec<usize>,
    counts: Vec<u64>,
}

impl CensusScratch {
    pub fn new(n: usize) -> Self {
        CensusScratch {
            on_path: vec![false; n],
            path: Vec::with_capacity(n),
            iter_stack: Vec::with_capacity(n),
            counts: Vec::new(),
        }
    }

    pub fn run(&mut self, graph: &GraphSample, max_len: usize) -> CycleCensus {
        let n = graph.n();
        assert!((3..=n).contains(&max_len), "need 3 <= max_len <= n");
        if self.on_path.len() < n {
            self.on_path.resize(n, false);
        }
        self.counts.clear();
        self.counts.resize(max_len + 1, 0);

        for root in 0..n {
            let r = root as u32;
            // skip neighbors below the root once per adjacency scan
            self.path.clear();
            self.path.push(r);
            self.on_path[root] = true;
            self.iter_stack.clear();
            self.iter_stack.push(first_ge(graph.neighbors(root), r));

            while let Some(idx) = self.iter_stack.last_mut() {
                let v = *self.path.last().unwrap() as usize;
                let nbrs = graph.neighbors(v);
                if *idx >= nbrs.len() {
                    self.iter_stack.pop();
                    self.on_path[v] = false;
                    self.path.pop();
                    continue;
                }
                let w = nbrs[*idx];
                *idx += 1;
                if w == r {
                    let len = self.path.len();
                    if len >= 3 && self.path[1] < self.path[len - 1] {
                        self.counts[len] += 1;
                    }
                } else if !self.on_path[w as usize] && self.path.len() < max_len {
                    self.on_path[w as usize] = true;
                    self.path.push(w);
                    self.iter_stack.push(first_ge(graph.neighbors(w as usize), r));
                }
            }
            self.on_path[root] = false;
        }

        let mut counts = BTreeMap::new();
        let mut total = 0u64;
        for (k, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                counts.insert(k, c);
                total += c;
            }
        }
        CycleCensus { counts, max_length_scanned: max_len, total }
    }
}

#[inline]
fn first_ge(sorted: &[u32], r: u32) -> usize {
    sorted.partition_point(|&x| x < r)
}

/// Oracle census: enumerate every canonical tuple of each length and test all
/// its edges directly. Refuses `n` above [`BRUTEFORCE_LIMIT`].
pub fn census_bruteforce(graph: &GraphSample, max_len: usize) -> Result<CycleCensus, CycleError> {
    let n = graph.n();
    if n > BRUTEFORCE_LIMIT {
        return Err(CycleError::TooLarge { n, limit: BRUTEFORCE_LIMIT });
    }
    assert!((3..=n).contains(&max_len), "need 3 <= max_len <= n");
    let mut counts = BTreeMap::new();
    let mut total = 0u64;
    for k in 3..=max_len {
        let mut c = 0u64;
        for_each_canonical_tuple(n, k, |tuple| {
            let exists = (0..k).all(|i| {
                graph.has_edge(tuple[i] as usize, tuple[(i + 1) % k] as usize)
            });
            if exists {
                c += 1;
            }
        });
        if c > 0 {
            counts.insert(k, c);
            total += c;
        }
    }
    Ok(CycleCensus { counts, max_length_scanned: max_len, total })
}

/// Visit every tuple in the canonical index set of k-cycles on vertices
/// `0..n`: first entry minimal, second entry smaller than last.
pub fn for_each_canonical_tuple<F: FnMut(&[u32])>(n: usize, k: usize, mut f: F) {
    assert!((3..=n).contains(&k), "need 3 <= k <= n");
    let mut tuple = vec![0u32; k];
    let mut used = vec![false; n];
    for first in 0..n {
        tuple[0] = first as u32;
        used[first] = true;
        fill(&mut tuple, &mut used, 1, n, &mut f);
        used[first] = false;
    }

    fn fill<F: FnMut(&[u32])>(tuple: &mut [u32], used: &mut [bool], pos: usize, n: usize, f: &mut F) {
        let k = tuple.len();
        if pos == k {
            if tuple[1] < tuple[k - 1] {
                f(tuple);
            }
            return;
        }
        // entries after the first are all larger than it
        for v in (tuple[0] as usize + 1)..n {
            if !used[v] {
                used[v] = true;
                tuple[pos] = v as u32;
                fill(tuple, used, pos + 1, n, f);
                used[v] = false;
            }
        }
    }
}

/// How two distinct cycles intersect: maximal runs of vertices consecutive in
/// both cycles (the second cycle may traverse a run in either direction).
/// Segments are ordered by the smallest position they occupy in the first
/// cycle; `shared_edges == shared_vertices - segment_count` always.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionProfile {
    pub segment_lengths: Vec<usize>,
    pub shared_vertices: usize,
    pub shared_edges: usize,
}

impl IntersectionProfile {
    pub fn segment_count(&self) -> usize {
        self.segment_lengths.len()
    }
}

/// Result of [`segment_decomposition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Overlap {
    Disjoint,
    Intersecting(IntersectionProfile),
}

/// Decompose the intersection of two distinct cycles into maximal shared
/// segments. Both inputs are canonical forms; identical cycles are rejected.
pub fn segment_decomposition(
    alpha: &CanonicalCycle,
    beta: &CanonicalCycle,
) -> Result<Overlap, CycleError> {
    if alpha == beta {
        return Err(CycleError::IdenticalCycles);
    }
    let k = alpha.len();
    let l = beta.len();
    let beta_pos: BTreeMap<u32, usize> = beta
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();

    // position of each alpha vertex in beta, if shared
    let shared: Vec<Option<usize>> = alpha
        .vertices()
        .iter()
        .map(|v| beta_pos.get(v).copied())
        .collect();
    if !shared.iter().any(Option::is_some) {
        return Ok(Overlap::Disjoint);
    }

    // step_matched[p]: alpha positions p and p+1 are both shared and adjacent
    // in beta, i.e. the edge between them belongs to both cycles
    let adjacent_in_beta = |a: usize, b: usize| {
        let d = if a > b { a - b } else { b - a };
        d == 1 || d == l - 1
    };
    let step_matched: Vec<bool> = (0..k)
        .map(|p| match (shared[p], shared[(p + 1) % k]) {
            (Some(a), Some(b)) => adjacent_in_beta(a, b),
            _ => false,
        })
        .collect();

    // a shared position starts a run when the step arriving at it is unmatched
    let starts: Vec<usize> = (0..k)
        .filter(|&p| shared[p].is_some() && !step_matched[(p + k - 1) % k])
        .collect();
    // distinct canonical cycles always break somewhere, so runs are proper
    debug_assert!(!starts.is_empty(), "full-wrap overlap implies identical cycles");

    // order by the smallest alpha position inside each run: a run wrapping
    // through position 0 is anchored at 0
    let mut segments: Vec<(usize, usize)> = starts
        .into_iter()
        .map(|start| {
            let mut len = 1;
            while step_matched[(start + len - 1) % k] {
                len += 1;
            }
            let wraps = start + len > k;
            let anchor = if wraps { 0 } else { start };
            (anchor, len)
        })
        .collect();
    segments.sort_unstable();

    let segment_lengths: Vec<usize> = segments.iter().map(|&(_, len)| len).collect();
    let shared_vertices: usize = segment_lengths.iter().sum();
    debug_assert_eq!(shared_vertices, shared.iter().filter(|s| s.is_some()).count());
    let shared_edges = shared_vertices - segment_lengths.len();
    Ok(Overlap::Intersecting(IntersectionProfile {
        segment_lengths,
        shared_vertices,
        shared_edges,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_graph, ModelKind};
    use crate::rng::Stream;
    use crate::weights::{WeightModel, WeightVector};
    use std::collections::BTreeSet;

    const SEED: u64 = 0x0c1c1e;

    fn graph_from_edges(n: usize, edges: &[(u32, u32)]) -> GraphSample {
        GraphSample::from_edge_list(
            ModelKind::Grg,
            WeightVector::new(vec![1.0; n]),
            Stream::root(0),
            edges,
        )
        .unwrap()
    }

    fn complete_graph(n: usize) -> GraphSample {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                edges.push((u, v));
            }
        }
        graph_from_edges(n, &edges)
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonical_cycle(&[3, 1, 2]).unwrap().vertices(), &[1, 2, 3]);
        assert_eq!(canonical_cycle(&[2, 9, 4, 7]).unwrap().vertices(), &[2, 7, 4, 9]);
        assert!(matches!(
            canonical_cycle(&[1, 2]),
            Err(CycleError::TooShort { len: 2 })
        ));
        assert!(matches!(
            canonical_cycle(&[1, 2, 1]),
            Err(CycleError::RepeatedVertex { vertex: 1 })
        ));
    }

    #[test]
    fn canonical_class_consistency() {
        // all 2k rotations/reflections map to the same form; exactly one of
        // them already satisfies the constraints
        let tuples: [&[u32]; 3] = [&[5, 2, 8, 1], &[10, 4, 7, 2, 6], &[3, 9, 1, 4, 8, 2, 7]];
        for base in tuples {
            let k = base.len();
            let canon = canonical_cycle(base).unwrap();
            let mut already_canonical = 0;
            for reflect in [false, true] {
                for rot in 0..k {
                    let variant: Vec<u32> = (0..k)
                        .map(|i| {
                            if reflect {
                                base[(rot + k - i) % k]
                            } else {
                                base[(rot + i) % k]
                            }
                        })
                        .collect();
                    let c = canonical_cycle(&variant).unwrap();
                    assert_eq!(c, canon);
                    if variant == canon.vertices() {
                        already_canonical += 1;
                    }
                }
            }
            assert_eq!(already_canonical, 1);
        }
    }

    #[test]
    fn count_canonical_examples() {
        assert_eq!(count_canonical(4, 3).unwrap(), 4);
        assert_eq!(count_canonical(5, 5).unwrap(), 12);
        assert!(matches!(count_canonical(3, 4), Err(CycleError::BadLength { .. })));
        assert!(matches!(count_canonical(10, 2), Err(CycleError::BadLength { .. })));
    }

    #[test]
    fn count_canonical_matches_exhaustive_filter() {
        // independent oracle: filter all k-tuples with distinct entries by the
        // canonical constraints
        for n in 3..=7 {
            for k in 3..=n {
                let mut count = 0u128;
                let mut tuple = vec![0u32; k];
                fn rec(tuple: &mut Vec<u32>, pos: usize, n: usize, count: &mut u128) {
                    let k = tuple.len();
                    if pos == k {
                        let distinct: BTreeSet<u32> = tuple.iter().copied().collect();
                        if distinct.len() == k
                            && tuple[0] == *tuple.iter().min().unwrap()
                            && tuple[1] < tuple[k - 1]
                        {
                            *count += 1;
                        }
                        return;
                    }
                    for v in 0..n as u32 {
                        tuple[pos] = v;
                        rec(tuple, pos + 1, n, count);
                    }
                }
                rec(&mut tuple, 0, n, &mut count);
                assert_eq!(count_canonical(n, k).unwrap(), count, "n={n}, k={k}");

                let mut iterated = 0u128;
                for_each_canonical_tuple(n, k, |_| iterated += 1);
                assert_eq!(iterated, count);
            }
        }
    }

    #[test]
    fn ln_count_matches_exact() {
        for (n, k) in [(4, 3), (10, 7), (400, 3), (2000, 5)] {
            let exact = count_canonical(n, k).unwrap() as f64;
            let ln = ln_count_canonical(n, k).unwrap();
            assert!((ln - exact.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn census_complete_graph_k4() {
        let g = complete_graph(4);
        let c = census(&g, 4);
        assert_eq!(c.count(3), 4);
        assert_eq!(c.count(4), 3);
        assert_eq!(c.total_cycles(), 7);
        let b = census_bruteforce(&g, 4).unwrap();
        assert_eq!(c, b);
    }

    #[test]
    fn census_empty_and_single_triangle() {
        let empty = graph_from_edges(5, &[]);
        let c = census(&empty, 5);
        assert_eq!(c.total_cycles(), 0);
        assert_eq!(c.shortest_longest(), (0, 0));

        let tri = graph_from_edges(6, &[(0, 1), (1, 2), (0, 2)]);
        let c = census(&tri, 6);
        assert_eq!(c.count(3), 1);
        assert_eq!(c.total_cycles(), 1);
        assert_eq!(c.shortest_longest(), (3, 3));
    }

    #[test]
    fn census_respects_length_cap() {
        let g = complete_graph(6);
        let capped = census(&g, 4);
        let full = census(&g, 6);
        assert_eq!(capped.count(3), full.count(3));
        assert_eq!(capped.count(4), full.count(4));
        assert_eq!(capped.count(5), 0);
        assert_eq!(capped.max_length_scanned(), 4);
        // K6: (6)_k/(2k) tuples, all of which are cycles
        assert_eq!(full.count(3) as u128, count_canonical(6, 3).unwrap());
        assert_eq!(full.count(6) as u128, count_canonical(6, 6).unwrap());
    }

    #[test]
    fn bruteforce_refuses_large_n() {
        let g = graph_from_edges(12, &[(0, 1)]);
        assert!(matches!(
            census_bruteforce(&g, 3),
            Err(CycleError::TooLarge { n: 12, limit: BRUTEFORCE_LIMIT })
        ));
    }

    #[test]
    fn census_matches_bruteforce_randomized() {
        let root = Stream::root(SEED).child_str("oracle");
        let models = [
            WeightModel::Constant(0.9),
            WeightModel::Exponential { rate: 1.0 },
        ];
        for (mi, model) in models.iter().enumerate() {
            for kind in ModelKind::ALL {
                for rep in 0..50u64 {
                    let s = root.child(mi as u64).child_str(kind.as_str()).child(rep);
                    let n = 4 + (rep % 5) as usize; // 4..=8
                    let w = model.sample(n, s.child_str("w"));
                    let g = sample_graph(kind, &w, s.child_str("g"));
                    let fast = census(&g, n);
                    let brute = census_bruteforce(&g, n).unwrap();
                    assert_eq!(fast, brute, "model={model:?} kind={kind} rep={rep}");
                }
            }
        }
    }

    #[test]
    fn census_invariant_under_relabeling() {
        use rand::seq::SliceRandom;
        let root = Stream::root(SEED).child_str("relabel");
        let w = WeightModel::Exponential { rate: 1.0 }.sample(8, root.child(0));
        let g = sample_graph(ModelKind::NorrosReittu, &w, root.child(1));
        let base = census(&g, 8);
        let mut rng = root.child(2).rng();
        for _ in 0..20 {
            let mut perm: Vec<u32> = (0..8).collect();
            perm.shuffle(&mut rng);
            let edges: Vec<(u32, u32)> = g
                .edges()
                .iter()
                .map(|&(u, v)| {
                    let (a, b) = (perm[u as usize], perm[v as usize]);
                    (a.min(b), a.max(b))
                })
                .collect();
            let relabeled = graph_from_edges(8, &edges);
            assert_eq!(census(&relabeled, 8).counts_by_length(), base.counts_by_length());
        }
    }

    #[test]
    fn count_in_set_examples() {
        let g = complete_graph(4);
        let c = census(&g, 4);
        assert_eq!(c.count_in_set(&[3]).unwrap(), 4);
        assert_eq!(c.count_in_set(&[3, 4]).unwrap(), 7);
        assert_eq!(c.count_in_set(&[]).unwrap(), 0);
        assert!(matches!(
            c.count_in_set(&[5]),
            Err(CycleError::OutOfScanRange { k: 5, max_scanned: 4 })
        ));
        assert!(c.count_in_set(&[2]).is_err());
    }

    #[test]
    fn shortest_longest_examples() {
        let c = census(&complete_graph(4), 4);
        assert_eq!(c.shortest_longest(), (3, 4));
    }

    #[test]
    fn segment_decomposition_paper_shape() {
        // alpha = (1,2,3,4,5,6), beta = (2,3,6,7,1): segments (1,2,3) and (6)
        let alpha = canonical_cycle(&[1, 2, 3, 4, 5, 6]).unwrap();
        let beta = canonical_cycle(&[2, 3, 6, 7, 1]).unwrap();
        assert_eq!(beta.vertices(), &[1, 2, 3, 6, 7]);
        match segment_decomposition(&alpha, &beta).unwrap() {
            Overlap::Intersecting(p) => {
                assert_eq!(p.segment_lengths, vec![3, 1]);
                assert_eq!(p.segment_count(), 2);
                assert_eq!(p.shared_vertices, 4);
                assert_eq!(p.shared_edges, 2);
                // cross-check against explicit edge sets
                let ea: BTreeSet<_> = alpha.edges().collect();
                let eb: BTreeSet<_> = beta.edges().collect();
                assert_eq!(ea.intersection(&eb).count(), 2);
            }
            Overlap::Disjoint => panic!("cycles intersect"),
        }
    }

    #[test]
    fn segment_decomposition_disjoint_and_identical() {
        let a = canonical_cycle(&[1, 2, 3]).unwrap();
        let b = canonical_cycle(&[4, 5, 6]).unwrap();
        assert_eq!(segment_decomposition(&a, &b).unwrap(), Overlap::Disjoint);
        assert!(matches!(
            segment_decomposition(&a, &a.clone()),
            Err(CycleError::IdenticalCycles)
        ));
    }

    #[test]
    fn segment_wraparound_run_is_single_segment() {
        // shared vertices 1,2,6 consecutive in alpha through the wrap 6->1,
        // and consecutive in beta as well
        let alpha = canonical_cycle(&[1, 2, 3, 4, 5, 6]).unwrap();
        let beta = canonical_cycle(&[6, 1, 2, 7, 8]).unwrap();
        match segment_decomposition(&alpha, &beta).unwrap() {
            Overlap::Intersecting(p) => {
                assert_eq!(p.segment_lengths, vec![3]);
                assert_eq!(p.shared_edges, 2);
            }
            Overlap::Disjoint => panic!("cycles intersect"),
        }
    }

    #[test]
    fn shared_edges_match_edge_set_intersection_randomized() {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut rng = Stream::root(SEED).child_str("segrand").rng();
        let mut checked = 0;
        while checked < 300 {
            let n = rng.random_range(6..12usize);
            let k = rng.random_range(3..=n.min(8));
            let l = rng.random_range(3..=n.min(8));
            let mut verts: Vec<u32> = (0..n as u32).collect();
            verts.shuffle(&mut rng);
            let a: Vec<u32> = verts[..k].to_vec();
            verts.shuffle(&mut rng);
            let b: Vec<u32> = verts[..l].to_vec();
            let alpha = canonical_cycle(&a).unwrap();
            let beta = canonical_cycle(&b).unwrap();
            if alpha == beta {
                continue;
            }
            let ea: BTreeSet<_> = alpha.edges().collect();
            let eb: BTreeSet<_> = beta.edges().collect();
            let va: BTreeSet<_> = alpha.vertices().iter().collect();
            let vb: BTreeSet<_> = beta.vertices().iter().collect();
            match segment_decomposition(&alpha, &beta).unwrap() {
                Overlap::Disjoint => {
                    assert_eq!(va.intersection(&vb).count(), 0);
                }
                Overlap::Intersecting(p) => {
                    assert_eq!(p.shared_vertices, va.intersection(&vb).count());
                    assert_eq!(p.shared_edges, ea.intersection(&eb).count());
                    assert_eq!(p.shared_edges, p.shared_vertices - p.segment_count());
                    assert!(p.segment_count() <= k.min(l));
                }
            }
            checked += 1;
        }
    }
}
