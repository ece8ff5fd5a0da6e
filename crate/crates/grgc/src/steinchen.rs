//! Stein-Chen error terms for the Poisson approximation of cycle counts.
//!
//! Two families of quantities live here. Conditionally on a weight vector,
//! `b1` and `b2` sum first and joint moments of cycle indicators over
//! neighborhoods of cycles sharing an edge or a vertex; they are evaluated
//! exhaustively at small `n` and by Monte Carlo otherwise. Unconditionally,
//! the explicit three-term bound on the total variation distance between the
//! cycle count on a length set and its limiting Poisson law is assembled from
//! the per-length probability `p_k` and the pair-class probabilities
//! `p_{k,l,s,i}` indexed by segment profiles.
//!
//! The third error term `b3` vanishes structurally for both neighborhood
//! choices and is represented as a certified zero rather than estimated.
//!
//! A caution on pair classes: the probability attached to a class `(k,l,s,i)`
//! is exactly representative-independent for constant weights, where it only
//! depends on the union edge count. For non-constant weights, distinct union
//! shapes inside one class differ at order `1/n`, so the exact closed-form
//! path is restricted to constant models and the Monte Carlo path evaluates a
//! fixed canonical representative per class.

use crate::cycles::{
    canonical_cycle, for_each_canonical_tuple, ln_count_canonical, segment_decomposition,
    CanonicalCycle, Overlap,
};
use crate::rng::{Stream, StreamRng};
use crate::weights::{WeightError, WeightModel, WeightVector};
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, LazyLock, Mutex};

/// Largest `n` accepted by the exhaustive `b1`/`b2` evaluators.
pub const EXACT_LIMIT: usize = 8;

/// Largest cycle length accepted in bound length sets; the class space grows
/// like `k^k`.
pub const MAX_BOUND_LENGTH: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum SteinChenError {
    /// Exhaustive evaluation refused; the caller picks the estimator explicitly.
    TooLarge { n: usize, limit: usize },
    /// Length set must satisfy `3 <= k <= n` (and `k <= MAX_BOUND_LENGTH` for bounds).
    BadLengthSet { k: usize, n: usize },
    /// A required `p_k` input is missing.
    MissingPk { k: usize },
    /// A required pair-class input is missing.
    MissingClass { key: ClassKey },
    /// Moments required for the limit intensities are infinite.
    Weights(WeightError),
    /// A cycle tuple referenced a vertex outside `[0, n)`.
    VertexOutOfRange { vertex: u32, n: usize },
}

impl fmt::Display for SteinChenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SteinChenError::TooLarge { n, limit } => {
                write!(f, "exact evaluation refused for n={n} (limit {limit})")
            }
            SteinChenError::BadLengthSet { k, n } => {
                write!(f, "length {k} invalid for n={n}")
            }
            SteinChenError::MissingPk { k } => write!(f, "missing p_k input for k={k}"),
            SteinChenError::MissingClass { key } => write!(f, "missing class input for {key}"),
            SteinChenError::Weights(e) => write!(f, "{e}"),
            SteinChenError::VertexOutOfRange { vertex, n } => {
                write!(f, "vertex {vertex} outside graph of size {n}")
            }
        }
    }
}

impl std::error::Error for SteinChenError {}

impl From<WeightError> for SteinChenError {
    fn from(e: WeightError) -> Self {
        SteinChenError::Weights(e)
    }
}

/// Neighborhood choice for `b1`/`b2`: cycles sharing at least one edge, or at
/// least one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BVariant {
    EdgeSharing,
    VertexSharing,
}

impl BVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            BVariant::EdgeSharing => "edge-sharing",
            BVariant::VertexSharing => "vertex-sharing",
        }
    }
}

/// How the numbers in a report were produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    ExactSmallN,
    MonteCarlo { reps: u64, standard_error: f64 },
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactSmallN => "exact-small-n",
            Method::MonteCarlo { .. } => "monte-carlo",
        }
    }
}

/// The dependence-leak term: zero under both neighborhood choices because
/// indicators outside an edge-sharing neighborhood are conditionally
/// independent given the weights, and indicators outside a vertex-sharing
/// neighborhood are unconditionally independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StructuralZero;

impl StructuralZero {
    pub fn value(self) -> f64 {
        0.0
    }

    pub fn justification(self) -> &'static str {
        "indicators outside the neighborhood are independent under the matching sigma-field"
    }
}

/// Full evaluation record: neighborhood moments, the certified-zero leak term,
/// and the three-term bound decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinChenReport {
    pub variant: BVariant,
    pub b1: f64,
    pub b2: f64,
    pub b3: StructuralZero,
    pub summand1: f64,
    pub summand2: f64,
    pub summand3: f64,
    pub total_bound: f64,
    /// Presentation note: a total at or above one carries no information.
    pub vacuous: bool,
    pub method: Method,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
    pub reps: u64,
}

/// Probability that one fixed cycle exists, conditionally on the weights:
/// the product over the cycle's edges of `w_x w_y / (L + w_x w_y)`,
/// accumulated in log space.
pub fn conditional_cycle_prob(
    weights: &WeightVector,
    alpha: &CanonicalCycle,
) -> Result<f64, SteinChenError> {
    check_range(weights, alpha)?;
    Ok(ln_edge_product(weights, alpha.edges()).exp())
}

/// Probability that two fixed cycles both exist, conditionally on the weights:
/// the product over the union of their edge sets (distinct edges are
/// conditionally independent).
pub fn conditional_pair_prob(
    weights: &WeightVector,
    alpha: &CanonicalCycle,
    beta: &CanonicalCycle,
) -> Result<f64, SteinChenError> {
    check_range(weights, alpha)?;
    check_range(weights, beta)?;
    let mut union: Vec<(u32, u32)> = alpha.edges().chain(beta.edges()).collect();
    union.sort_unstable();
    union.dedup();
    Ok(ln_edge_product(weights, union.into_iter()).exp())
}

fn check_range(weights: &WeightVector, cycle: &CanonicalCycle) -> Result<(), SteinChenError> {
    let n = weights.len();
    for &v in cycle.vertices() {
        if v as usize >= n {
            return Err(SteinChenError::VertexOutOfRange { vertex: v, n });
        }
    }
    Ok(())
}

fn ln_edge_product(weights: &WeightVector, edges: impl Iterator<Item = (u32, u32)>) -> f64 {
    let total = weights.total();
    let mut ln = 0.0;
    for (x, y) in edges {
        let prod = weights.weight(x as usize) * weights.weight(y as usize);
        ln += prod.ln() - (total + prod).ln();
    }
    ln
}

// exhaustive tuple table for small n: vertex and edge bitmasks plus log prob
struct TupleEntry {
    vmask: u32,
    emask: u64,
    p: f64,
}

fn build_tuple_table(
    weights: &WeightVector,
    lengths: &[usize],
) -> Result<(Vec<TupleEntry>, Vec<f64>), SteinChenError> {
    let n = weights.len();
    if n > EXACT_LIMIT {
        return Err(SteinChenError::TooLarge { n, limit: EXACT_LIMIT });
    }
    for &k in lengths {
        if k < 3 || k > n {
            return Err(SteinChenError::BadLengthSet { k, n });
        }
    }
    let total = weights.total();
    let mut ln_edge = vec![0.0; n * n];
    for u in 0..n {
        for v in (u + 1)..n {
            let prod = weights.weight(u) * weights.weight(v);
            ln_edge[u * n + v] = prod.ln() - (total + prod).ln();
        }
    }
    let mut entries = Vec::new();
    for &k in lengths {
        for_each_canonical_tuple(n, k, |tuple| {
            let mut vmask = 0u32;
            let mut emask = 0u64;
            let mut ln_p = 0.0;
            for i in 0..k {
                let a = tuple[i] as usize;
                let b = tuple[(i + 1) % k] as usize;
                let (lo, hi) = (a.min(b), a.max(b));
                vmask |= 1 << a;
                emask |= 1 << (lo * n + hi);
                ln_p += ln_edge[lo * n + hi];
            }
            entries.push(TupleEntry { vmask, emask, p: ln_p.exp() });
        });
    }
    Ok((entries, ln_edge))
}

#[inline]
fn in_neighborhood(a: &TupleEntry, b: &TupleEntry, variant: BVariant) -> bool {
    match variant {
        BVariant::EdgeSharing => a.emask & b.emask != 0,
        BVariant::VertexSharing => a.vmask & b.vmask != 0,
    }
}

/// Exhaustive first-moment neighborhood sum, conditionally on the weights:
/// every ordered pair of canonical cycles with lengths in the set whose
/// neighborhoods overlap contributes `p_a * p_b`; each cycle neighbors itself.
/// Refuses `n` above [`EXACT_LIMIT`].
pub fn b1_exact(
    weights: &WeightVector,
    lengths: &[usize],
    variant: BVariant,
) -> Result<f64, SteinChenError> {
    let (entries, _) = build_tuple_table(weights, lengths)?;
    let mut sum = 0.0;
    for a in &entries {
        for b in &entries {
            if in_neighborhood(a, b, variant) {
                sum += a.p * b.p;
            }
        }
    }
    Ok(sum)
}

/// Exhaustive joint-moment neighborhood sum, conditionally on the weights:
/// ordered pairs of distinct neighboring cycles contribute the probability of
/// their union. Refuses `n` above [`EXACT_LIMIT`].
pub fn b2_exact(
    weights: &WeightVector,
    lengths: &[usize],
    variant: BVariant,
) -> Result<f64, SteinChenError> {
    let (entries, ln_edge) = build_tuple_table(weights, lengths)?;
    let mut sum = 0.0;
    for (ia, a) in entries.iter().enumerate() {
        for (ib, b) in entries.iter().enumerate() {
            if ia == ib || !in_neighborhood(a, b, variant) {
                continue;
            }
            let mut mask = a.emask | b.emask;
            let mut ln_p = 0.0;
            while mask != 0 {
                let bit = mask.trailing_zeros() as usize;
                ln_p += ln_edge[bit];
                mask &= mask - 1;
            }
            sum += ln_p.exp();
        }
    }
    Ok(sum)
}

/// Monte Carlo estimate of the `b1` sum for a fixed weight vector: uniform
/// cycle pairs are drawn per ordered length pair and scaled by the index-set
/// sizes.
pub fn b1_mc(
    weights: &WeightVector,
    lengths: &[usize],
    variant: BVariant,
    reps: u64,
    stream: Stream,
) -> Result<McEstimate, SteinChenError> {
    mc_neighborhood_sum(weights, lengths, variant, reps, stream, false)
}

/// Monte Carlo estimate of the `b2` sum for a fixed weight vector.
pub fn b2_mc(
    weights: &WeightVector,
    lengths: &[usize],
    variant: BVariant,
    reps: u64,
    stream: Stream,
) -> Result<McEstimate, SteinChenError> {
    mc_neighborhood_sum(weights, lengths, variant, reps, stream, true)
}

fn mc_neighborhood_sum(
    weights: &WeightVector,
    lengths: &[usize],
    variant: BVariant,
    reps: u64,
    stream: Stream,
    joint: bool,
) -> Result<McEstimate, SteinChenError> {
    let n = weights.len();
    for &k in lengths {
        if k < 3 || k > n {
            return Err(SteinChenError::BadLengthSet { k, n });
        }
    }
    assert!(reps >= 1);
    let mut rng = stream.rng();
    let mut pool: Vec<u32> = (0..n as u32).collect();
    let mut value = 0.0;
    let mut var = 0.0;
    for &k in lengths {
        for &l in lengths {
            let scale_ln = ln_count_canonical(n, k).expect("validated")
                + ln_count_canonical(n, l).expect("validated");
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..reps {
                let alpha = random_canonical(&mut pool, k, &mut rng);
                let beta = random_canonical(&mut pool, l, &mut rng);
                let x = match pair_statistic(weights, &alpha, &beta, variant, joint) {
                    Some(v) => v,
                    None => 0.0,
                };
                sum += x;
                sumsq += x * x;
            }
            let m = reps as f64;
            let mean = sum / m;
            let sd = ((sumsq / m - mean * mean).max(0.0) / m).sqrt();
            value += scale_ln.exp() * mean;
            var += (scale_ln.exp() * sd).powi(2);
        }
    }
    Ok(McEstimate { value, se: var.sqrt(), reps })
}

fn pair_statistic(
    weights: &WeightVector,
    alpha: &CanonicalCycle,
    beta: &CanonicalCycle,
    variant: BVariant,
    joint: bool,
) -> Option<f64> {
    if alpha == beta {
        // the joint sum excludes the diagonal; the first-moment sum keeps it
        return if joint {
            None
        } else {
            let p = conditional_cycle_prob(weights, alpha).ok()?;
            Some(p * p)
        };
    }
    let related = match segment_decomposition(alpha, beta).ok()? {
        Overlap::Disjoint => false,
        Overlap::Intersecting(profile) => match variant {
            BVariant::VertexSharing => true,
            BVariant::EdgeSharing => profile.shared_edges >= 1,
        },
    };
    if !related {
        return None;
    }
    if joint {
        conditional_pair_prob(weights, alpha, beta).ok()
    } else {
        let pa = conditional_cycle_prob(weights, alpha).ok()?;
        let pb = conditional_cycle_prob(weights, beta).ok()?;
        Some(pa * pb)
    }
}

fn random_canonical(pool: &mut [u32], k: usize, rng: &mut StreamRng) -> CanonicalCycle {
    // partial Fisher-Yates: a uniform ordered k-tuple of distinct vertices,
    // whose canonical form is uniform on the index set
    let n = pool.len();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    canonical_cycle(&pool[..k]).expect("distinct by construction")
}

/// Exact per-length cycle probability for a constant weight model:
/// `(c^2 / (n c + c^2))^k`.
pub fn pk_constant(c: f64, n: usize, k: usize) -> f64 {
    let pe = (c * c) / (n as f64 * c + c * c);
    pe.powi(k as i32)
}

/// Estimate `p_k`, the unconditional probability that a fixed k-cycle exists,
/// by averaging the conditional product over fresh weight vectors. With
/// constant weights the closed form is returned with zero standard error.
pub fn pk_mc(
    model: &WeightModel,
    n: usize,
    k: usize,
    reps: u64,
    stream: Stream,
) -> Result<McEstimate, SteinChenError> {
    if k < 3 || k > n {
        return Err(SteinChenError::BadLengthSet { k, n });
    }
    assert!(reps >= 1);
    if let WeightModel::Constant(c) = *model {
        return Ok(McEstimate { value: pk_constant(c, n, k), se: 0.0, reps });
    }
    let mut rng = stream.rng();
    let mut buf = Vec::with_capacity(n);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..reps {
        model.sample_into(n, &mut rng, &mut buf);
        let total: f64 = buf.iter().sum();
        // ring product over the first k weights, in log space
        let mut ln_p = 0.0;
        for i in 0..k {
            let prev = if i == 0 { buf[k - 1] } else { buf[i - 1] };
            ln_p += (buf[i] * buf[i]).ln() - (total + buf[i] * prev).ln();
        }
        let x = ln_p.exp();
        sum += x;
        sumsq += x * x;
    }
    let m = reps as f64;
    let mean = sum / m;
    let se = ((sumsq / m - mean * mean).max(0.0) / m).sqrt();
    Ok(McEstimate { value: mean, se, reps })
}

/// Identifier of a pair class: ordered cycle lengths plus the segment profile
/// (segment count and lengths, ordered along the first cycle).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClassKey {
    pub k: usize,
    pub l: usize,
    pub s: usize,
    pub segment_lengths: Vec<usize>,
}

impl fmt::Display for ClassKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(k={}, l={}, s={}, i={:?})",
            self.k, self.l, self.s, self.segment_lengths
        )
    }
}

impl ClassKey {
    pub fn shared_vertices(&self) -> usize {
        self.segment_lengths.iter().sum()
    }

    /// Edges of the union graph of any pair in this class.
    pub fn union_edge_count(&self) -> usize {
        self.k + self.l - self.shared_vertices() + self.s
    }
}

/// A concrete cycle pair realizing a class, relabeled to a compact vertex
/// range `0..vertex_count`.
#[derive(Debug, Clone)]
pub struct Representative {
    pub alpha: CanonicalCycle,
    pub beta: CanonicalCycle,
    pub union_edges: Vec<(u32, u32)>,
    pub vertex_count: usize,
}

/// All realizable segment profiles for an ordered pair of cycle lengths,
/// discovered by classifying every cycle of the second length against one
/// fixed cycle of the first length on `k + l` vertices. Up to four
/// representatives are retained per class.
#[derive(Debug, Clone, Default)]
pub struct ClassCatalog {
    classes: BTreeMap<(usize, Vec<usize>), Vec<Representative>>,
}

impl ClassCatalog {
    pub fn contains(&self, s: usize, lengths: &[usize]) -> bool {
        self.classes.contains_key(&(s, lengths.to_vec()))
    }

    pub fn representative(&self, s: usize, lengths: &[usize]) -> Option<&Representative> {
        self.classes.get(&(s, lengths.to_vec())).and_then(|v| v.first())
    }

    pub fn representatives(&self, s: usize, lengths: &[usize]) -> &[Representative] {
        self.classes
            .get(&(s, lengths.to_vec()))
            .map_or(&[], Vec::as_slice)
    }

    pub fn class_keys(&self, k: usize, l: usize) -> Vec<ClassKey> {
        self.classes
            .keys()
            .map(|(s, lengths)| ClassKey { k, l, s: *s, segment_lengths: lengths.clone() })
            .collect()
    }
}

const MAX_REPRESENTATIVES: usize = 4;

static CATALOG_CACHE: LazyLock<Mutex<BTreeMap<(usize, usize), Arc<ClassCatalog>>>> =
    LazyLock::new(|| Mutex::new(BTreeMap::new()));

/// Catalog of realizable classes for ordered lengths `(k, l)`.
pub fn class_catalog(k: usize, l: usize) -> Arc<ClassCatalog> {
    assert!(k >= 3 && l >= 3, "cycle lengths start at 3");
    if let Some(hit) = CATALOG_CACHE.lock().unwrap().get(&(k, l)) {
        return Arc::clone(hit);
    }
    let n0 = k + l;
    let alpha_tuple: Vec<u32> = (0..k as u32).collect();
    let alpha = canonical_cycle(&alpha_tuple).expect("identity tuple is canonical");
    let mut catalog = ClassCatalog::default();
    for_each_canonical_tuple(n0, l, |tuple| {
        let beta = canonical_cycle(tuple).expect("iterator yields valid tuples");
        if beta == alpha {
            return;
        }
        let profile = match segment_decomposition(&alpha, &beta) {
            Ok(Overlap::Intersecting(p)) => p,
            _ => return,
        };
        let key = (profile.segment_count(), profile.segment_lengths.clone());
        let reps = catalog.classes.entry(key).or_default();
        if reps.len() >= MAX_REPRESENTATIVES {
            return;
        }
        reps.push(relabel_pair(&alpha, &beta));
    });
    let arc = Arc::new(catalog);
    CATALOG_CACHE.lock().unwrap().insert((k, l), Arc::clone(&arc));
    arc
}

fn relabel_pair(alpha: &CanonicalCycle, beta: &CanonicalCycle) -> Representative {
    // alpha occupies 0..k already; beta's new vertices get ids k, k+1, ...
    // in order of appearance
    let k = alpha.len();
    let mut map: BTreeMap<u32, u32> = alpha.vertices().iter().map(|&v| (v, v)).collect();
    let mut next = k as u32;
    let beta_relabeled: Vec<u32> = beta
        .vertices()
        .iter()
        .map(|&v| {
            *map.entry(v).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect();
    let beta2 = canonical_cycle(&beta_relabeled).expect("relabeling keeps distinctness");
    let mut union_edges: Vec<(u32, u32)> = alpha.edges().chain(beta2.edges()).collect();
    union_edges.sort_unstable();
    union_edges.dedup();
    Representative {
        alpha: alpha.clone(),
        beta: beta2,
        union_edges,
        vertex_count: next as usize,
    }
}

/// Exact class probability for a constant weight model: the per-edge
/// probability raised to the union edge count.
pub fn p_class_constant(c: f64, n: usize, key: &ClassKey) -> f64 {
    let pe = (c * c) / (n as f64 * c + c * c);
    pe.powi(key.union_edge_count() as i32)
}

/// Monte Carlo estimate of a class probability: average, over fresh weight
/// vectors, of the conditional probability of one canonical representative's
/// union graph.
pub fn p_class_mc(
    model: &WeightModel,
    n: usize,
    representative: &Representative,
    reps: u64,
    stream: Stream,
) -> Result<McEstimate, SteinChenError> {
    if representative.vertex_count > n {
        return Ok(McEstimate { value: 0.0, se: 0.0, reps });
    }
    assert!(reps >= 1);
    let mut rng = stream.rng();
    let mut buf = Vec::with_capacity(n);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..reps {
        model.sample_into(n, &mut rng, &mut buf);
        let total: f64 = buf.iter().sum();
        let mut ln_p = 0.0;
        for &(x, y) in &representative.union_edges {
            let prod = buf[x as usize] * buf[y as usize];
            ln_p += prod.ln() - (total + prod).ln();
        }
        let v = ln_p.exp();
        sum += v;
        sumsq += v * v;
    }
    let m = reps as f64;
    let mean = sum / m;
    let se = ((sumsq / m - mean * mean).max(0.0) / m).sqrt();
    Ok(McEstimate { value: mean, se, reps })
}

/// Probability attached to a pair class in [`BoundInputs`]; unrealizable
/// profiles are flagged rather than silently zeroed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassProb {
    Value(f64),
    Unrealizable,
}

impl ClassProb {
    fn value(self) -> f64 {
        match self {
            ClassProb::Value(v) => v,
            ClassProb::Unrealizable => 0.0,
        }
    }
}

/// Probability inputs for the three-term bound: `p_k` per length and a value
/// (or unrealizable flag) for every segment profile `(k, l, s, i)` with
/// `s in [k]` and `i in [k]^s`.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    p_k: BTreeMap<usize, f64>,
    classes: BTreeMap<ClassKey, ClassProb>,
    method: Method,
}

impl BoundInputs {
    pub fn new(method: Method) -> Self {
        BoundInputs { p_k: BTreeMap::new(), classes: BTreeMap::new(), method }
    }

    pub fn set_pk(&mut self, k: usize, value: f64) {
        self.p_k.insert(k, value);
    }

    pub fn set_class(&mut self, key: ClassKey, prob: ClassProb) {
        self.classes.insert(key, prob);
    }

    pub fn pk(&self, k: usize) -> Option<f64> {
        self.p_k.get(&k).copied()
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Keys flagged unrealizable (no cycle pair has that profile).
    pub fn unrealizable_classes(&self) -> Vec<&ClassKey> {
        self.classes
            .iter()
            .filter(|(_, p)| matches!(p, ClassProb::Unrealizable))
            .map(|(k, _)| k)
            .collect()
    }
}

/// Visit every tuple `i` in `[k]^s` (entries in `1..=k`).
fn for_each_profile<F: FnMut(&[usize])>(k: usize, s: usize, mut f: F) {
    let mut tuple = vec![1usize; s];
    loop {
        f(&tuple);
        let mut pos = s;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if tuple[pos] < k {
                tuple[pos] += 1;
                for t in tuple.iter_mut().skip(pos + 1) {
                    *t = 1;
                }
                break;
            }
        }
    }
}

fn validate_lengths(n: usize, lengths: &[usize]) -> Result<(), SteinChenError> {
    for &k in lengths {
        if k < 3 || k > n || k > MAX_BOUND_LENGTH {
            return Err(SteinChenError::BadLengthSet { k, n });
        }
    }
    Ok(())
}

/// Closed-form bound inputs for a constant weight model: exact `p_k` and exact
/// class probabilities, with realizability decided by the class catalogs.
pub fn exact_inputs_constant(
    c: f64,
    n: usize,
    lengths: &[usize],
) -> Result<BoundInputs, SteinChenError> {
    validate_lengths(n, lengths)?;
    let mut inputs = BoundInputs::new(Method::ExactSmallN);
    for &k in lengths {
        inputs.set_pk(k, pk_constant(c, n, k));
    }
    for &k in lengths {
        for &l in lengths {
            let catalog = class_catalog(k, l);
            for s in 1..=k {
                for_each_profile(k, s, |profile| {
                    let key = ClassKey { k, l, s, segment_lengths: profile.to_vec() };
                    let prob = match catalog.representative(s, profile) {
                        Some(rep) if rep.vertex_count <= n => {
                            ClassProb::Value(p_class_constant(c, n, &key))
                        }
                        _ => ClassProb::Unrealizable,
                    };
                    inputs.set_class(key, prob);
                });
            }
        }
    }
    Ok(inputs)
}

/// Monte Carlo bound inputs for an arbitrary weight model: `p_k` via
/// [`pk_mc`] and class probabilities via [`p_class_mc`] on one canonical
/// representative each.
pub fn mc_inputs(
    model: &WeightModel,
    n: usize,
    lengths: &[usize],
    reps: u64,
    stream: Stream,
) -> Result<BoundInputs, SteinChenError> {
    validate_lengths(n, lengths)?;
    let mut max_se = 0.0f64;
    let mut inputs = BoundInputs::new(Method::MonteCarlo { reps, standard_error: 0.0 });
    for (idx, &k) in lengths.iter().enumerate() {
        let est = pk_mc(model, n, k, reps, stream.child_str("pk").child(idx as u64))?;
        max_se = max_se.max(est.se);
        inputs.set_pk(k, est.value);
    }
    let mut class_stream_idx = 0u64;
    for &k in lengths {
        for &l in lengths {
            let catalog = class_catalog(k, l);
            for s in 1..=k {
                let mut err = None;
                for_each_profile(k, s, |profile| {
                    if err.is_some() {
                        return;
                    }
                    let key = ClassKey { k, l, s, segment_lengths: profile.to_vec() };
                    let prob = match catalog.representative(s, profile) {
                        Some(rep) if rep.vertex_count <= n => {
                            let est = p_class_mc(
                                model,
                                n,
                                rep,
                                reps,
                                stream.child_str("class").child(class_stream_idx),
                            );
                            class_stream_idx += 1;
                            match est {
                                Ok(e) => {
                                    max_se = max_se.max(e.se);
                                    ClassProb::Value(e.value)
                                }
                                Err(e) => {
                                    err = Some(e);
                                    return;
                                }
                            }
                        }
                        _ => ClassProb::Unrealizable,
                    };
                    inputs.set_class(key, prob);
                });
                if let Some(e) = err {
                    return Err(e);
                }
            }
        }
    }
    inputs.method = Method::MonteCarlo { reps, standard_error: max_se };
    Ok(inputs)
}

/// Assemble the explicit three-term bound on the total variation distance
/// between the cycle count on the length set and its limiting Poisson law:
///
/// * first term: `(1/2n) * sum_{k,l} p_k p_l n^{k+l}`,
/// * second term: `sum_{k,l} sum_{s,i} p_{k,l,s,i} (2kl)^{s-1} n^{k+l-|i|}`,
/// * third term: `sum_k | (n)_k/(2k) * p_k - lambda_k |`.
///
/// Inputs must cover every `p_k` and every profile; missing entries are an
/// error, never a silent zero. The returned report uses the vertex-sharing
/// neighborhood (the one that makes the leak term vanish unconditionally) and
/// carries the two neighborhood sums as their bound values.
pub fn tv_bound(
    model: &WeightModel,
    n: usize,
    lengths: &[usize],
    inputs: &BoundInputs,
) -> Result<SteinChenReport, SteinChenError> {
    validate_lengths(n, lengths)?;
    let rho = model.rho()?;
    let ln_n = (n as f64).ln();

    let mut summand1 = 0.0;
    for &k in lengths {
        let pk = inputs.pk(k).ok_or(SteinChenError::MissingPk { k })?;
        for &l in lengths {
            let pl = inputs.pk(l).ok_or(SteinChenError::MissingPk { k: l })?;
            summand1 +=
                (pk.ln() + pl.ln() + ((k + l) as f64) * ln_n - (2.0 * n as f64).ln()).exp();
        }
    }

    let mut summand2 = 0.0;
    let mut missing: Option<ClassKey> = None;
    for &k in lengths {
        for &l in lengths {
            for s in 1..=k {
                for_each_profile(k, s, |profile| {
                    if missing.is_some() {
                        return;
                    }
                    let key = ClassKey { k, l, s, segment_lengths: profile.to_vec() };
                    match inputs.classes.get(&key) {
                        None => missing = Some(key),
                        Some(prob) => {
                            let p = prob.value();
                            if p > 0.0 {
                                let shared: usize = profile.iter().sum();
                                let ln_term = p.ln()
                                    + ((s - 1) as f64) * (2.0 * (k * l) as f64).ln()
                                    + ((k + l - shared) as f64) * ln_n;
                                summand2 += ln_term.exp();
                            }
                        }
                    }
                });
            }
        }
    }
    if let Some(key) = missing {
        return Err(SteinChenError::MissingClass { key });
    }

    let mut summand3 = 0.0;
    for &k in lengths {
        let pk = inputs.pk(k).ok_or(SteinChenError::MissingPk { k })?;
        let lambda_k = rho.powi(k as i32) / (2.0 * k as f64);
        let expected = if pk > 0.0 {
            (ln_count_canonical(n, k).expect("validated") + pk.ln()).exp()
        } else {
            0.0
        };
        summand3 += (expected - lambda_k).abs();
    }

    let total_bound = summand1 + summand2 + summand3;
    Ok(SteinChenReport {
        variant: BVariant::VertexSharing,
        b1: summand1,
        b2: summand2,
        b3: StructuralZero,
        summand1,
        summand2,
        summand3,
        total_bound,
        vacuous: total_bound >= 1.0,
        method: inputs.method,
    })
}
