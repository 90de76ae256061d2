//! Centroid Accuracy and k-NN classification of query sets against
//! reference sets.
//!
//! Search is exact: every query is compared against every reference vector.
//! Queries are processed in blocks against blocks of references so a block
//! of reference rows stays in cache while it is reused across queries.
//! Randomness (tie-breaking) is drawn from a stream keyed by
//! `(seed, query index)`, so results are independent of thread count and
//! scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{EmbeddingSet, Split};
use crate::error::{Error, Result};
use crate::geometry::{self, clamped_dot, spherical_centroid, unit_normalize, UnitEmbedding};
use crate::par;
use crate::seed;

const QUERY_BLOCK: usize = 32;
const REFERENCE_BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    /// One spherical centroid per class.
    Centroid,
    /// Every reference embedding, labeled.
    Full,
}

/// Unit-normalized reference vectors with their class labels.
#[derive(Debug, Clone)]
pub struct ReferenceIndex {
    mode: IndexMode,
    dimension: usize,
    vectors: Vec<f64>,
    labels: Vec<u32>,
    class_ids: BTreeSet<u32>,
}

impl ReferenceIndex {
    /// Collapses each class of `set` to its spherical centroid. Unlike
    /// [`build_centroid_references`] this does not check the split.
    pub fn centroids(set: &EmbeddingSet) -> Result<Self> {
        let centroids = par::map_slice(set.classes(), |c| {
            spherical_centroid(c.rows()).map_err(|e| match e {
                Error::ZeroVector => Error::DegenerateCentroid { class_id: c.id() },
                other => other,
            })
        });
        let mut vectors = Vec::with_capacity(set.classes().len() * set.dimension());
        let mut labels = Vec::with_capacity(set.classes().len());
        for (c, centroid) in set.classes().iter().zip(centroids) {
            vectors.extend_from_slice(&centroid?);
            labels.push(c.id());
        }
        Ok(Self::from_parts(IndexMode::Centroid, set.dimension(), vectors, labels))
    }

    /// Keeps every embedding of `set` as its own reference.
    pub fn full(set: &EmbeddingSet) -> Result<Self> {
        let mut vectors = Vec::with_capacity(set.len() * set.dimension());
        let mut labels = Vec::with_capacity(set.len());
        for (id, row) in set.labeled_rows() {
            vectors.extend_from_slice(&unit_normalize(row)?);
            labels.push(id);
        }
        Ok(Self::from_parts(IndexMode::Full, set.dimension(), vectors, labels))
    }

    fn from_parts(mode: IndexMode, dimension: usize, vectors: Vec<f64>, labels: Vec<u32>) -> Self {
        let class_ids = labels.iter().copied().collect();
        ReferenceIndex {
            mode,
            dimension,
            vectors,
            labels,
            class_ids,
        }
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn class_ids(&self) -> &BTreeSet<u32> {
        &self.class_ids
    }

    /// First reference vector labeled `class_id`.
    pub fn first_of_class(&self, class_id: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == class_id)
    }
}

/// Builds the centroid index of a reference (train split) set.
pub fn build_centroid_references(refs: &EmbeddingSet) -> Result<ReferenceIndex> {
    require_split(refs, Split::Train)?;
    ReferenceIndex::centroids(refs)
}

fn require_split(set: &EmbeddingSet, expected: Split) -> Result<()> {
    if set.split() != expected {
        return Err(Error::WrongSplit {
            set: set.name().to_string(),
            expected,
            found: set.split(),
        });
    }
    Ok(())
}

/// The reference entry nearest to a query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub reference: usize,
    pub class_id: u32,
    pub similarity: f64,
}

/// Uniform choice among `n` tied candidates.
fn pick_tied(rng: &mut seed::Rng, n: usize) -> usize {
    if n == 1 {
        0
    } else {
        rng.random_range(0..n)
    }
}

fn query_rng(seed: u64, query_index: usize) -> seed::Rng {
    seed::rng(seed, &[query_index as u64])
}

/// Running maximum that remembers every reference tied for it.
#[derive(Debug, Clone)]
struct Best {
    similarity: f64,
    tied: Vec<usize>,
}

impl Best {
    fn new() -> Self {
        Best {
            similarity: f64::NEG_INFINITY,
            tied: Vec::new(),
        }
    }

    #[inline]
    fn offer(&mut self, sim: f64, reference: usize) {
        if sim > self.similarity {
            self.similarity = sim;
            self.tied.clear();
            self.tied.push(reference);
        } else if sim == self.similarity {
            self.tied.push(reference);
        }
    }
}

/// Keeps the `k` largest similarities plus anything tied with the k-th.
#[derive(Debug, Clone)]
struct TopK {
    k: usize,
    floor: f64,
    items: Vec<(f64, usize)>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            floor: f64::NEG_INFINITY,
            items: Vec::with_capacity(4 * k + 16),
        }
    }

    #[inline]
    fn offer(&mut self, sim: f64, reference: usize) {
        if sim >= self.floor {
            self.items.push((sim, reference));
            if self.items.len() >= 4 * self.k + 16 {
                self.prune();
            }
        }
    }

    fn prune(&mut self) {
        self.items
            .sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        if self.items.len() > self.k {
            let kth = self.items[self.k - 1].0;
            let keep = self.items.partition_point(|&(s, _)| s >= kth);
            self.items.truncate(keep);
            self.floor = kth;
        }
    }

    /// Sorted by similarity descending, then reference index ascending.
    fn finish(mut self) -> Vec<(f64, usize)> {
        self.prune();
        self.items
    }
}

/// Runs `visit(query, reference, similarity)` over all pairs, blocked.
fn sweep<S, F>(index: &ReferenceIndex, queries: &[UnitEmbedding], init: impl Fn() -> S + Sync + Send, visit: F) -> Vec<S>
where
    S: Send,
    F: Fn(&mut S, usize, f64) + Sync + Send,
{
    let blocks = queries.len().div_ceil(QUERY_BLOCK);
    let per_block = par::map_range(blocks, |b| {
        let qs = &queries[b * QUERY_BLOCK..((b + 1) * QUERY_BLOCK).min(queries.len())];
        let mut states: Vec<S> = qs.iter().map(|_| init()).collect();
        for start in (0..index.len()).step_by(REFERENCE_BLOCK) {
            let end = (start + REFERENCE_BLOCK).min(index.len());
            for (q, state) in qs.iter().zip(states.iter_mut()) {
                for r in start..end {
                    visit(state, r, clamped_dot(q, index.vector(r)));
                }
            }
        }
        states
    });
    per_block.into_iter().flatten().collect()
}

fn check_query_dims(index: &ReferenceIndex, queries: &[UnitEmbedding]) -> Result<()> {
    if let Some(q) = queries.iter().find(|q| q.dimension() != index.dimension) {
        return Err(Error::DimensionMismatch {
            expected: index.dimension,
            found: q.dimension(),
        });
    }
    Ok(())
}

fn resolve_nearest(index: &ReferenceIndex, best: Best, seed: u64, query_index: usize) -> Neighbor {
    let mut rng = query_rng(seed, query_index);
    let reference = best.tied[pick_tied(&mut rng, best.tied.len())];
    Neighbor {
        reference,
        class_id: index.label(reference),
        similarity: best.similarity,
    }
}

/// Nearest entry of `index` to `q`; exact ties are broken uniformly at
/// random from the stream `(seed, query_index)`.
pub fn nearest_reference(
    q: &UnitEmbedding,
    index: &ReferenceIndex,
    seed: u64,
    query_index: usize,
) -> Result<Neighbor> {
    if index.is_empty() {
        return Err(Error::EmptySet);
    }
    check_query_dims(index, std::slice::from_ref(q))?;
    let mut best = Best::new();
    for r in 0..index.len() {
        best.offer(clamped_dot(q, index.vector(r)), r);
    }
    Ok(resolve_nearest(index, best, seed, query_index))
}

/// Nearest entry for every query; `queries[i]` uses query index `i`.
pub fn nearest_all(index: &ReferenceIndex, queries: &[UnitEmbedding], seed: u64) -> Result<Vec<Neighbor>> {
    if index.is_empty() {
        return Err(Error::EmptySet);
    }
    check_query_dims(index, queries)?;
    let bests = sweep(index, queries, Best::new, |b, r, s| b.offer(s, r));
    Ok(bests
        .into_iter()
        .enumerate()
        .map(|(i, b)| resolve_nearest(index, b, seed, i))
        .collect())
}

/// Majority vote over the `k` nearest references.
///
/// Neighbors tied with the k-th similarity are subsampled uniformly. Vote
/// ties go to the class owning the single most similar member; remaining
/// ties are broken uniformly at random.
fn vote(index: &ReferenceIndex, candidates: Vec<(f64, usize)>, k: usize, seed: u64, query_index: usize) -> Neighbor {
    let mut rng = query_rng(seed, query_index);
    let kth = candidates[k - 1].0;
    let above = candidates.partition_point(|&(s, _)| s > kth);
    let mut tied: Vec<(f64, usize)> = candidates[above..].to_vec();
    let need = k - above;
    for i in 0..need {
        let j = rng.random_range(i..tied.len());
        tied.swap(i, j);
    }
    let neighbors = candidates[..above].iter().chain(&tied[..need]);

    // class -> (votes, best similarity, reference achieving it)
    let mut tally: BTreeMap<u32, (usize, f64, usize)> = BTreeMap::new();
    for &(sim, r) in neighbors {
        let e = tally
            .entry(index.label(r))
            .or_insert((0, f64::NEG_INFINITY, r));
        e.0 += 1;
        if sim > e.1 || (sim == e.1 && r < e.2) {
            e.1 = sim;
            e.2 = r;
        }
    }
    let max_votes = tally.values().map(|v| v.0).max().unwrap_or(0);
    let best_sim = tally
        .values()
        .filter(|v| v.0 == max_votes)
        .map(|v| v.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<(u32, usize)> = tally
        .iter()
        .filter(|(_, v)| v.0 == max_votes && v.1 == best_sim)
        .map(|(&c, v)| (c, v.2))
        .collect();
    let (class_id, reference) = winners[pick_tied(&mut rng, winners.len())];
    Neighbor {
        reference,
        class_id,
        similarity: best_sim,
    }
}

/// k-NN prediction for every query against a full index.
pub fn knn_all(index: &ReferenceIndex, queries: &[UnitEmbedding], k: usize, seed: u64) -> Result<Vec<Neighbor>> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if k > index.len() {
        return Err(Error::KTooLarge {
            k,
            available: index.len(),
        });
    }
    check_query_dims(index, queries)?;
    let tops = sweep(index, queries, || TopK::new(k), |t, r, s| t.offer(s, r));
    Ok(tops
        .into_iter()
        .enumerate()
        .map(|(i, t)| vote(index, t.finish(), k, seed, i))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Centroid,
    Knn(usize),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Centroid => f.write_str("centroid"),
            Method::Knn(k) => write!(f, "knn{k}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts `centroid`, `knnK`, `knn:K` and `knn(K)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("centroid") {
            return Ok(Method::Centroid);
        }
        let rest = s
            .strip_prefix("knn")
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))?;
        let digits = rest
            .trim_start_matches([':', '('])
            .trim_end_matches(')');
        let k: usize = digits
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad k in method `{s}`")))?;
        if k == 0 {
            return Err(Error::InvalidK);
        }
        Ok(Method::Knn(k))
    }
}

/// Outcome for one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub query_index: usize,
    pub true_class: u32,
    pub predicted_class: u32,
    pub similarity: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub reference: String,
    pub query: String,
    pub method: Method,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub correct: usize,
    pub total: usize,
}

impl ClassAccuracy {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub accuracy: f64,
    pub per_class: BTreeMap<u32, ClassAccuracy>,
    pub avg_cos_similarity: f64,
    #[serde(skip)]
    pub predictions: Vec<Prediction>,
}

impl ExperimentResult {
    fn from_predictions(spec: ExperimentSpec, predictions: Vec<Prediction>) -> Self {
        let mut per_class: BTreeMap<u32, ClassAccuracy> = BTreeMap::new();
        let mut correct = 0usize;
        let mut sim_sum = 0.0;
        for p in &predictions {
            let e = per_class
                .entry(p.true_class)
                .or_insert(ClassAccuracy { correct: 0, total: 0 });
            e.total += 1;
            if p.correct {
                e.correct += 1;
                correct += 1;
            }
            sim_sum += p.similarity;
        }
        let n = predictions.len() as f64;
        ExperimentResult {
            spec,
            accuracy: correct as f64 / n,
            per_class,
            avg_cos_similarity: sim_sum / n,
            predictions,
        }
    }

    pub fn class_accuracy(&self, class_id: u32) -> Option<f64> {
        self.per_class.get(&class_id).map(ClassAccuracy::accuracy)
    }
}

/// Normalized query rows with their true class ids.
pub(crate) fn normalized_queries(queries: &EmbeddingSet) -> Result<(Vec<UnitEmbedding>, Vec<u32>)> {
    let mut vectors = Vec::with_capacity(queries.len());
    let mut labels = Vec::with_capacity(queries.len());
    for (id, row) in queries.labeled_rows() {
        vectors.push(geometry::unit_normalize(row)?);
        labels.push(id);
    }
    Ok((vectors, labels))
}

fn check_universe(index: &ReferenceIndex, queries: &EmbeddingSet) -> Result<()> {
    if index.dimension() != queries.dimension() {
        return Err(Error::DimensionMismatch {
            expected: index.dimension(),
            found: queries.dimension(),
        });
    }
    match queries
        .classes()
        .iter()
        .find(|c| !index.class_ids().contains(&c.id()))
    {
        Some(c) => Err(Error::ClassUniverseMismatch(c.id())),
        None => Ok(()),
    }
}

fn predictions(neighbors: Vec<Neighbor>, truth: &[u32]) -> Vec<Prediction> {
    neighbors
        .into_iter()
        .zip(truth)
        .enumerate()
        .map(|(i, (n, &t))| Prediction {
            query_index: i,
            true_class: t,
            predicted_class: n.class_id,
            similarity: n.similarity,
            correct: n.class_id == t,
        })
        .collect()
}

/// Centroid Accuracy of an eval-split query set against the class centroids
/// of a train-split reference set.
pub fn centroid_accuracy(refs: &EmbeddingSet, queries: &EmbeddingSet, seed: u64) -> Result<ExperimentResult> {
    require_split(queries, Split::Eval)?;
    let index = build_centroid_references(refs)?;
    centroid_accuracy_with_index(&index, refs.name(), queries, seed)
}

/// As [`centroid_accuracy`], reusing a prebuilt index. No split checks.
pub fn centroid_accuracy_with_index(
    index: &ReferenceIndex,
    reference_name: &str,
    queries: &EmbeddingSet,
    seed: u64,
) -> Result<ExperimentResult> {
    check_universe(index, queries)?;
    let (qs, truth) = normalized_queries(queries)?;
    let neighbors = nearest_all(index, &qs, seed)?;
    let spec = ExperimentSpec {
        reference: reference_name.to_string(),
        query: queries.name().to_string(),
        method: Method::Centroid,
        seed,
    };
    Ok(ExperimentResult::from_predictions(spec, predictions(neighbors, &truth)))
}

/// k-NN accuracy against all reference embeddings (no centroid collapse).
pub fn knn_classify(refs: &EmbeddingSet, queries: &EmbeddingSet, k: usize, seed: u64) -> Result<ExperimentResult> {
    require_split(refs, Split::Train)?;
    require_split(queries, Split::Eval)?;
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if k > refs.len() {
        return Err(Error::KTooLarge {
            k,
            available: refs.len(),
        });
    }
    let index = ReferenceIndex::full(refs)?;
    knn_classify_with_index(&index, refs.name(), queries, k, seed)
}

pub fn knn_classify_with_index(
    index: &ReferenceIndex,
    reference_name: &str,
    queries: &EmbeddingSet,
    k: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    check_universe(index, queries)?;
    let (qs, truth) = normalized_queries(queries)?;
    let neighbors = knn_all(index, &qs, k, seed)?;
    let spec = ExperimentSpec {
        reference: reference_name.to_string(),
        query: queries.name().to_string(),
        method: Method::Knn(k),
        seed,
    };
    Ok(ExperimentResult::from_predictions(spec, predictions(neighbors, &truth)))
}

pub fn run_method(refs: &EmbeddingSet, queries: &EmbeddingSet, method: Method, seed: u64) -> Result<ExperimentResult> {
    match method {
        Method::Centroid => centroid_accuracy(refs, queries, seed),
        Method::Knn(k) => knn_classify(refs, queries, k, seed),
    }
}

/// Cells to leave out of an experiment matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipList {
    /// Query sets whose every cell is skipped.
    pub queries: BTreeSet<String>,
    /// Individual `(reference, query)` pairs.
    pub pairs: BTreeSet<(String, String)>,
}

impl SkipList {
    pub fn skips(&self, reference: &str, query: &str) -> bool {
        self.queries.contains(query)
            || self
                .pairs
                .contains(&(reference.to_string(), query.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok(ExperimentResult),
    Failed { error: String },
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    /// 1-based index of the (reference, query) pair.
    pub experiment: usize,
    pub reference: String,
    pub query: String,
    pub method: Method,
    pub outcome: CellOutcome,
}

/// Runs every method on every (train-split reference, eval-split query)
/// pair drawn from `sets`. Experiments are numbered reference-major; rows
/// within an experiment follow `methods` order. A failing cell does not
/// stop the others.
pub fn run_experiment_matrix(
    sets: &[EmbeddingSet],
    methods: &[Method],
    seed: u64,
    skip: &SkipList,
) -> Result<Vec<MatrixCell>> {
    let refs: Vec<&EmbeddingSet> = sets.iter().filter(|s| s.split() == Split::Train).collect();
    let queries: Vec<&EmbeddingSet> = sets.iter().filter(|s| s.split() == Split::Eval).collect();
    if refs.is_empty() || queries.is_empty() {
        return Err(Error::InvalidArgument(
            "matrix needs at least one train-split and one eval-split set".into(),
        ));
    }
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods requested".into()));
    }

    // Indexes are built once per reference set and shared across cells.
    let centroid_indexes: Vec<Option<Result<ReferenceIndex>>> = refs
        .iter()
        .map(|r| methods.contains(&Method::Centroid).then(|| ReferenceIndex::centroids(r)))
        .collect();
    let needs_full = methods.iter().any(|m| matches!(m, Method::Knn(_)));
    let full_indexes: Vec<Option<Result<ReferenceIndex>>> = refs
        .iter()
        .map(|r| needs_full.then(|| ReferenceIndex::full(r)))
        .collect();

    let mut jobs = Vec::new();
    for (ri, r) in refs.iter().enumerate() {
        for (qi, q) in queries.iter().enumerate() {
            let experiment = ri * queries.len() + qi + 1;
            for &m in methods {
                jobs.push((experiment, ri, *r, *q, m));
            }
        }
    }

    Ok(par::map_slice(&jobs, |&(experiment, ri, r, q, method)| {
        let outcome = if skip.skips(r.name(), q.name()) {
            CellOutcome::Skipped
        } else {
            let result = match method {
                Method::Centroid => match centroid_indexes[ri].as_ref() {
                    Some(Ok(idx)) => centroid_accuracy_with_index(idx, r.name(), q, seed),
                    Some(Err(e)) => Err(Error::InvalidArgument(e.to_string())),
                    None => unreachable!("centroid index requested"),
                },
                Method::Knn(k) => match full_indexes[ri].as_ref() {
                    Some(Ok(idx)) => knn_classify_with_index(idx, r.name(), q, k, seed),
                    Some(Err(e)) => Err(Error::InvalidArgument(e.to_string())),
                    None => unreachable!("full index requested"),
                },
            };
            match result {
                Ok(res) => CellOutcome::Ok(res),
                Err(e) => CellOutcome::Failed {
                    error: e.to_string(),
                },
            }
        };
        MatrixCell {
            experiment,
            reference: r.name().to_string(),
            query: q.name().to_string(),
            method,
            outcome,
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureTag {
    /// Low accuracy on natural and synthetic queries alike.
    ConceptFailure,
    /// Low on natural queries, high on synthetic ones: the synthetic set
    /// captures the concept but sits away from the natural centroid.
    ShiftFailure,
    /// Low on natural queries, synthetic accuracy between the thresholds.
    Inconclusive,
    Healthy,
}

impl fmt::Display for FailureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureTag::ConceptFailure => "concept-failure",
            FailureTag::ShiftFailure => "shift-failure",
            FailureTag::Inconclusive => "inconclusive",
            FailureTag::Healthy => "healthy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDiagnosis {
    pub class_id: u32,
    pub natural_accuracy: f64,
    pub synthetic_accuracy: f64,
    pub tag: FailureTag,
}

pub fn classify_failure(natural: f64, synthetic: f64, low: f64, high: f64) -> FailureTag {
    if natural >= low {
        FailureTag::Healthy
    } else if synthetic >= high {
        FailureTag::ShiftFailure
    } else if synthetic < low {
        FailureTag::ConceptFailure
    } else {
        FailureTag::Inconclusive
    }
}

/// Tags each class by comparing its accuracy on natural queries with its
/// accuracy on synthetic queries, both against the same references.
/// Thresholds are fractions in [0, 1].
pub fn diagnose_class_failures(
    natural: &ExperimentResult,
    synthetic: &ExperimentResult,
    low_threshold: f64,
    high_threshold: f64,
) -> Result<Vec<ClassDiagnosis>> {
    if !(0.0..=1.0).contains(&low_threshold)
        || !(0.0..=1.0).contains(&high_threshold)
        || low_threshold > high_threshold
    {
        return Err(Error::InvalidArgument(format!(
            "thresholds must satisfy 0 <= low <= high <= 1, got {low_threshold} and {high_threshold}"
        )));
    }
    if natural.spec.reference != synthetic.spec.reference {
        return Err(Error::MismatchedResults(format!(
            "reference sets differ: `{}` vs `{}`",
            natural.spec.reference, synthetic.spec.reference
        )));
    }
    let a: Vec<u32> = natural.per_class.keys().copied().collect();
    let b: Vec<u32> = synthetic.per_class.keys().copied().collect();
    if a != b {
        return Err(Error::MismatchedResults("class universes differ".into()));
    }
    Ok(natural
        .per_class
        .iter()
        .map(|(&id, acc)| {
            let n = acc.accuracy();
            let s = synthetic.per_class[&id].accuracy();
            ClassDiagnosis {
                class_id: id,
                natural_accuracy: n,
                synthetic_accuracy: s,
                tag: classify_failure(n, s, low_threshold, high_threshold),
            }
        })
        .collect())
}
