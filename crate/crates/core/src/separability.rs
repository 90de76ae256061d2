//! Linear separability of two point clouds (e.g. prompt vs. image
//! embeddings), certified by a perceptron, and a within/cross modality
//! similarity summary.
//!
//! A perceptron epoch that finishes without a mistake proves separability.
//! Failing to converge within the budget proves nothing; such runs report
//! `separable = false` meaning "not separated within budget".

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classify::ReferenceIndex;
use crate::dataset::{EmbeddingSet, Modality};
use crate::error::{Error, Result};
use crate::geometry::dot;
use crate::metrics::{avg_cos_similarity, Pairing};
use crate::seed;

pub const DEFAULT_MAX_EPOCHS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub separable: bool,
    pub training_accuracy: f64,
    pub epochs: usize,
    /// Smallest signed distance of any point to the hyperplane; 0 when not
    /// separable.
    pub margin: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ProbeResult {
    /// Signed score of `x`; positive means the first group.
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

fn lexicographic(a: &[&[f64]], b: &[&[f64]]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .flat_map(|(x, y)| x.iter().zip(y.iter()))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn accuracy(points: &[(&[f64], f64)], w: &[f64], b: f64) -> f64 {
    let correct = points
        .iter()
        .filter(|(x, y)| y * (dot(w, x) + b) > 0.0)
        .count();
    correct as f64 / points.len() as f64
}

/// Trains a perceptron with bias on `a` (label +1) against `b` (label -1).
///
/// Points are visited in a fresh seeded shuffle each epoch. Inputs are
/// ordered canonically first, so swapping `a` and `b` yields exactly negated
/// weights and bias.
pub fn train_linear_probe<A, B>(a: &[A], b: &[B], max_epochs: usize, seed: u64) -> Result<ProbeResult>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
{
    let a: Vec<&[f64]> = a.iter().map(AsRef::as_ref).collect();
    let b: Vec<&[f64]> = b.iter().map(AsRef::as_ref).collect();
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = a[0].len();
    if let Some(x) = a.iter().chain(&b).find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.len(),
        });
    }

    if lexicographic(&a, &b) == Ordering::Greater {
        let mut r = train(&b, &a, dim, max_epochs, seed);
        r.weights.iter_mut().for_each(|w| *w = -*w);
        r.bias = -r.bias;
        return Ok(r);
    }
    Ok(train(&a, &b, dim, max_epochs, seed))
}

fn train(pos: &[&[f64]], neg: &[&[f64]], dim: usize, max_epochs: usize, seed: u64) -> ProbeResult {
    let points: Vec<(&[f64], f64)> = pos
        .iter()
        .map(|&x| (x, 1.0))
        .chain(neg.iter().map(|&x| (x, -1.0)))
        .collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut rng = seed::rng(seed, &[]);

    let mut w = vec![0.0f64; dim];
    let mut bias = 0.0f64;
    let mut best = (0.0f64, w.clone(), bias);
    let mut epochs = 0;
    let mut separable = false;

    while epochs < max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut mistakes = 0usize;
        for &i in &order {
            let (x, y) = points[i];
            if y * (dot(&w, x) + bias) <= 0.0 {
                for (wj, xj) in w.iter_mut().zip(x.iter()) {
                    *wj += y * xj;
                }
                bias += y;
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            separable = true;
            break;
        }
        let acc = accuracy(&points, &w, bias);
        if acc > best.0 {
            best = (acc, w.clone(), bias);
        }
    }

    if separable {
        let norm = dot(&w, &w).sqrt();
        let margin = points
            .iter()
            .map(|(x, y)| y * (dot(&w, x) + bias) / norm)
            .fold(f64::INFINITY, f64::min);
        ProbeResult {
            separable,
            training_accuracy: 1.0,
            epochs,
            margin,
            weights: w,
            bias,
        }
    } else {
        let (acc, w, bias) = best;
        ProbeResult {
            separable,
            training_accuracy: acc,
            epochs,
            margin: 0.0,
            weights: w,
            bias,
        }
    }
}

/// Row groups of the similarity summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityBlock {
    WithinPrompt,
    WithinImage,
    CrossModality,
}

impl SimilarityBlock {
    pub fn of(reference: Modality, query: Modality) -> Self {
        match (reference, query) {
            (Modality::Prompt, Modality::Prompt) => SimilarityBlock::WithinPrompt,
            (Modality::Image, Modality::Image) => SimilarityBlock::WithinImage,
            _ => SimilarityBlock::CrossModality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRow {
    pub reference: String,
    pub query: String,
    pub block: SimilarityBlock,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMean {
    pub block: SimilarityBlock,
    pub pairs: usize,
    pub mean_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySummary {
    pub rows: Vec<SimilarityRow>,
    pub blocks: Vec<BlockMean>,
}

impl SimilaritySummary {
    pub fn block_mean(&self, block: SimilarityBlock) -> Option<f64> {
        self.blocks
            .iter()
            .find(|b| b.block == block)
            .map(|b| b.mean_similarity)
    }
}

/// Average nearest-centroid cosine similarity for every ordered pair of sets
/// (including each set against itself), grouped by modality pairing.
pub fn modality_similarity_summary(sets: &[EmbeddingSet]) -> Result<SimilaritySummary> {
    if sets.len() < 2 {
        return Err(Error::InvalidArgument("at least two sets are required".into()));
    }
    let indexes = sets
        .iter()
        .map(ReferenceIndex::centroids)
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (r, idx) in sets.iter().zip(&indexes) {
        for q in sets {
            rows.push(SimilarityRow {
                reference: r.name().to_string(),
                query: q.name().to_string(),
                block: SimilarityBlock::of(r.modality(), q.modality()),
                similarity: avg_cos_similarity(idx, q, Pairing::Nearest)?,
            });
        }
    }
    let mut blocks = Vec::new();
    for block in [
        SimilarityBlock::WithinPrompt,
        SimilarityBlock::WithinImage,
        SimilarityBlock::CrossModality,
    ] {
        let sims: Vec<f64> = rows
            .iter()
            .filter(|r| r.block == block)
            .map(|r| r.similarity)
            .collect();
        if !sims.is_empty() {
            blocks.push(BlockMean {
                block,
                pairs: sims.len(),
                mean_similarity: sims.iter().sum::<f64>() / sims.len() as f64,
            });
        }
    }
    Ok(SimilaritySummary { rows, blocks })
}
