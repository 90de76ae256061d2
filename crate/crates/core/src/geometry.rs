//! Unit-sphere kernels: normalization, cosine similarity, `codiff` and the
//! spherical centroid. All arithmetic is carried out in `f64`.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms at or below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

/// A vector with Euclidean norm 1 (within 1e-6).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitEmbedding(Vec<f64>);

impl UnitEmbedding {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Wraps a vector already known to be unit length.
    pub(crate) fn from_unit_unchecked(values: Vec<f64>) -> Self {
        debug_assert!((norm(&values) - 1.0).abs() <= 1e-6);
        UnitEmbedding(values)
    }
}

impl Deref for UnitEmbedding {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for UnitEmbedding {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Dot product with four independent accumulators.
///
/// The summation order depends only on the length, so repeated calls on the
/// same pair always agree bit-for-bit.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn unit_normalize(v: &[f64]) -> Result<UnitEmbedding> {
    let n = norm(v);
    if n.is_nan() || n <= ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok(UnitEmbedding(v.iter().map(|x| x / n).collect()))
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Cosine similarity of two unit vectors, clamped to [-1, 1].
pub fn cosine_similarity(a: &UnitEmbedding, b: &UnitEmbedding) -> Result<f64> {
    check_dims(a, b)?;
    Ok(clamped_dot(a, b))
}

#[inline]
pub(crate) fn clamped_dot(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0)
}

/// `1 - cos(a, b)`, in [0, 2].
pub fn codiff(a: &UnitEmbedding, b: &UnitEmbedding) -> Result<f64> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

/// Unit-normalized sum of unit-normalized inputs.
pub fn spherical_centroid<'a, I>(embeddings: I) -> Result<UnitEmbedding>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = embeddings.into_iter();
    let first = iter.next().ok_or(Error::EmptySet)?;
    let dim = first.len();
    let mut sum = vec![0.0f64; dim];
    for e in std::iter::once(first).chain(iter) {
        check_dims(first, e)?;
        let u = unit_normalize(e)?;
        for (s, x) in sum.iter_mut().zip(u.iter()) {
            *s += x;
        }
    }
    unit_normalize(&sum)
}
