//! Diversity and shift measures over embedding sets.
//!
//! * Centroid Distance: mean squared `codiff` from each embedding to its class
//!   centroid, averaged (unweighted) over classes for a whole set.
//! * Centroid shift: `codiff` between the centroids of two sets of one class.
//! * Fréchet distance between Gaussian fits of two samples, with the mean and
//!   trace terms reported separately.
//! * Average cosine similarity between queries and reference entries.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::classify::{self, ReferenceIndex};
use crate::dataset::EmbeddingSet;
use crate::error::{Error, Result};
use crate::geometry::{clamped_dot, spherical_centroid, unit_normalize, UnitEmbedding};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_id: u32,
    pub centroid: UnitEmbedding,
    pub centroid_distance: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub classes: Vec<ClassMetrics>,
    pub set_centroid_distance: f64,
}

/// Mean of `codiff(e, centroid)^2` over `embeddings`, plus the centroid.
pub fn class_centroid<'a, I>(embeddings: I) -> Result<(UnitEmbedding, f64, usize)>
where
    I: IntoIterator<Item = &'a [f64]> + Clone,
{
    let centroid = spherical_centroid(embeddings.clone())?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for e in embeddings {
        let u = unit_normalize(e)?;
        let d = 1.0 - clamped_dot(&u, &centroid);
        sum += d * d;
        n += 1;
    }
    Ok((centroid, sum / n as f64, n))
}

pub fn class_centroid_distance<'a, I>(embeddings: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]> + Clone,
{
    class_centroid(embeddings).map(|(_, d, _)| d)
}

/// Per-class Centroid Distance and their unweighted mean.
pub fn set_centroid_distance(set: &EmbeddingSet) -> Result<SetMetrics> {
    let per_class = par::map_slice(set.classes(), |c| {
        class_centroid(c.rows())
            .map(|(centroid, d, n)| ClassMetrics {
                class_id: c.id(),
                centroid,
                centroid_distance: d,
                n,
            })
            .map_err(|e| match e {
                Error::ZeroVector => Error::DegenerateCentroid { class_id: c.id() },
                other => other,
            })
    });
    let classes = per_class.into_iter().collect::<Result<Vec<_>>>()?;
    let mean = classes.iter().map(|c| c.centroid_distance).sum::<f64>() / classes.len() as f64;
    Ok(SetMetrics {
        classes,
        set_centroid_distance: mean,
    })
}

/// `codiff` between the spherical centroids of `a` and `b`.
pub fn centroid_shift<'a, 'b, A, B>(a: A, b: B) -> Result<f64>
where
    A: IntoIterator<Item = &'a [f64]>,
    B: IntoIterator<Item = &'b [f64]>,
{
    let ca = spherical_centroid(a)?;
    let cb = spherical_centroid(b)?;
    crate::geometry::codiff(&ca, &cb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShift {
    pub class_id: u32,
    pub shift: f64,
}

/// Centroid shift for every class present in both sets, in `a`'s order.
pub fn class_shifts(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<Vec<ClassShift>> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    let shared: Vec<_> = a
        .classes()
        .iter()
        .filter_map(|ca| b.class(ca.id()).map(|cb| (ca, cb)))
        .collect();
    par::map_slice(&shared, |(ca, cb)| {
        centroid_shift(ca.rows(), cb.rows()).map(|shift| ClassShift {
            class_id: ca.id(),
            shift,
        })
    })
    .into_iter()
    .collect()
}

/// How the mean difference enters the Fréchet distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanTerm {
    /// `||mu_x - mu_y||^2`, the usual FID convention.
    #[default]
    Squared,
    /// `||mu_x - mu_y||`, unsquared.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetDistance {
    pub mean_term: f64,
    pub trace_term: f64,
    pub total: f64,
}

/// Eigenvalues below this are a numerical failure rather than rounding noise.
pub const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-8;

fn mean_and_covariance<'a, I>(rows: I) -> Result<(DVector<f64>, DMatrix<f64>)>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let rows: Vec<&[f64]> = rows.into_iter().collect();
    if rows.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: rows.len(),
        });
    }
    let dim = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: r.len(),
        });
    }
    let n = rows.len();
    let mut mean = DVector::zeros(dim);
    for r in &rows {
        mean += DVector::from_column_slice(r);
    }
    mean /= n as f64;
    let mut centered = DMatrix::zeros(n, dim);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..dim {
            centered[(i, j)] = r[j] - mean[j];
        }
    }
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    Ok((mean, cov))
}

fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let sym = (&m + m.transpose()) * 0.5;
    SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigendecomposition did not converge".into()))
}

fn check_eigenvalues(values: &DVector<f64>) -> Result<()> {
    if let Some(v) = values.iter().find(|&&v| v < -NEGATIVE_EIGEN_TOLERANCE || !v.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "eigenvalue {v:e} is negative beyond tolerance"
        )));
    }
    Ok(())
}

fn psd_sqrt(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(m)?;
    check_eigenvalues(&eig.eigenvalues)?;
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// Fréchet distance between Gaussian fits of `x` and `y`.
///
/// Covariances use `1/(N-1)`. The trace term is
/// `tr(Sx) + tr(Sy) - 2 tr((Sx^1/2 Sy Sx^1/2)^1/2)`, computed with symmetric
/// eigendecompositions only; it is clamped at zero.
pub fn frechet_distance<'a, 'b, X, Y>(x: X, y: Y, mean_term: MeanTerm) -> Result<FrechetDistance>
where
    X: IntoIterator<Item = &'a [f64]>,
    Y: IntoIterator<Item = &'b [f64]>,
{
    let (mx, sx) = mean_and_covariance(x)?;
    let (my, sy) = mean_and_covariance(y)?;
    if mx.len() != my.len() {
        return Err(Error::DimensionMismatch {
            expected: mx.len(),
            found: my.len(),
        });
    }
    let sq = (&mx - &my).norm_squared();
    let mean = match mean_term {
        MeanTerm::Squared => sq,
        MeanTerm::Absolute => sq.sqrt(),
    };

    let sx_half = psd_sqrt(sx.clone())?;
    let inner = &sx_half * &sy * &sx_half;
    let eig = symmetric_eigen(inner)?;
    check_eigenvalues(&eig.eigenvalues)?;
    let cross: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).sum();
    let trace = (sx.trace() + sy.trace() - 2.0 * cross).max(0.0);

    Ok(FrechetDistance {
        mean_term: mean,
        trace_term: trace,
        total: mean + trace,
    })
}

/// Which reference a query is paired with when averaging similarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// The most similar reference entry.
    #[default]
    Nearest,
    /// The first reference entry of the query's own class.
    TrueClass,
}

/// Mean cosine similarity between each query and its paired reference.
pub fn avg_cos_similarity(reference: &ReferenceIndex, queries: &EmbeddingSet, pairing: Pairing) -> Result<f64> {
    if reference.dimension() != queries.dimension() {
        return Err(Error::DimensionMismatch {
            expected: reference.dimension(),
            found: queries.dimension(),
        });
    }
    let (qs, truth) = classify::normalized_queries(queries)?;
    let sims: Vec<f64> = match pairing {
        Pairing::Nearest => classify::nearest_all(reference, &qs, 0)?
            .into_iter()
            .map(|n| n.similarity)
            .collect(),
        Pairing::TrueClass => qs
            .iter()
            .zip(&truth)
            .map(|(q, &c)| {
                reference
                    .first_of_class(c)
                    .map(|r| clamped_dot(q, reference.vector(r)))
                    .ok_or(Error::ClassUniverseMismatch(c))
            })
            .collect::<Result<_>>()?,
    };
    Ok(sims.iter().sum::<f64>() / sims.len() as f64)
}
