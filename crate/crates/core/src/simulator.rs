//! Synthetic labeled clusters on the unit hypersphere.
//!
//! Two dials are independent: `spread` controls within-class diversity and
//! `shift_degrees` rotates each class's query mean away from its reference
//! mean. Samples are `normalize(mean + spread * g)` with `g` standard
//! Gaussian; this is not von Mises–Fisher sampling, only a monotone spread
//! control.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassLabel, EmbeddingSet, Modality, Split};
use crate::error::{Error, Result};
use crate::geometry::{dot, unit_normalize, UnitEmbedding};
use crate::par;
use crate::seed;

// seed stream tags
const MEAN: u64 = 1;
const PLANE: u64 = 2;
const REFERENCE: u64 = 3;
const QUERY: u64 = 4;
const OUTLIER: u64 = 5;
const DIRECTION: u64 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub dimension: usize,
    pub classes: usize,
    /// Samples per class, for both references and queries.
    pub samples: usize,
    /// Standard deviation of the per-coordinate perturbation.
    pub spread: f64,
    /// Angle between each class's reference and query mean.
    pub shift_degrees: f64,
    /// Fraction of each reference class drawn around another class's mean.
    #[serde(default)]
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl ClusterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(Error::DegenerateRotation(self.dimension));
        }
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.samples < 1 {
            return bad("need at least 1 sample per class".into());
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return bad(format!("spread must be finite and >= 0, got {}", self.spread));
        }
        if !(0.0..=180.0).contains(&self.shift_degrees) {
            return bad(format!("shift must lie in [0, 180] degrees, got {}", self.shift_degrees));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return bad(format!("outlier fraction must lie in [0, 1], got {}", self.outlier_fraction));
        }
        Ok(())
    }
}

fn gaussian_vector(dim: usize, rng: &mut seed::Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform direction on the sphere.
pub fn random_direction(dimension: usize, seed: u64) -> UnitEmbedding {
    let mut rng = seed::rng(seed, &[DIRECTION]);
    loop {
        if let Ok(u) = unit_normalize(&gaussian_vector(dimension, &mut rng)) {
            return u;
        }
    }
}

/// A unit vector orthogonal to `mean`.
fn orthogonal_direction(mean: &[f64], rng: &mut seed::Rng) -> Result<UnitEmbedding> {
    for _ in 0..64 {
        let mut g = gaussian_vector(mean.len(), rng);
        let proj = dot(&g, mean);
        for (x, m) in g.iter_mut().zip(mean) {
            *x -= proj * m;
        }
        if let Ok(u) = unit_normalize(&g) {
            return Ok(u);
        }
    }
    Err(Error::DegenerateRotation(mean.len()))
}

/// `cos(theta) * mean + sin(theta) * ortho`.
fn rotate(mean: &[f64], ortho: &[f64], degrees: f64) -> Result<UnitEmbedding> {
    let (s, c) = degrees.to_radians().sin_cos();
    let v: Vec<f64> = mean.iter().zip(ortho).map(|(m, o)| c * m + s * o).collect();
    unit_normalize(&v)
}

fn sample_into(mean: &[f64], spread: f64, n: usize, rng: &mut seed::Rng, out: &mut Vec<f64>) {
    for _ in 0..n {
        if spread == 0.0 {
            out.extend_from_slice(mean);
            continue;
        }
        loop {
            let v: Vec<f64> = mean
                .iter()
                .map(|m| m + spread * rng.sample::<f64, _>(StandardNormal))
                .collect();
            if let Ok(u) = unit_normalize(&v) {
                out.extend_from_slice(&u);
                break;
            }
        }
    }
}

/// `n` draws of `normalize(mean + spread * g)`; `spread = 0` gives `n`
/// exact copies of `mean`.
pub fn sample_class_cluster(mean: &UnitEmbedding, spread: f64, n: usize, seed: u64) -> Vec<UnitEmbedding> {
    let mut flat = Vec::with_capacity(n * mean.dimension());
    sample_into(mean, spread, n, &mut seed::rng(seed, &[]), &mut flat);
    flat.chunks_exact(mean.dimension())
        .map(|c| UnitEmbedding::from_unit_unchecked(c.to_vec()))
        .collect()
}

/// Per-class ground truth of a simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedClass {
    pub label: ClassLabel,
    pub reference_mean: UnitEmbedding,
    pub query_mean: UnitEmbedding,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub references: EmbeddingSet,
    pub queries: EmbeddingSet,
    pub truth: Vec<SimulatedClass>,
}

pub fn class_label(c: usize) -> ClassLabel {
    ClassLabel {
        id: c as u32,
        name: format!("class-{c}"),
    }
}

/// Reference (train) and query (eval) sets sharing class ids.
pub fn simulate_experiment(spec: &ClusterSpec) -> Result<(EmbeddingSet, EmbeddingSet)> {
    simulate(spec).map(|s| (s.references, s.queries))
}

/// As [`simulate_experiment`], also returning the true class means.
pub fn simulate(spec: &ClusterSpec) -> Result<Simulation> {
    spec.validate()?;
    let dim = spec.dimension;
    let means: Vec<UnitEmbedding> = (0..spec.classes)
        .map(|c| {
            let mut rng = seed::rng(spec.seed, &[MEAN, c as u64]);
            loop {
                if let Ok(u) = unit_normalize(&gaussian_vector(dim, &mut rng)) {
                    return u;
                }
            }
        })
        .collect();

    let per_class = par::map_range(spec.classes, |c| -> Result<_> {
        let mean = &means[c];
        let ortho = orthogonal_direction(mean, &mut seed::rng(spec.seed, &[PLANE, c as u64]))?;
        let query_mean = rotate(mean, &ortho, spec.shift_degrees)?;

        let n_out = (spec.outlier_fraction * spec.samples as f64).round() as usize;
        let n_in = spec.samples - n_out;
        let mut refs = Vec::with_capacity(spec.samples * dim);
        sample_into(mean, spec.spread, n_in, &mut seed::rng(spec.seed, &[REFERENCE, c as u64]), &mut refs);
        let mut orng = seed::rng(spec.seed, &[OUTLIER, c as u64]);
        for _ in 0..n_out {
            let other = (c + orng.random_range(1..spec.classes)) % spec.classes;
            sample_into(&means[other], spec.spread, 1, &mut orng, &mut refs);
        }

        let mut queries = Vec::with_capacity(spec.samples * dim);
        sample_into(&query_mean, spec.spread, spec.samples, &mut seed::rng(spec.seed, &[QUERY, c as u64]), &mut queries);
        Ok((refs, queries, SimulatedClass {
            label: class_label(c),
            reference_mean: mean.clone(),
            query_mean,
        }))
    });

    let mut refs = Vec::with_capacity(spec.classes);
    let mut queries = Vec::with_capacity(spec.classes);
    let mut truth = Vec::with_capacity(spec.classes);
    for r in per_class {
        let (rd, qd, t) = r?;
        refs.push((t.label.clone(), rd));
        queries.push((t.label.clone(), qd));
        truth.push(t);
    }
    Ok(Simulation {
        references: EmbeddingSet::new("sim-ref", dim, Modality::Image, Split::Train, refs)?,
        queries: EmbeddingSet::new("sim-query", dim, Modality::Image, Split::Eval, queries)?,
        truth,
    })
}

/// Shifts every embedding by `offset * direction` and renormalizes; the
/// result is tagged as a prompt set. This builds an artificial modality gap.
pub fn apply_modality_gap(set: &EmbeddingSet, direction: &UnitEmbedding, offset: f64) -> Result<EmbeddingSet> {
    if direction.dimension() != set.dimension() {
        return Err(Error::DimensionMismatch {
            expected: set.dimension(),
            found: direction.dimension(),
        });
    }
    let classes = set
        .classes()
        .iter()
        .map(|c| {
            let mut data = Vec::with_capacity(c.as_flat().len());
            for row in c.rows() {
                let u = unit_normalize(row)?;
                let shifted: Vec<f64> = u.iter().zip(direction.iter()).map(|(x, d)| x + offset * d).collect();
                data.extend_from_slice(&unit_normalize(&shifted)?);
            }
            Ok((c.label().clone(), data))
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingSet::new(
        format!("{}-gap", set.name()),
        set.dimension(),
        Modality::Prompt,
        set.split(),
        classes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::codiff;
    use crate::metrics::{centroid_shift, class_centroid_distance};

    fn spec() -> ClusterSpec {
        ClusterSpec {
            dimension: 16,
            classes: 4,
            samples: 20,
            spread: 0.1,
            shift_degrees: 0.0,
            outlier_fraction: 0.0,
            seed: 7,
        }
    }

    #[test]
    fn zero_spread_copies_the_mean() {
        let mean = random_direction(5, 1);
        let s = sample_class_cluster(&mean, 0.0, 5, 3);
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|x| x == &mean));
        assert_eq!(class_centroid_distance(s.iter().map(|x| x.as_slice())).unwrap(), 0.0);
    }

    #[test]
    fn sample_centroid_concentrates() {
        let mean = random_direction(16, 2);
        let s = sample_class_cluster(&mean, 0.1, 1000, 4);
        let c = crate::geometry::spherical_centroid(s.iter().map(|x| x.as_slice())).unwrap();
        assert!(codiff(&c, &mean).unwrap() <= 0.01);
        assert_eq!(s, sample_class_cluster(&mean, 0.1, 1000, 4));
    }

    #[test]
    fn sixty_degree_shift_at_zero_spread() {
        let sim = simulate(&ClusterSpec { spread: 0.0, shift_degrees: 60.0, ..spec() }).unwrap();
        for (r, q) in sim.references.classes().iter().zip(sim.queries.classes()) {
            let s = centroid_shift(r.rows(), q.rows()).unwrap();
            assert!((s - 0.5).abs() <= 1e-9, "{s}");
        }
    }

    #[test]
    fn sets_are_labeled_and_deterministic() {
        let (r, q) = simulate_experiment(&spec()).unwrap();
        assert_eq!(r.split(), Split::Train);
        assert_eq!(q.split(), Split::Eval);
        assert_eq!(r.labels(), q.labels());
        assert_eq!(r.len(), 80);
        let (r2, q2) = simulate_experiment(&spec()).unwrap();
        assert_eq!((r, q), (r2, q2));
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            simulate_experiment(&ClusterSpec { dimension: 1, ..spec() }),
            Err(Error::DegenerateRotation(1))
        ));
        assert!(simulate_experiment(&ClusterSpec { classes: 1, ..spec() }).is_err());
        assert!(simulate_experiment(&ClusterSpec { spread: -0.1, ..spec() }).is_err());
        assert!(simulate_experiment(&ClusterSpec { shift_degrees: 181.0, ..spec() }).is_err());
    }

    #[test]
    fn outliers_come_from_other_classes() {
        let sim = simulate(&ClusterSpec { spread: 0.0, outlier_fraction: 0.1, ..spec() }).unwrap();
        for (c, t) in sim.references.classes().iter().zip(&sim.truth) {
            let own = c.rows().filter(|r| *r == t.reference_mean.as_slice()).count();
            assert_eq!(own, 18);
        }
    }

    #[test]
    fn gap_moves_points_toward_direction() {
        let (r, _) = simulate_experiment(&spec()).unwrap();
        let d = random_direction(16, 99);
        let g = apply_modality_gap(&r, &d, 0.5).unwrap();
        assert_eq!(g.modality(), Modality::Prompt);
        let mean_proj = |s: &EmbeddingSet| s.rows().map(|x| dot(x, &d)).sum::<f64>() / s.len() as f64;
        assert!(mean_proj(&g) > mean_proj(&r) + 0.2);
    }
}
