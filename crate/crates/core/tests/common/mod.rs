//! Brute-force reference implementations written directly from the
//! definitions, plus random instance generation. Nothing here calls the
//! library's math.

#![allow(dead_code)]

use embedlens::dataset::{ClassLabel, EmbeddingSet, Modality, Split};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn unit(v: &[f64]) -> Vec<f64> {
    let mut s = 0.0;
    for x in v {
        s += x * x;
    }
    let n = s.sqrt();
    v.iter().map(|x| x / n).collect()
}

pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    let (ua, ub) = (unit(a), unit(b));
    let mut s = 0.0;
    for i in 0..ua.len() {
        s += ua[i] * ub[i];
    }
    s.clamp(-1.0, 1.0)
}

pub fn centroid(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut sum = vec![0.0; rows[0].len()];
    for r in rows {
        let u = unit(r);
        for i in 0..sum.len() {
            sum[i] += u[i];
        }
    }
    unit(&sum)
}

pub fn centroid_distance(rows: &[Vec<f64>]) -> f64 {
    let c = centroid(rows);
    let mut s = 0.0;
    for r in rows {
        let d = 1.0 - cos(r, &c);
        s += d * d;
    }
    s / rows.len() as f64
}

pub fn shift(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    1.0 - cos(&centroid(a), &centroid(b))
}

pub fn class_rows(set: &EmbeddingSet) -> Vec<(u32, Vec<Vec<f64>>)> {
    set.classes()
        .iter()
        .map(|c| (c.id(), c.rows().map(<[f64]>::to_vec).collect()))
        .collect()
}

/// Predicted class of every query row (in set order) by nearest centroid.
pub fn centroid_predictions(refs: &EmbeddingSet, queries: &EmbeddingSet) -> Vec<u32> {
    let cents: Vec<(u32, Vec<f64>)> = class_rows(refs)
        .into_iter()
        .map(|(id, rows)| (id, centroid(&rows)))
        .collect();
    queries
        .rows()
        .map(|q| {
            let mut best = (f64::NEG_INFINITY, 0u32);
            for (id, c) in &cents {
                let s = cos(q, c);
                if s > best.0 {
                    best = (s, *id);
                }
            }
            best.1
        })
        .collect()
}

/// Majority vote over the k most similar references; vote ties go to the
/// tied class owning the most similar neighbor.
pub fn knn_predictions(refs: &EmbeddingSet, queries: &EmbeddingSet, k: usize) -> Vec<u32> {
    let all: Vec<(u32, Vec<f64>)> = refs
        .labeled_rows()
        .map(|(id, r)| (id, r.to_vec()))
        .collect();
    queries
        .rows()
        .map(|q| {
            let mut sims: Vec<(f64, u32)> = all.iter().map(|(id, r)| (cos(q, r), *id)).collect();
            sims.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let top = &sims[..k];
            let mut votes: Vec<(u32, usize, f64)> = Vec::new();
            for &(s, id) in top {
                match votes.iter_mut().find(|v| v.0 == id) {
                    Some(v) => {
                        v.1 += 1;
                        v.2 = v.2.max(s);
                    }
                    None => votes.push((id, 1, s)),
                }
            }
            votes.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.partial_cmp(&a.2).unwrap()));
            votes[0].0
        })
        .collect()
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize, center: &[f64], spread: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|j| center[j] + spread * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

/// Random labeled reference (train) and query (eval) sets with loosely
/// clustered classes.
pub fn random_instance(seed: u64, dim: usize, refs_per_class: Option<usize>) -> (EmbeddingSet, EmbeddingSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = rng.random_range(2..=10usize);
    let mut r = Vec::new();
    let mut q = Vec::new();
    for c in 0..classes {
        let center: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let label = ClassLabel {
            id: c as u32 * 3 + 1,
            name: format!("c{c}"),
        };
        let nr = refs_per_class.unwrap_or_else(|| rng.random_range(1..=50));
        let nq = rng.random_range(1..=50);
        r.push((label.clone(), gaussian_rows(&mut rng, nr, dim, &center, 0.7)));
        q.push((label, gaussian_rows(&mut rng, nq, dim, &center, 0.7)));
    }
    (
        EmbeddingSet::from_rows("ref", Modality::Image, Split::Train, r).unwrap(),
        EmbeddingSet::from_rows("query", Modality::Image, Split::Eval, q).unwrap(),
    )
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || (a - b).abs() <= 1e-15
}
