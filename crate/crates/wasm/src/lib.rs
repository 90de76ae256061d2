//! Browser demo: simulated clusters with their diagnostics, parameter
//! sweeps, and augmented prompt sampling. The exported functions exchange
//! JSON strings; the plain Rust functions underneath are what the tests use.

use embedlens::classify::{centroid_accuracy, knn_classify};
use embedlens::dataset::EmbeddingSet;
use embedlens::geometry::{dot, unit_normalize};
use embedlens::metrics::{class_shifts, frechet_distance, set_centroid_distance, MeanTerm};
use embedlens::promptgen::{generate_prompt, ModifierLexicon};
use embedlens::simulator::{simulate, ClusterSpec};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub class_id: u32,
    pub query: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub reference_centroid_distance: f64,
    pub query_centroid_distance: f64,
    pub mean_centroid_shift: f64,
    pub centroid_accuracy: f64,
    pub knn1_accuracy: f64,
    pub knn5_accuracy: f64,
    pub frechet_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct View {
    pub points: Vec<Point>,
    pub summary: Summary,
}

fn err(e: impl ToString) -> String {
    e.to_string()
}

pub fn summarize(refs: &EmbeddingSet, queries: &EmbeddingSet, seed: u64) -> Result<Summary, String> {
    let shifts = class_shifts(refs, queries).map_err(err)?;
    let k5 = 5.min(refs.len());
    Ok(Summary {
        reference_centroid_distance: set_centroid_distance(refs).map_err(err)?.set_centroid_distance,
        query_centroid_distance: set_centroid_distance(queries).map_err(err)?.set_centroid_distance,
        mean_centroid_shift: shifts.iter().map(|s| s.shift).sum::<f64>() / shifts.len() as f64,
        centroid_accuracy: centroid_accuracy(refs, queries, seed).map_err(err)?.accuracy,
        knn1_accuracy: knn_classify(refs, queries, 1, seed).map_err(err)?.accuracy,
        knn5_accuracy: knn_classify(refs, queries, k5, seed).map_err(err)?.accuracy,
        frechet_distance: frechet_distance(refs.rows(), queries.rows(), MeanTerm::Squared)
            .map_err(err)?
            .total,
    })
}

/// Orthonormal plane spanned by the first two reference class means.
fn projection_plane(refs: &EmbeddingSet) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mean = |i: usize| -> Result<Vec<f64>, String> {
        let c = &refs.classes()[i];
        let mut sum = vec![0.0; refs.dimension()];
        for r in c.rows() {
            let u = unit_normalize(r).map_err(err)?;
            sum.iter_mut().zip(u.iter()).for_each(|(s, x)| *s += x);
        }
        Ok(unit_normalize(&sum).map_err(err)?.into_vec())
    };
    let e1 = mean(0)?;
    let m2 = mean(1)?;
    let along = dot(&m2, &e1);
    let rest: Vec<f64> = m2.iter().zip(&e1).map(|(m, e)| m - along * e).collect();
    let e2 = match unit_normalize(&rest) {
        Ok(u) => u.into_vec(),
        Err(_) => {
            let mut v = vec![0.0; e1.len()];
            v[if e1[0].abs() < 0.9 { 0 } else { 1 }] = 1.0;
            let a = dot(&v, &e1);
            unit_normalize(&v.iter().zip(&e1).map(|(x, e)| x - a * e).collect::<Vec<_>>())
                .map_err(err)?
                .into_vec()
        }
    };
    Ok((e1, e2))
}

/// Simulates a reference/query pair and projects every point onto a plane.
pub fn simulate_view(spec: &ClusterSpec) -> Result<View, String> {
    let sim = simulate(spec).map_err(err)?;
    let (e1, e2) = projection_plane(&sim.references)?;
    let mut points = Vec::with_capacity(sim.references.len() + sim.queries.len());
    for (set, query) in [(&sim.references, false), (&sim.queries, true)] {
        for (class_id, row) in set.labeled_rows() {
            let u = unit_normalize(row).map_err(err)?;
            points.push(Point {
                x: dot(&u, &e1),
                y: dot(&u, &e2),
                class_id,
                query,
            });
        }
    }
    Ok(View {
        points,
        summary: summarize(&sim.references, &sim.queries, spec.seed)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Spread,
    Shift,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: Summary,
}

/// Re-runs the simulation for each value of one parameter.
pub fn sweep(spec: &ClusterSpec, parameter: SweepParameter, values: &[f64]) -> Result<Vec<SweepPoint>, String> {
    values
        .iter()
        .map(|&value| {
            let mut s = spec.clone();
            match parameter {
                SweepParameter::Spread => s.spread = value,
                SweepParameter::Shift => s.shift_degrees = value,
            }
            let sim = simulate(&s).map_err(err)?;
            Ok(SweepPoint {
                value,
                summary: summarize(&sim.references, &sim.queries, s.seed)?,
            })
        })
        .collect()
}

/// `count` prompts for one class from the default lexicon, seeds `seed..`.
pub fn sample_prompts(class_name: &str, count: usize, seed: u64) -> Result<Vec<String>, String> {
    if class_name.trim().is_empty() {
        return Err("class name is empty".into());
    }
    let lexicon = ModifierLexicon::default();
    Ok((0..count as u64)
        .map(|i| generate_prompt(class_name, &lexicon, seed.wrapping_add(i)).text)
        .collect())
}

fn to_js<T: Serialize>(value: Result<T, String>) -> Result<String, JsValue> {
    value
        .and_then(|v| serde_json::to_string(&v).map_err(err))
        .map_err(|e| JsValue::from_str(&e))
}

fn parse<'a, T: Deserialize<'a>>(json: &'a str) -> Result<T, JsValue> {
    serde_json::from_str(json).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = simulateView)]
pub fn simulate_view_js(spec_json: &str) -> Result<String, JsValue> {
    to_js(simulate_view(&parse(spec_json)?))
}

#[wasm_bindgen(js_name = sweep)]
pub fn sweep_js(spec_json: &str, parameter: &str, values_json: &str) -> Result<String, JsValue> {
    let parameter: SweepParameter = parse(&format!("\"{parameter}\""))?;
    let values: Vec<f64> = parse(values_json)?;
    to_js(sweep(&parse(spec_json)?, parameter, &values))
}

#[wasm_bindgen(js_name = samplePrompts)]
pub fn sample_prompts_js(class_name: &str, count: usize, seed: u32) -> Result<String, JsValue> {
    to_js(sample_prompts(class_name, count, u64::from(seed)))
}

#[wasm_bindgen]
pub fn version() -> String {
    embedlens::VERSION.to_string()
}
