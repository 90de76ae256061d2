//! Labeled embedding sets and their on-disk format.
//!
//! A set is stored as a JSON manifest plus a raw blob of little-endian `f32`
//! rows, grouped by class in manifest order. [`EmbeddingSet`] is the single
//! validation boundary: once constructed, every row has the declared
//! dimension, every value is finite, and every class is non-empty.
//!
//! In memory, values are held as `f64`. Loading widens exactly, so
//! `save -> load -> save` reproduces blob bytes bit-for-bit.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassLabel {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "IM")]
    Image,
    #[serde(rename = "PRMT")]
    Prompt,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Image => "IM",
            Modality::Prompt => "PRMT",
        })
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "IM" => Ok(Modality::Image),
            "PRMT" => Ok(Modality::Prompt),
            other => Err(Error::InvalidArgument(format!("unknown modality `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Eval => "eval",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "eval" => Ok(Split::Eval),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

/// The embeddings of one class, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEmbeddings {
    label: ClassLabel,
    dimension: usize,
    data: Vec<f64>,
}

impl ClassEmbeddings {
    pub fn label(&self) -> &ClassLabel {
        &self.label
    }

    pub fn id(&self) -> u32 {
        self.label.id
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dimension)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    name: String,
    dimension: usize,
    modality: Modality,
    split: Split,
    classes: Vec<ClassEmbeddings>,
}

impl EmbeddingSet {
    /// Builds a validated set. Each class carries its rows flattened
    /// row-major; class order is preserved.
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        modality: Modality,
        split: Split,
        classes: Vec<(ClassLabel, Vec<f64>)>,
    ) -> Result<Self> {
        let name = name.into();
        if dimension < 2 {
            return Err(Error::InvalidSet(format!(
                "dimension must be at least 2, got {dimension}"
            )));
        }
        if classes.is_empty() {
            return Err(Error::InvalidSet(format!("set `{name}` has no classes")));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(classes.len());
        for (label, data) in classes {
            if !seen.insert(label.id) {
                return Err(Error::InvalidSet(format!("duplicate class id {}", label.id)));
            }
            if label.name.trim().is_empty() {
                return Err(Error::InvalidSet(format!("class {} has an empty name", label.id)));
            }
            if data.is_empty() {
                return Err(Error::InvalidSet(format!("class {} has no embeddings", label.id)));
            }
            if data.len() % dimension != 0 {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: data.len() % dimension,
                });
            }
            if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteValue {
                    class_id: label.id,
                    row: pos / dimension,
                });
            }
            out.push(ClassEmbeddings {
                label,
                dimension,
                data,
            });
        }
        Ok(EmbeddingSet {
            name,
            dimension,
            modality,
            split,
            classes: out,
        })
    }

    /// Convenience constructor from per-class lists of rows.
    pub fn from_rows(
        name: impl Into<String>,
        modality: Modality,
        split: Split,
        classes: Vec<(ClassLabel, Vec<Vec<f64>>)>,
    ) -> Result<Self> {
        let dimension = classes
            .iter()
            .flat_map(|(_, rows)| rows.first())
            .map(Vec::len)
            .next()
            .unwrap_or(0);
        let mut flat = Vec::with_capacity(classes.len());
        for (label, rows) in classes {
            let mut data = Vec::with_capacity(rows.len() * dimension);
            for r in rows {
                if r.len() != dimension {
                    return Err(Error::DimensionMismatch {
                        expected: dimension,
                        found: r.len(),
                    });
                }
                data.extend(r);
            }
            flat.push((label, data));
        }
        Self::new(name, dimension, modality, split, flat)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn classes(&self) -> &[ClassEmbeddings] {
        &self.classes
    }

    pub fn class(&self, id: u32) -> Option<&ClassEmbeddings> {
        self.classes.iter().find(|c| c.label.id == id)
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.classes.iter().map(|c| c.label.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.classes.iter().map(ClassEmbeddings::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All rows in storage order.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.classes.iter().flat_map(|c| c.rows())
    }

    /// All rows with their class id, in storage order.
    pub fn labeled_rows(&self) -> impl Iterator<Item = (u32, &[f64])> + Clone {
        self.classes
            .iter()
            .flat_map(|c| c.rows().map(move |r| (c.label.id, r)))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn with_modality(mut self, modality: Modality) -> Self {
        self.modality = modality;
        self
    }

    /// Replaces class names; ids and embeddings are untouched.
    pub fn with_labels(mut self, labels: &[ClassLabel]) -> Self {
        let by_id: BTreeMap<u32, &ClassLabel> = labels.iter().map(|l| (l.id, l)).collect();
        for c in &mut self.classes {
            if let Some(l) = by_id.get(&c.label.id) {
                c.label.name = l.name.clone();
            }
        }
        self
    }
}

pub const DTYPE_F32LE: &str = "f32le";
pub const LAYOUT_ROW_MAJOR_BY_CLASS: &str = "row-major-by-class";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestClass {
    pub id: u32,
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub dimension: usize,
    pub modality: Modality,
    pub split: Split,
    pub classes: Vec<ManifestClass>,
    pub blob: String,
    pub dtype: String,
    pub layout: String,
}

impl Manifest {
    pub fn total_rows(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::ManifestParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let bad = |message: String| Error::ManifestParse {
        path: path.to_path_buf(),
        message,
    };
    if manifest.dtype != DTYPE_F32LE {
        return Err(bad(format!("unsupported dtype `{}`", manifest.dtype)));
    }
    if manifest.layout != LAYOUT_ROW_MAJOR_BY_CLASS {
        return Err(bad(format!("unsupported layout `{}`", manifest.layout)));
    }
    if let Some(c) = manifest.classes.iter().find(|c| c.count == 0) {
        return Err(bad(format!("class {} declares zero rows", c.id)));
    }
    Ok(manifest)
}

fn blob_path(manifest_path: &Path, manifest: &Manifest) -> PathBuf {
    manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&manifest.blob)
}

/// Loads and validates a set from its manifest path.
pub fn load_set(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let manifest = read_manifest(path)?;
    let blob = blob_path(path, &manifest);
    let bytes = fs::read(&blob).map_err(|e| Error::io(&blob, e))?;
    let expected = 4 * manifest.dimension as u64 * manifest.total_rows() as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::BlobSizeMismatch {
            path: blob,
            expected,
            actual: bytes.len() as u64,
        });
    }
    let mut values = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64);
    let classes = manifest
        .classes
        .iter()
        .map(|c| {
            let data: Vec<f64> = values.by_ref().take(c.count * manifest.dimension).collect();
            (
                ClassLabel {
                    id: c.id,
                    name: c.name.clone(),
                },
                data,
            )
        })
        .collect();
    EmbeddingSet::new(
        manifest.name,
        manifest.dimension,
        manifest.modality,
        manifest.split,
        classes,
    )
}

/// Reads only the manifest; useful for reporting on a set without its blob.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    read_manifest(path.as_ref())
}

/// Default blob file name for a manifest path: `<stem>.f32`.
pub fn default_blob_name(manifest_path: &Path) -> String {
    let stem = manifest_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "set".to_string());
    format!("{stem}.f32")
}

pub fn manifest_for(set: &EmbeddingSet, blob: impl Into<String>) -> Manifest {
    Manifest {
        name: set.name.clone(),
        dimension: set.dimension,
        modality: set.modality,
        split: set.split,
        classes: set
            .classes
            .iter()
            .map(|c| ManifestClass {
                id: c.label.id,
                name: c.label.name.clone(),
                count: c.len(),
            })
            .collect(),
        blob: blob.into(),
        dtype: DTYPE_F32LE.to_string(),
        layout: LAYOUT_ROW_MAJOR_BY_CLASS.to_string(),
    }
}

/// Writes the manifest to `path` and the blob next to it. Values are stored
/// as 32-bit floats.
pub fn save_set(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let manifest = manifest_for(set, default_blob_name(path));
    let blob = blob_path(path, &manifest);

    let mut bytes = Vec::with_capacity(4 * set.len() * set.dimension);
    for c in &set.classes {
        for &x in &c.data {
            bytes.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    fs::write(&blob, &bytes).map_err(|e| Error::io(&blob, e))?;
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidSet(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Number of evaluation rows drawn from a class of `n` rows.
pub fn eval_count(n: usize, eval_fraction: f64) -> usize {
    let raw = (eval_fraction * n as f64).round() as usize;
    raw.clamp(1, n - 1)
}

/// Partitions every class into disjoint train and eval parts.
///
/// The eval part of a class holds `max(1, round(eval_fraction * n))` rows,
/// capped so at least one row stays in train. Row selection is a seeded
/// shuffle keyed by class id; the relative order of rows is kept.
pub fn split_set(
    set: &EmbeddingSet,
    eval_fraction: f64,
    seed: u64,
) -> Result<(EmbeddingSet, EmbeddingSet)> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eval fraction must lie in (0, 1), got {eval_fraction}"
        )));
    }
    let dim = set.dimension;
    let mut train = Vec::with_capacity(set.classes.len());
    let mut eval = Vec::with_capacity(set.classes.len());
    for c in &set.classes {
        let n = c.len();
        if n < 2 {
            return Err(Error::ClassTooSmall {
                class_id: c.label.id,
                count: n,
                required: 2,
            });
        }
        let n_eval = eval_count(n, eval_fraction);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed, &[u64::from(c.label.id)]));
        let mut is_eval = vec![false; n];
        for &i in &order[..n_eval] {
            is_eval[i] = true;
        }
        let mut t = Vec::with_capacity((n - n_eval) * dim);
        let mut e = Vec::with_capacity(n_eval * dim);
        for (i, row) in c.rows().enumerate() {
            if is_eval[i] {
                e.extend_from_slice(row);
            } else {
                t.extend_from_slice(row);
            }
        }
        train.push((c.label.clone(), t));
        eval.push((c.label.clone(), e));
    }
    Ok((
        EmbeddingSet::new(set.name.clone(), dim, set.modality, Split::Train, train)?,
        EmbeddingSet::new(set.name.clone(), dim, set.modality, Split::Eval, eval)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelOverride {
    pub id: u32,
    pub prompt: String,
}

/// Replacement prompt text keyed by class id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelOverrideFile {
    entries: BTreeMap<u32, String>,
}

impl LabelOverrideFile {
    pub fn new(entries: Vec<LabelOverride>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for e in entries {
            if e.prompt.trim().is_empty() {
                return Err(Error::InvalidOverride(format!(
                    "empty replacement for class {}",
                    e.id
                )));
            }
            if map.insert(e.id, e.prompt).is_some() {
                return Err(Error::InvalidOverride(format!("class {} listed twice", e.id)));
            }
        }
        Ok(LabelOverrideFile { entries: map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<LabelOverride> = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidOverride(format!("{}: {e}", path.display())))?;
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&str> {
        self.entries.get(&id).map(String::as_str)
    }
}

/// Returns `labels` with overridden names replaced, order preserved.
pub fn apply_label_overrides(
    labels: &[ClassLabel],
    overrides: &LabelOverrideFile,
) -> Result<Vec<ClassLabel>> {
    let known: HashSet<u32> = labels.iter().map(|l| l.id).collect();
    if let Some(&id) = overrides.entries.keys().find(|id| !known.contains(id)) {
        return Err(Error::UnknownClassId(id));
    }
    Ok(labels
        .iter()
        .map(|l| ClassLabel {
            id: l.id,
            name: overrides.get(l.id).unwrap_or(&l.name).to_string(),
        })
        .collect())
}

/// Reads a class table: a JSON array of `{id, name}`.
pub fn load_class_labels(path: impl AsRef<Path>) -> Result<Vec<ClassLabel>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let labels: Vec<ClassLabel> = serde_json::from_str(&text).map_err(|e| Error::ManifestParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut seen = HashSet::new();
    for l in &labels {
        if !seen.insert(l.id) {
            return Err(Error::InvalidSet(format!("duplicate class id {}", l.id)));
        }
        if l.name.trim().is_empty() {
            return Err(Error::InvalidSet(format!("class {} has an empty name", l.id)));
        }
    }
    Ok(labels)
}
