use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Validation,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector has (near) zero norm")]
    ZeroVector,
    #[error("centroid of class {class_id} is undefined: its unit vectors cancel")]
    DegenerateCentroid { class_id: u32 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty set of embeddings")]
    EmptySet,

    #[error("cannot parse manifest {path}: {message}")]
    ManifestParse { path: PathBuf, message: String },
    #[error("blob {path} holds {actual} bytes, manifest implies {expected}")]
    BlobSizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("non-finite value in class {class_id}, row {row}")]
    NonFiniteValue { class_id: u32, row: usize },
    #[error("invalid embedding set: {0}")]
    InvalidSet(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("class {class_id} has {count} embeddings, at least {required} required")]
    ClassTooSmall {
        class_id: u32,
        count: usize,
        required: usize,
    },
    #[error("override names unknown class id {0}")]
    UnknownClassId(u32),
    #[error("invalid label override file: {0}")]
    InvalidOverride(String),
    #[error("set `{set}` has split {found}, expected {expected}")]
    WrongSplit {
        set: String,
        expected: crate::dataset::Split,
        found: crate::dataset::Split,
    },

    #[error("at least {required} samples required, got {found}")]
    TooFewSamples { required: usize, found: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("query class {0} has no reference class")]
    ClassUniverseMismatch(u32),
    #[error("k = {k} exceeds the {available} reference embeddings")]
    KTooLarge { k: usize, available: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("results cannot be compared: {0}")]
    MismatchedResults(String),

    #[error("lexicon yields {available} distinct prompts, {requested} requested per class")]
    LexiconTooSmall { available: u128, requested: usize },
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),

    #[error("cannot rotate in dimension {0}")]
    DegenerateRotation(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::NumericalFailure(_) => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
}
