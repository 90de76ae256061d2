//! Diagnostics for labeled embedding sets in a joint text/image space:
//! diversity and centroid-shift metrics, centroid and k-NN classification
//! experiments, modality separability probes, prompt augmentation and a
//! synthetic cluster simulator.

pub mod classify;
#[cfg(feature = "cli")]
pub mod cli;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod metrics;
mod par;
pub mod promptgen;
pub mod seed;
pub mod separability;
pub mod simulator;

pub use error::{Error, ErrorKind, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
