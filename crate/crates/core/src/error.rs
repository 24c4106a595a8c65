use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("singular matrix: log|det| = {log_abs_det:.3} is below the relative threshold")]
    Singular { log_abs_det: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Load(#[from] LoadError),

    #[error("no configuration within {tolerance_pct}% of {target_gmacs} GMACs; nearest: {nearest}")]
    NotFound {
        target_gmacs: f64,
        tolerance_pct: f64,
        nearest: String,
    },

    #[error("parameter count {count} exceeds the finite-difference cap of {cap}; shrink the model (C, E, H, k)")]
    TooManyParameters { count: usize, cap: usize },

    #[error("training diverged at step {step}: loss is not finite")]
    Diverged { step: usize, trace: Vec<f64> },

    #[error("stream is closed")]
    StreamClosed,

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Failures while decoding a weight or feature file.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported version {found} (expected {expected})")]
    UnsupportedVersion { expected: u32, found: u32 },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("shape inconsistent with config at tensor `{tensor}`: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        tensor: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("{0} trailing bytes after the last tensor")]
    TrailingBytes(usize),

    #[error("non-finite value in tensor `{0}`")]
    NonFinite(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
