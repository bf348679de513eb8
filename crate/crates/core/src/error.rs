use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by grid construction, model building, stepping and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected:?}, found {found:?}")]
    GridMismatch {
        expected: crate::grid::Dims,
        found: crate::grid::Dims,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("noise mode {index} ({label}): {reason}")]
    InvalidMode {
        index: usize,
        label: String,
        reason: String,
    },

    #[error("noise mode {index} ({label}) violates the barotropic horizontal noise (BHN) structure: {reason}")]
    BhnViolation {
        index: usize,
        label: String,
        reason: String,
    },

    #[error("field is not depth-independent (max layer deviation {deviation:e})")]
    NotBarotropic { deviation: f64 },

    #[error("CFL violation at step {step}: advective Courant number {courant:.3} exceeds 1")]
    Cfl { step: u64, courant: f64 },

    #[error("barotropic divergence {residual:e} exceeds tolerance {tol:e} after step {step}")]
    Divergence { step: u64, residual: f64, tol: f64 },

    #[error("non-finite value in field '{field}' after step {step}")]
    NonFinite { step: u64, field: &'static str },

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("unsupported snapshot version {found} (this build reads version {supported})")]
    SnapshotVersion { found: u32, supported: u32 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
