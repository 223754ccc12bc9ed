use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    UnwritableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("length mismatch: {preds} predictions vs {gts} ground truths")]
    LengthMismatch { preds: usize, gts: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("boundary map has no boundary pixels")]
    EmptyBoundary,

    #[error("image is {width}x{height}; matting needs at least 3x3")]
    ImageTooSmall { width: usize, height: usize },

    #[error("trimap has no known pixels; the matting system is underdetermined")]
    NoKnownPixels,

    #[error("solver did not reach tolerance {tol:e} in {iterations} iterations (relative residual {residual:e})")]
    SolverDivergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("crop window {width}x{height} is degenerate")]
    DegenerateCrop { width: usize, height: usize },
}

impl Error {
    /// True for failures of the numerical pipeline itself, as opposed to bad
    /// inputs, bad flags or I/O problems.
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            Error::NoKnownPixels | Error::SolverDivergence { .. } | Error::EmptyBoundary
        )
    }
}
