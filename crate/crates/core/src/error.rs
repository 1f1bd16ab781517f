use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, NcasError>;

#[derive(Debug, Error)]
pub enum NcasError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("degenerate graph: node {node} has zero degree")]
    DegenerateGraph { node: usize },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("solver diverged: {0}")]
    Divergence(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode image: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("{path}: unsupported bit depth ({detail}); only 8-bit images are accepted")]
    UnsupportedDepth { path: PathBuf, detail: String },

    #[error("{path}:{line}: malformed point row: {message}")]
    Csv {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl NcasError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        NcasError::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NcasError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors originating in file handling rather than numerics.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            NcasError::Io { .. }
                | NcasError::Decode { .. }
                | NcasError::UnsupportedDepth { .. }
        )
    }

    /// True when an iterative solver left the admissible region.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            NcasError::Divergence(_) | NcasError::Numeric(_) | NcasError::EigenNoConvergence { .. }
        )
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(NcasError::LengthMismatch { expected, actual });
    }
    Ok(())
}
