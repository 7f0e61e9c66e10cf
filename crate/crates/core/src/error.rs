use thiserror::Error;

/// Errors raised by the numerical routines and the file formats built on them.
#[derive(Debug, Error)]
pub enum QsrError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("Fock cutoff {dim} too small: truncation deficit {deficit:.3e} exceeds {threshold:.1e}")]
    Truncation {
        dim: usize,
        deficit: f64,
        threshold: f64,
    },

    #[error("insufficient grid resolution: {0}")]
    Resolution(String),

    #[error("ordering violation: {0}")]
    Ordering(String),

    #[error("normalization check failed: integral {integral:.6} ({context})")]
    Normalization { integral: f64, context: String },

    #[error("numerical accuracy failure: {0}")]
    Accuracy(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QsrError>;

impl QsrError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        QsrError::Argument(msg.into())
    }
}
