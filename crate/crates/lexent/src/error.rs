//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty counts")]
    EmptyCounts,

    #[error("invalid rank k={k}: must satisfy 1 <= k <= min(rows, cols) = {max}")]
    InvalidRank { k: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,

    #[error("null detector: the consequent half of the hyperplane has zero norm")]
    NullDetector,

    #[error("space exhausted: every training vector collapsed to zero after rejection")]
    SpaceExhausted,

    #[error("zero vector where a direction was required")]
    ZeroDirection,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("conflicting labels for pair ({antecedent}, {consequent})")]
    ConflictingLabels {
        antecedent: String,
        consequent: String,
    },

    #[error("{0}")]
    InvalidInput(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
