use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimators, the Monte-Carlo studies and the file formats.
#[derive(Debug, Error)]
pub enum EvpError {
    /// An argument fell outside the range an operation accepts.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("score pool is empty")]
    EmptyPool,

    #[error("non-finite score {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    /// Both pools have the same full-pool expected maximum and no truth was supplied.
    #[error("indeterminate truth at budget {budget}: both pools have expected maximum {value}")]
    IndeterminateTruth { budget: usize, value: f64 },

    #[error("truncation interval [{lo}, {hi}] accepted {accepted} of {attempts} normal draws")]
    PathologicalTruncation {
        lo: f64,
        hi: f64,
        accepted: u64,
        attempts: u64,
    },

    #[error("{source_name}: line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = EvpError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> EvpError {
    EvpError::InvalidArgument(msg.into())
}
