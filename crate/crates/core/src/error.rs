use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column '{0}' not found in header")]
    UnknownColumn(String),

    #[error("column '{column}' is not numeric (row {row}: '{value}'); categorical features are not supported")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },

    #[error("column '{0}' has no parseable numeric values")]
    EmptyColumn(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear system is singular")]
    Singular,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
