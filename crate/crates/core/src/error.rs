use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: line {line}, column {column}: {message}")]
    Value {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("linear system is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("linear solve residual {residual:e} exceeds bound {bound:e} (condition estimate {condition:e})")]
    Residual {
        residual: f64,
        bound: f64,
        condition: f64,
    },
    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
