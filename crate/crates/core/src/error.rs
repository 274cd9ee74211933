use thiserror::Error;

/// Errors produced by model construction, data loading, and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid usage: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("index ({row}, {col}) out of bounds for {m}x{n} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        m: usize,
        n: usize,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("training diverged at epoch {epoch} on entry ({row}, {col})")]
    Divergence { epoch: usize, row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
