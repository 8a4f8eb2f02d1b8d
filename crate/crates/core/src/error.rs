use thiserror::Error;

/// Errors raised by ingestion, configuration checks and the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at row {row}, column '{column}': cannot read '{value}' as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing value at row {row}, column '{column}'")]
    Missing { row: usize, column: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by user-supplied options rather than data or I/O.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
