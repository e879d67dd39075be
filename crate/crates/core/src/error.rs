use thiserror::Error;

/// Errors returned by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violated an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Two inputs that must be aligned have different lengths.
    #[error("length mismatch: {what} has {left} vs {right}")]
    LengthMismatch {
        /// Which pair of inputs disagreed.
        what: &'static str,
        /// Length of the first input.
        left: usize,
        /// Length of the second input.
        right: usize,
    },
    /// A file did not match its schema.
    #[error("schema error at row {row}, column '{column}': {message}")]
    Schema {
        /// 1-based data row (0 means the header).
        row: usize,
        /// Column name.
        column: String,
        /// What was wrong.
        message: String,
    },
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// CSV reader/writer failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn check_len(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { what, left, right });
    }
    Ok(())
}
