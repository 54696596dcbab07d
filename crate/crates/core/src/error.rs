use std::io;

use thiserror::Error;

/// Errors produced anywhere in the selection, scheduling and training stack.
#[derive(Debug, Error)]
pub enum HullftError {
    /// A caller broke an input contract (bad shape, bad parameter, invalid weights).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for pool of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("row {index} has zero norm")]
    ZeroVector { index: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A numerical routine could not produce a trustworthy result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A file or structured document is malformed.
    #[error("format error: {0}")]
    Format(String),

    /// A schedule references an example the model has no target for.
    #[error("unknown example id {0:?}")]
    UnknownExample(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HullftError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        HullftError::Contract(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        HullftError::Format(msg.into())
    }
}

pub type Result<T, E = HullftError> = std::result::Result<T, E>;
