use thiserror::Error;

/// Errors produced by the classifier library.
#[derive(Debug, Error)]
pub enum GmcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("csv row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("model file field `{path}`: {message}")]
    ModelFormat { path: String, message: String },

    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GmcError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GmcError {
    GmcError::InvalidParameter(msg.into())
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(GmcError::DimensionMismatch { expected, actual })
    }
}
