use thiserror::Error;

/// Errors shared by the numeric kernels, the resampling engine, and the
/// Monte Carlo harness.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("rank failure in block {block}: {detail}")]
    Rank { block: String, detail: String },

    #[error("numeric routine failed: {0}")]
    Numeric(String),

    #[error("model does not support this operation: {0}")]
    Capability(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
