use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("model violates the Euler-like contract: {0}")]
    NotEulerLike(String),

    /// A coordinate became non-finite during integration.
    #[error("trajectory blew up at step {step} (t = {time})")]
    BlowUp { step: u64, time: f64 },

    /// A member of an ensemble failed; carries what is needed to replay it.
    #[error("trajectory (seed {seed}, stream {stream_id}) failed: {source}")]
    Trajectory {
        seed: u64,
        stream_id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
