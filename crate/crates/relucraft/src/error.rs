use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameters or malformed values supplied by the caller.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    /// A mathematical precondition of a construction does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("unsupported patch at node {node}: {reason}")]
    UnsupportedPatch { node: usize, reason: String },

    /// A construction produced metrics outside its promised bound. Always a bug.
    #[error("certificate violated for {construction}: {detail}")]
    Certificate { construction: String, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}
