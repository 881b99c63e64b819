use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid game: {0}")]
    InvalidSpec(String),

    #[error("vector is not in the ({n},{r})-hypersimplex: {reason}")]
    NotInHypersimplex { n: usize, r: usize, reason: String },

    #[error("invalid load vector: {0}")]
    InvalidLoad(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("non-finite input at index {0}")]
    NonFinite(usize),

    #[error("instance too large for exhaustive enumeration: {0}")]
    GuardExceeded(String),

    #[error("closed form not available: {0}")]
    WrongCase(String),

    #[error("closed-form assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal numerical error: {0}")]
    Internal(String),

    #[error("trace i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
