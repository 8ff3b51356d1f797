use thiserror::Error;

/// Errors reported by constructors, updates and queries across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} outside domain of size {n}")]
    IndexOutOfRange { index: u64, n: u64 },

    #[error("strict turnstile violation at update {position}: coordinate {index} drops to {value}")]
    StrictViolation { position: usize, index: usize, value: f64 },

    #[error("candidate set of size {size} exceeds limit {limit}")]
    CandidateSetTooLarge { size: usize, limit: usize },

    #[error("not a partition of [0, {n}): {reason}")]
    NotAPartition { n: usize, reason: String },

    #[error("enumeration of {count:.3e} sets exceeds limit {limit:.0e}")]
    EnumerationTooLarge { count: f64, limit: f64 },

    #[error("polynomial degree {degree} exceeds bound {bound}")]
    DegreeViolation { degree: usize, bound: usize },

    #[error("round discipline violated: {0}")]
    RoundViolation(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
