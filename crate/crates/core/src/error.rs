use thiserror::Error;

/// Errors raised by lattice construction, estimation, design validation and bandit runs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("design has no notions")]
    EmptyDesign,

    #[error("{path}: {message}")]
    Validation { path: String, message: String },

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("exhaustive enumeration refused: {edges} edges exceeds the limit of {limit}")]
    EnumerationTooLarge { edges: usize, limit: usize },

    #[error("grid is empty")]
    EmptyGrid,

    #[error("unknown design id `{0}`")]
    UnknownDesign(String),

    #[error("reward {reward} at step {step} is outside [0, 1]")]
    RewardOutOfRange { step: usize, reward: f64 },

    #[error("{0}")]
    Unavailable(&'static str),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
