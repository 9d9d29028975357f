use thiserror::Error;

use crate::learner::BallReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// A hypothesis of the underlying inequality is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("operation requires family {expected}, got {found}")]
    Family { expected: String, found: String },

    #[error("size guard exceeded for {what}: requires {required}, limit {limit}")]
    Guard {
        what: String,
        required: u128,
        limit: u128,
    },

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("intersection of Bernstein balls is empty")]
    EmptyIntersection(Box<BallReport>),

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for refusals caused by enumeration limits rather than bad input.
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::Guard { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
