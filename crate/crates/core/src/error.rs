use thiserror::Error;

pub type Result<T> = std::result::Result<T, DupError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DupError {
    #[error("domain error: {0}")]
    Domain(String),

    /// `curve` is the bidder's name when known, otherwise empty.
    #[error("concavity violated in curve '{curve}' at breakpoint {index} (slope {left} -> {right})")]
    ConcavityViolation { curve: String, index: usize, left: f64, right: f64 },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("profile mismatch: expected {expected} bids, got {got}")]
    ProfileMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for {len} bidders")]
    Index { index: usize, len: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("lemma violated: {0}")]
    LemmaViolation(String),

    #[error("expectation is unbounded: {0}")]
    UnboundedExpectation(String),

    #[error("dominance precondition failed: {0}")]
    DominanceViolation(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl DupError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        DupError::Domain(msg.into())
    }

    pub(crate) fn hypothesis(msg: impl Into<String>) -> Self {
        DupError::HypothesisViolated(msg.into())
    }
}

impl From<std::io::Error> for DupError {
    fn from(e: std::io::Error) -> Self {
        DupError::Io(e.to_string())
    }
}
