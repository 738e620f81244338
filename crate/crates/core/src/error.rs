use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A structural invariant of a model type does not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown agent {0}")]
    UnknownAgent(usize),

    #[error("realization {0} has zero probability")]
    ZeroProbability(usize),

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
