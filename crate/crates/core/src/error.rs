use thiserror::Error;

/// Failure classes shared by every analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or out-of-domain input.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An algorithm failed to meet its residual or convergence contract.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// The requested physical regime does not exist for these inputs
    /// (no curve crossing, no loss of metastability in range, ...).
    #[error("{0}")]
    Regime(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> Error {
    Error::Numeric(msg.into())
}

pub(crate) fn regime(msg: impl Into<String>) -> Error {
    Error::Regime(msg.into())
}
