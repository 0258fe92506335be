use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The operation is not defined in the requested parameter regime.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("dimensionless scaling undefined: laser strength u must be > 0")]
    ScalingUndefined,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("underflow: {0}")]
    Underflow(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("diagnostics failed: {0}")]
    Diagnostics(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }
}
