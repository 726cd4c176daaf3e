use thiserror::Error;

/// Errors raised by construction, evaluation and verification.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request exceeds a deliberate size limit of the algorithm.
    #[error("capability error: {0}")]
    Capability(String),

    /// An iterative method did not converge.
    #[error("numeric error: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    /// An exponential would overflow double precision.
    #[error("range error: {0}")]
    Range(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
