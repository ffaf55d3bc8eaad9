use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// No field with positive regularized potential exists (the admissible set P is empty).
    #[error("empty admissible set: {0}")]
    EmptyAdmissibleSet(String),

    /// The line search could not produce descent, or the level history increased.
    #[error("line search failure: {0}")]
    LineSearchFailure(String),

    /// Shooting found no amplitude bracket separating overshoot from undershoot.
    #[error("no ground state: {0}")]
    NoGroundState(String),

    /// A numerical sub-procedure (quadrature, root finding) missed its tolerance.
    #[error("numerical error: {message} (achieved error estimate {error_estimate:e})")]
    Numerical { message: String, error_estimate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
