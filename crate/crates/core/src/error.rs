use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A covariance matrix violates the uncertainty principle.
    #[error("non-physical covariance matrix: smallest symplectic eigenvalue {0} < 1/2")]
    NonPhysical(f64),

    /// Target and background channels cannot be compared (kind or transmissivity differ).
    #[error("mismatched channels: {0}")]
    MismatchedChannels(String),

    /// Target and background are identical, so the decision problem is vacuous.
    #[error("degenerate scenario: {0}")]
    Degenerate(String),

    /// The requested protocol does not exist for this channel class.
    #[error("unsupported protocol: {0}")]
    Unsupported(String),

    /// Rounding pushed an intermediate quantity outside its admissible range.
    #[error("numerical instability: {0}")]
    NumericalInstability(String),
}

impl Error {
    /// True for failures caused by floating-point evaluation rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalInstability(_) | Error::NonPhysical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
