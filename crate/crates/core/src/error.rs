//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A value violates a type or operation precondition.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity that must be divided by is exactly zero.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its
    /// tolerance. Carries the best estimate and its error bound.
    #[error("integration did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    IntegrationFailure { estimate: f64, error_bound: f64 },

    /// The supplied bracket does not straddle a sign change.
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// Geometric bracket growth failed to enclose a root.
    #[error("bracket search failed: {0}")]
    BracketSearch(String),

    /// Study inputs that contradict each other beyond sampling noise.
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
