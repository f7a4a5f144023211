use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad shapes, NaN values, unparseable specs.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A documented precondition of an operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A convexity check failed; `gap` is the most negative midpoint gap found.
    #[error("function is not midpoint-convex (gap {gap:e} at support point {at})")]
    NotConvex { gap: f64, at: usize },
    /// A search budget was exhausted before the answer was determined.
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("linear program: {0}")]
    Lp(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
