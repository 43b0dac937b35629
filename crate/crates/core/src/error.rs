use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the function.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// The region cannot be handled by the closed-form path.
    #[error("unsupported region: {0}")]
    Unsupported(String),

    /// A size guard was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Covariance factorization failed even after regularization.
    #[error("covariance factorization failed (jitter {jitter:e}); retry with a larger jitter")]
    Factorization { jitter: f64 },

    /// An iterative method did not converge.
    #[error("{0} failed to converge")]
    Convergence(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        what,
        detail: detail.into(),
    }
}

/// Rejects NaN and infinities.
pub(crate) fn ensure_finite(what: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(domain(what, format!("argument must be finite, got {x}")))
    }
}
