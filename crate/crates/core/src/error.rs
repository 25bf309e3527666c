use thiserror::Error;

/// Errors raised by kernel evaluation, quadrature construction and the
/// verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates a precondition (weight exponents, degrees, sizes).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The tridiagonal eigensolve behind a Gauss rule failed.
    #[error("quadrature construction failed: {0}")]
    Quadrature(String),

    /// No admissible series cutoff exists for the requested time and tolerance.
    #[error("truncation not certified: {0}")]
    Truncation(String),

    /// A tensor-product quadrature would exceed the configured evaluation budget.
    #[error("node budget exceeded: {needed} evaluations requested, budget is {budget}")]
    NodeBudget { needed: u128, budget: u128 },

    /// Gram-Schmidt lost orthogonality or an oracle request is out of range.
    #[error("oracle failure: {0}")]
    Oracle(String),

    /// Envelope fitting had nothing to work with.
    #[error("envelope failure: {0}")]
    Envelope(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Slack allowed when checking that a coordinate lies in `[-1, 1]`.
pub(crate) const DOMAIN_SLACK: f64 = 1e-14;

pub(crate) fn check_unit_interval(name: &str, x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + DOMAIN_SLACK {
        return Err(Error::Domain(format!("{name} = {x} is outside [-1, 1]")));
    }
    Ok(x.clamp(-1.0, 1.0))
}
