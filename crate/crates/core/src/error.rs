use thiserror::Error;

/// Errors raised by model construction, estimation and quadrature.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("tail underflow on grid; largest usable x = {largest_usable_x}")]
    TailUnderflow { largest_usable_x: f64 },

    #[error("numerical integration did not converge (achieved relative error {achieved:e})")]
    NonConvergence { achieved: f64 },

    #[error("horizon t = {t} is outside the support of the renewal function")]
    OutsideLambda { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
