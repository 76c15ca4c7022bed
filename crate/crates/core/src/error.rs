use thiserror::Error;

/// Errors raised by the library. Verification outcomes that are expected to
/// fail (certificates, reports) are returned as values, not as errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("vector is not cyclic and separating (sigma_min = {sigma_min:e}, threshold = {threshold:e})")]
    NotInvertible { sigma_min: f64, threshold: f64 },

    #[error("operator is not of the form L_H R_H' (rank-1 residual {residual:e})")]
    NotAModularShape { residual: f64 },

    #[error("precondition failed: {what} (residual {residual:e})")]
    PreconditionFailed { what: String, residual: f64 },

    #[error("modular operators cannot be intertwined: {0}")]
    NotIntertwinable(String),

    #[error("construction failed verification: {0}")]
    ConstructionFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
