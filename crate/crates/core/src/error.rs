//! Error type shared by every module of the library.

use thiserror::Error;

/// Failures raised by constructors and operations.
///
/// Numerical divergence that is an expected outcome of a check (for example a
/// norm that grows without bound on a counterexample family) is reported
/// through flags on the result, not through this type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the documented domain of the operation.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A transform plan failed its self-calibration.
    #[error("calibration failed: {0}")]
    Calibration(String),
    /// A quantity that must be finite could not be computed.
    #[error("divergent computation: {0}")]
    Divergence(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Returns a parameter error when `cond` is false.
pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Parameter(msg()))
    }
}
