use crate::mixing::MixingFamily;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error in {op}: {message}")]
    Domain { op: &'static str, message: String },

    /// The requested operation is not available for this mixing family.
    #[error("{op} is not supported for the {family:?} mixing family")]
    UnsupportedFamily {
        family: MixingFamily,
        op: &'static str,
    },

    /// Too few observations for the requested estimator.
    #[error("{op} needs at least {needed} observations, got {got}")]
    InsufficientData {
        op: &'static str,
        needed: usize,
        got: usize,
    },

    /// The moment quadratic has no positive root with a positive scale
    /// estimate, so no admissible moment estimate exists.
    #[error("method of moments is inadmissible: {detail}")]
    MmInadmissible { detail: String },

    /// The dispersion update received an argument outside the range of the
    /// inverse of d'(phi), which signals a corrupted E-step.
    #[error("M-step domain error at iteration {iteration:?}: v(.) received {arg}")]
    MStepDomain { arg: f64, iteration: Option<usize> },
}

impl Error {
    pub(crate) fn domain(op: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            op,
            message: message.into(),
        }
    }
}
