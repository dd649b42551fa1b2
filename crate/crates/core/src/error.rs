use thiserror::Error;

/// Errors raised by the simulator and fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input `{name}`: {reason}")]
    InvalidInput { name: &'static str, reason: String },

    #[error("contrast undefined: {0}")]
    UndefinedContrast(&'static str),

    #[error("integration failed: `{quantity}` {reason}")]
    Integration {
        quantity: &'static str,
        reason: String,
    },

    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:e}, best parameters {best:?})")]
    NotConverged {
        iterations: usize,
        residual_norm: f64,
        best: Vec<(String, f64)>,
    },

    #[error("calibration of `{quantity}` failed: {reason}")]
    Calibration {
        quantity: &'static str,
        reason: String,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration { .. } | Error::NotConverged { .. } | Error::Calibration { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
