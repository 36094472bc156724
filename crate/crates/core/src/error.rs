use thiserror::Error;

use crate::statistics::AcvModelFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ACV model fit did not converge: {message}")]
    FitFailed {
        message: String,
        best: Box<AcvModelFit>,
    },

    #[error("degenerate input for estimation: {0}")]
    EstimationDegenerate(String),

    #[error("tail-index estimate diverges: every sample equals the cutoff")]
    DivergentEstimate,

    #[error("unstable queue: m = {m} must lie in (0, 1)")]
    UnstableQueue { m: f64 },

    #[error("insufficient data: need at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("estimating {parameter}: {source}")]
    Attributed {
        parameter: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn attribute(self, parameter: &'static str) -> Self {
        Error::Attributed {
            parameter,
            source: Box::new(self),
        }
    }
}

/// Fails with `InvalidArgument` unless `value` is finite.
pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}
