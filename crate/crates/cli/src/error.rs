use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::NonConvergence(_) => "non-convergence",
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    /// Library error raised while validating configuration.
    pub fn config(context: &str, e: p2pbw::Error) -> Self {
        CliError::Usage(format!("{context}: {e}"))
    }

    /// Library error raised while processing data.
    pub fn from_core(context: &str, e: p2pbw::Error) -> Self {
        let msg = format!("{context}: {e}");
        match e {
            p2pbw::Error::FitFailed { .. } => CliError::NonConvergence(msg),
            p2pbw::Error::UnstableQueue { .. } => CliError::Usage(msg),
            _ => CliError::Data(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
