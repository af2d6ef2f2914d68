use qpt_core::QptError;
use thiserror::Error;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
            CliError::NonConvergence(_) => 4,
        }
    }

    pub fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }

    pub fn input(context: impl std::fmt::Display, e: QptError) -> Self {
        match e {
            QptError::NonConvergence { .. } => CliError::NonConvergence(format!("{context}: {e}")),
            other => CliError::Input(format!("{context}: {other}")),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
