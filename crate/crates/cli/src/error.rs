use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<robustbell::Error> for CliError {
    fn from(e: robustbell::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
