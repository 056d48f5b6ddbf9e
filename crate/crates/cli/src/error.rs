use dppsim::{Error, ExistenceReport};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("model does not exist: {message}")]
    NonExistent { message: String, report: Option<ExistenceReport> },

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("simulation failed: {0}")]
    Simulation(Error),

    #[error("{} validation check(s) failed: {}", .0.len(), .0.join(", "))]
    ValidationFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::NonExistent { .. } => 2,
            CliError::Io(_) => 3,
            CliError::Simulation(_) | CliError::ValidationFailed(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonExistent(message) => CliError::NonExistent { message, report: None },
            Error::InvalidParameter(m) | Error::InvalidConditioning(m) => CliError::Usage(m),
            Error::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
            other => CliError::Simulation(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
