use std::io;

use qbsim_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("integration failed: {0}")]
    Integrator(String),

    #[error("size budget exceeded: {0}")]
    Size(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Integrator(_) => 3,
            CliError::Size(_) => 4,
            CliError::Io(_) | CliError::Output(_) => 1,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Size { .. } => CliError::Size(e.to_string()),
            CoreError::Validation(_) => CliError::Config(e.to_string()),
            CoreError::StepUnderflow { .. }
            | CoreError::Positivity { .. }
            | CoreError::Singular(_)
            | CoreError::NoConvergence(_) => CliError::Integrator(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
