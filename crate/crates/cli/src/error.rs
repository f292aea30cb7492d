use std::process::ExitCode;

use thiserror::Error;

/// Failures surfaced by a subcommand, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or unreadable inputs, detected before any compute.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Input(csc_core::Error),

    #[error(transparent)]
    Compute(csc_core::Error),

    #[error("{context}, run {run}: {source}")]
    Run {
        context: String,
        run: usize,
        #[source]
        source: csc_core::Error,
    },

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Input(_) => ExitCode::from(2),
            CliError::Compute(_) | CliError::Run { .. } | CliError::Output { .. } => ExitCode::from(1),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Context<T> {
    /// Tags a core error as an input problem (exit 2).
    fn input(self) -> CliResult<T>;
    /// Tags a core error as a compute failure (exit 1).
    fn compute(self) -> CliResult<T>;
}

impl<T> Context<T> for csc_core::Result<T> {
    fn input(self) -> CliResult<T> {
        self.map_err(CliError::Input)
    }

    fn compute(self) -> CliResult<T> {
        self.map_err(CliError::Compute)
    }
}
