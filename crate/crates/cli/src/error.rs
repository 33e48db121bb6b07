use std::io;
use std::process::ExitCode;

use cantor_spectra_core::Error as SolverError;
use thiserror::Error;

use crate::format::ParseError;

/// Everything that stops a run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Rejected by the argument parser (also covers `--help`).
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error("{message}")]
    Config {
        message: String,
        /// Subcommand whose usage is printed after the message.
        subcommand: Option<&'static str>,
    },
    #[error("potential file {path}: {source}")]
    Potential { path: String, source: ParseError },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    MissingData(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            subcommand: None,
        }
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 0 for help/version output, 1 for solver or data failures, 2 for
    /// invalid input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(e) => e.exit_code() as u8,
            CliError::Config { .. } | CliError::Potential { .. } => 2,
            CliError::Solver(e) => match e {
                SolverError::NoConvergence { .. } | SolverError::StaleEigenvalue { .. } => 1,
                _ => 2,
            },
            CliError::MissingData(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
