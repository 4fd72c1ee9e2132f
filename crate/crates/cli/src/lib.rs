//! Library side of the `qcascade` command-line tool: configuration files,
//! reference fixtures, the invariant suite and figure generation.

pub mod commands;
pub mod config;
pub mod figures;
pub mod fixtures;
pub mod svg;
pub mod validate;

use qcascade_core::interferogram::InterferogramError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0} invariant check(s) failed")]
    Validation(usize),
    #[error("analytic and quadrature backends differ by {0:.3e}")]
    Disagreement(f64),
    #[error(transparent)]
    Signal(InterferogramError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Disagreement(_) => 3,
            CliError::Signal(InterferogramError::Io(_)) => 5,
            CliError::Signal(InterferogramError::Csv { .. }) => 2,
            CliError::Signal(InterferogramError::IncompleteSweep { .. })
            | CliError::Signal(InterferogramError::Analytic(_)) => 2,
            CliError::Signal(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<InterferogramError> for CliError {
    fn from(e: InterferogramError) -> Self {
        CliError::Signal(e)
    }
}
