//! Failure classes of a run and their exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

/// A check verdict of fail.
pub const EXIT_VERIFICATION: u8 = 1;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<invsq_core::Error> for CliError {
    fn from(e: invsq_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
