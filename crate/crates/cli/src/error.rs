use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),

    #[error(transparent)]
    Numeric(#[from] zeta_kernel::Error),
}

impl CliError {
    pub fn config(e: zeta_kernel::Error) -> Self {
        CliError::Config(e.to_string())
    }

    /// Singular systems are numerical degeneracy (3); everything else is a
    /// configuration or environment problem (2).
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Numeric(zeta_kernel::Error::Singular { .. }) => ExitCode::from(3),
            _ => ExitCode::from(2),
        }
    }
}
