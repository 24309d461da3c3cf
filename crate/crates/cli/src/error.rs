use std::path::Path;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input or an unmet precondition.
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] maskdp::Error),
    /// A check ran and its verdict was negative.
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Input(_) | CliError::Core(_) => 2,
            CliError::Violation(_) => 3,
        }
    }

    pub fn io(path: &Path, action: &str, source: std::io::Error) -> Self {
        CliError::Io {
            context: format!("cannot {action} {}", path.display()),
            source,
        }
    }
}
