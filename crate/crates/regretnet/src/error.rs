use std::path::PathBuf;

/// Errors of the command-line layer, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] regretnet_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Format { path: path.into(), message: message.into() }
    }

    /// 2 for configuration errors, 3 for numeric failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        use regretnet_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::NonFinite(_)) => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } | CliError::Format { .. } => 4,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
