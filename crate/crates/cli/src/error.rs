use acr::AcrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or inconsistent command-line parameters.
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(#[from] AcrError),

    /// The run completed but did not meet its accuracy target.
    #[error("{0}")]
    Rejected(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 for configuration and I/O problems, 2 when solving failed.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Solver(e) => match e {
                AcrError::Io { .. }
                | AcrError::Parse { .. }
                | AcrError::NonPositiveKappa { .. } => 1,
                AcrError::InvalidArgument(_) => 1,
                _ => 2,
            },
            CliError::Rejected(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
