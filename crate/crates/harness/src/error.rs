use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed {what}: {message}")]
    Parse { what: &'static str, message: String },
    #[error(transparent)]
    Core(#[from] implicit_td::Error),
    #[error("verification failed: {failed} of {total} checks")]
    VerificationFailed { failed: usize, total: usize },
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        HarnessError::ConfigInvalid(message.into())
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ConfigInvalid(_) | HarnessError::Parse { .. } | HarnessError::Core(_) => 1,
            HarnessError::VerificationFailed { .. } => 2,
            HarnessError::Io { .. } => 3,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
