use std::fmt;
use std::path::{Path, PathBuf};

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    Core(bcset::Error),
    Io { path: PathBuf, source: std::io::Error },
    Json { path: PathBuf, source: serde_json::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 parse or invalid input, 3 budget, 4 verification, 5 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(bcset::Error::Parse(_) | bcset::Error::Invalid(_)) | CliError::Json { .. } => 2,
            CliError::Core(bcset::Error::Budget(_)) => 3,
            CliError::Core(bcset::Error::Verification { .. }) => 4,
            CliError::Io { .. } => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Json { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bcset::Error> for CliError {
    fn from(e: bcset::Error) -> Self {
        CliError::Core(e)
    }
}
