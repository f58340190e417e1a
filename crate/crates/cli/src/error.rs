use std::path::Path;

use thiserror::Error;

/// CLI-level errors, each mapped to a process exit code:
/// 2 usage/manifest, 3 i/o, 4 numerical divergence.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {message}")]
    Decode { path: String, message: String },

    #[error(transparent)]
    Core(#[from] freqmix::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Manifest(_) => 2,
            CliError::Io { .. } | CliError::Decode { .. } => 3,
            CliError::Core(e) => match e {
                freqmix::Error::Divergence { .. } | freqmix::Error::SymmetryViolation { .. } => 4,
                freqmix::Error::Io { .. } => 3,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
