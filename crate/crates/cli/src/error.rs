use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A malformed line; `line` is 1-based.
    #[error("{origin}:{line}: {msg}")]
    Parse { origin: String, line: usize, msg: String },
    /// A problem with a file as a whole, such as a missing entry.
    #[error("{origin}: {msg}")]
    Content { origin: String, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tenfill::Error),
}

impl CliError {
    pub(crate) fn parse(origin: &str, line: usize, msg: impl Into<String>) -> Self {
        CliError::Parse {
            origin: origin.to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn content(origin: &str, msg: impl Into<String>) -> Self {
        CliError::Content {
            origin: origin.to_string(),
            msg: msg.into(),
        }
    }

    /// The 1-based line a parse error points at.
    pub fn line(&self) -> Option<usize> {
        match self {
            CliError::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
