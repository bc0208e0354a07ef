use std::path::{Path, PathBuf};
use thiserror::Error;

/// Failure of a subcommand, carrying its exit code class.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or parameter values (exit 1).
    #[error("usage: {0}")]
    Usage(String),
    /// File could not be read or written (exit 2).
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Input file contents are malformed (exit 2).
    #[error("format: {0}")]
    Format(String),
    /// The flow graph failed while running (exit 2).
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Format(_) | CliError::Run(_) => 2,
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
