use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input file {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] dpfair::Error),
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::MissingInput(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Write { .. } => EXIT_IO,
            CliError::Core(dpfair::Error::Io { source, .. }) if source.kind() == io::ErrorKind::NotFound => EXIT_USAGE,
            CliError::Core(dpfair::Error::Io { .. }) => EXIT_IO,
            CliError::Core(_) => EXIT_USAGE,
        })
    }

    /// Maps a failed read of a user-named input to the usage class.
    pub fn reading(path: &Path) -> impl FnOnce(dpfair::Error) -> CliError + '_ {
        move |e| match e {
            dpfair::Error::Io { ref source, .. } if source.kind() == io::ErrorKind::NotFound => {
                CliError::MissingInput(path.to_path_buf())
            }
            other => CliError::Core(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}
