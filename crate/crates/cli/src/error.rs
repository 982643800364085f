use std::path::{Path, PathBuf};

use womble::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] womble::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Validation(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CliError::Core(e) => e.class(),
            CliError::Io { .. } => ErrorClass::Io,
            CliError::Validation(_) => ErrorClass::Validation,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Validation => 2,
            ErrorClass::Io => 3,
            ErrorClass::Numeric => 4,
        }
    }

    /// `error[CLASS]: message` on one line.
    pub fn report(&self) -> String {
        let class = match self.class() {
            ErrorClass::Validation => "VALIDATION",
            ErrorClass::Io => "IO",
            ErrorClass::Numeric => "NUMERIC",
        };
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{class}]: {msg}")
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Read failures are I/O problems; malformed content is a validation
    /// problem.
    pub fn csv(path: &Path, err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(e) => CliError::io(path, e),
                _ => unreachable!("checked io kind"),
            }
        } else {
            CliError::Validation(format!("{}: {err}", path.display()))
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
