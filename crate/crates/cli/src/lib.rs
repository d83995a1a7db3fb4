//! Library side of the `condnet` command-line tool.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};

use condnet::data::DataError;
use condnet::design::DesignError;
use condnet::network::{FormatError, NetworkError};
use condnet::trainer::TrainError;
use thiserror::Error;

pub use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    /// Artifacts were written but a design procedure did not converge.
    #[error("did not converge: {}", .0.join("; "))]
    NonConvergence(Vec<String>),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing artifacts: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io { .. } | CliError::Missing(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { path, source } => CliError::Io { path, source },
            DataError::Invalid(m) => CliError::Validation(m),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::InvalidConfig(m) => CliError::Validation(m),
            DesignError::Data(d) => d.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(m) => CliError::Validation(m),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Other(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            CliError::Validation(String::new()).exit_code(),
            CliError::NonConvergence(vec![]).exit_code(),
            CliError::io(Path::new("x"), std::io::Error::other("boom")).exit_code(),
            CliError::Other(String::new()).exit_code(),
        ];
        assert_eq!(codes, [2, 3, 4, 1]);
    }
}
