//! Datasets and the two feature pipelines.
//!
//! - MNIST: IDX files, a full-depth orthonormal Haar transform of the
//!   zero-padded 32x32 image, and a fixed subset of coefficients picked by
//!   column-pivoted QR on the training set ([`wavelet`]).
//! - Adult Income: six continuous fields scaled into `[0, 100]` plus one-hot
//!   blocks for the eight categorical fields ([`adult`]).
//!
//! Prepared datasets are stored in a small checksummed container
//! ([`container`]) so that design runs skip re-ingestion.

pub mod adult;
pub mod container;
mod dataset;
pub mod idx;
pub mod split;
pub mod wavelet;

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bytes::Truncated;
use crate::linalg::LinalgError;

pub use dataset::{Dataset, Role};
pub use split::{split_validation, SplitStrategy};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { found: u32, expected: u32 },
    #[error(transparent)]
    Truncated(#[from] Truncated),
    #[error("{0}")]
    Format(String),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl DataError {
    /// Prefixes parse errors with the file they came from.
    pub fn in_file(self, path: &Path) -> DataError {
        match self {
            DataError::Io { .. } => self,
            other => DataError::Format(format!("{}: {other}", path.display())),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
