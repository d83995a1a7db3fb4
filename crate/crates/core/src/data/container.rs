//! Prepared-dataset files.
//!
//! ```text
//! "CSDS"                 magic
//! u32  version (= 1)
//! u8   role (0 train, 1 validation, 2 test)
//! u32  class count
//! u64  rows
//! u64  cols
//! u32  provenance length, then that many UTF-8 bytes
//! f64  x rows*cols features, row-major
//! u32  x rows labels
//! u32  CRC32 (IEEE) of every preceding byte
//! ```
//!
//! Little-endian throughout.

use std::path::Path;

use super::{read_file, DataError, Dataset, Role};
use crate::bytes::{put_f64s, put_u32, put_u64, to_u32, Reader};
use crate::linalg::Matrix;

pub const MAGIC: &[u8; 4] = b"CSDS";
pub const VERSION: u32 = 1;

pub fn encode_dataset(d: &Dataset) -> Result<Vec<u8>, DataError> {
    let mut out = Vec::with_capacity(40 + d.provenance.len() + d.features().as_slice().len() * 8 + d.len() * 4);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    out.push(d.role.code());
    put_u32(&mut out, to_u32(d.class_count(), "class count").map_err(DataError::Invalid)?);
    put_u64(&mut out, d.len() as u64);
    put_u64(&mut out, d.width() as u64);
    put_u32(
        &mut out,
        to_u32(d.provenance.len(), "provenance length").map_err(DataError::Invalid)?,
    );
    out.extend_from_slice(d.provenance.as_bytes());
    put_f64s(&mut out, d.features().as_slice());
    for &l in d.labels() {
        put_u32(&mut out, l as u32);
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    Ok(out)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset, DataError> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(DataError::Format(format!("bad dataset magic {magic:?}")));
    }
    let version = r.u32_le()?;
    if version != VERSION {
        return Err(DataError::Format(format!(
            "unsupported dataset version {version} (expected {VERSION})"
        )));
    }
    r.ensure(1, 4)?;
    let body_len = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[body_len..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&bytes[..body_len]);
    if stored != computed {
        return Err(DataError::Checksum { stored, computed });
    }
    let mut r = Reader::new(&bytes[..body_len]);
    r.take(8)?;
    let role = Role::from_code(r.u8()?).ok_or_else(|| DataError::Format("unknown dataset role".into()))?;
    let class_count = r.u32_le()? as usize;
    let rows = usize::try_from(r.u64_le()?).map_err(|_| DataError::Format("row count too large".into()))?;
    let cols = usize::try_from(r.u64_le()?).map_err(|_| DataError::Format("column count too large".into()))?;
    let prov_len = r.u32_le()? as usize;
    let provenance = std::str::from_utf8(r.take(prov_len)?)
        .map_err(|_| DataError::Format("provenance is not UTF-8".into()))?
        .to_string();
    let cells = rows
        .checked_mul(cols)
        .ok_or_else(|| DataError::Format("dataset size overflows".into()))?;
    r.ensure(cells, 8)?;
    let features: Vec<f64> = (0..cells).map(|_| r.f64_le()).collect::<Result<_, _>>()?;
    if features.iter().any(|v| !v.is_finite()) {
        return Err(DataError::Format("non-finite feature value".into()));
    }
    r.ensure(rows, 4)?;
    let labels: Vec<usize> = (0..rows)
        .map(|_| r.u32_le().map(|l| l as usize))
        .collect::<Result<_, _>>()?;
    if r.remaining() != 0 {
        return Err(DataError::Format(format!(
            "{} trailing bytes before the checksum",
            r.remaining()
        )));
    }
    let features = Matrix::from_vec(rows, cols, features).expect("length checked");
    Dataset::new(features, labels, class_count, role, provenance)
}

pub fn write_dataset(path: &Path, d: &Dataset) -> Result<(), DataError> {
    let bytes = encode_dataset(d)?;
    std::fs::write(path, bytes).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_dataset(path: &Path) -> Result<Dataset, DataError> {
    decode_dataset(&read_file(path)?).map_err(|e| e.in_file(path))
}
