//! Model file format.
//!
//! ```text
//! "CSHP"                      magic
//! u32  version (= 1)
//! u32  input width
//! u32  output width
//! u32  hidden layer count H
//! u32  x H hidden widths
//! u8   activation (0 tunable-erf, 1 sigmoid, 2 relu)
//! u64  init seed
//! per layer (H + 1 of them):
//!   u32 rows, u32 cols
//!   f64 x rows*cols  weights, row-major
//!   f64 x cols       bias
//!   u8  gain flag, then f64 gain when the flag is 1
//! u32  CRC32 (IEEE) of every preceding byte
//! ```
//!
//! Every integer and float is little-endian.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ActivationKind, FeedForwardNet, Layer, NetworkSpec};
use crate::bytes::{put_f64s, put_u32, put_u64, to_u32, Reader, Truncated};
use crate::linalg::Matrix;

pub const MAGIC: &[u8; 4] = b"CSHP";
pub const FORMAT_VERSION: u32 = 1;

/// Refuses to decode networks beyond this many layers.
const MAX_LAYERS: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("bad magic header {0:?}")]
    BadMagic(Vec<u8>),
    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Truncated(#[from] Truncated),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("non-finite parameter in layer {layer}")]
    NonFinite { layer: usize },
    #[error("{0} trailing bytes after the checksum")]
    TrailingBytes(usize),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(String),
}

pub(super) fn encode(net: &FeedForwardNet) -> Result<Vec<u8>, FormatError> {
    let spec = net.spec();
    let mut out = Vec::with_capacity(32 + spec.parameter_count() * 8);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    put_u32(&mut out, to_u32(spec.input_width, "input width").map_err(FormatError::Invalid)?);
    put_u32(&mut out, to_u32(spec.output_width, "output width").map_err(FormatError::Invalid)?);
    put_u32(
        &mut out,
        to_u32(spec.hidden_widths.len(), "layer count").map_err(FormatError::Invalid)?,
    );
    for &w in &spec.hidden_widths {
        put_u32(&mut out, to_u32(w, "width").map_err(FormatError::Invalid)?);
    }
    out.push(spec.activation.code());
    put_u64(&mut out, spec.init_seed);
    for layer in net.layers() {
        put_u32(&mut out, layer.inputs() as u32);
        put_u32(&mut out, layer.neurons() as u32);
        put_f64s(&mut out, layer.weights.as_slice());
        put_f64s(&mut out, &layer.bias);
        match layer.gain {
            Some(g) => {
                out.push(1);
                put_f64s(&mut out, &[g]);
            }
            None => out.push(0),
        }
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    Ok(out)
}

pub(super) fn decode(bytes: &[u8]) -> Result<FeedForwardNet, FormatError> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic.to_vec()));
    }
    let version = r.u32_le()?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < 4 + 4 + 4 {
        return Err(Truncated {
            offset: bytes.len(),
            needed: 4,
            available: 0,
        }
        .into());
    }
    let body_len = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[body_len..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&bytes[..body_len]);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed });
    }
    let mut r = Reader::new(&bytes[..body_len]);
    r.take(8)?;

    let input_width = r.u32_le()? as usize;
    let output_width = r.u32_le()? as usize;
    let hidden_count = r.u32_le()? as usize;
    if hidden_count >= MAX_LAYERS {
        return Err(FormatError::Invalid(format!("{hidden_count} hidden layers")));
    }
    r.ensure(hidden_count, 4)?;
    let hidden_widths = (0..hidden_count)
        .map(|_| r.u32_le().map(|w| w as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let activation = ActivationKind::from_code(r.u8()?)
        .ok_or_else(|| FormatError::Invalid("unknown activation code".into()))?;
    let init_seed = r.u64_le()?;
    let spec = NetworkSpec {
        input_width,
        hidden_widths,
        output_width,
        activation,
        init_seed,
    };
    spec.validate().map_err(|e| FormatError::Invalid(e.to_string()))?;

    let widths = spec.widths();
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for (i, pair) in widths.windows(2).enumerate() {
        let rows = r.u32_le()? as usize;
        let cols = r.u32_le()? as usize;
        if (rows, cols) != (pair[0], pair[1]) {
            return Err(FormatError::Invalid(format!(
                "layer {} is {rows}x{cols}, spec says {}x{}",
                i + 1,
                pair[0],
                pair[1]
            )));
        }
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| FormatError::Invalid("layer size overflows".into()))?;
        r.ensure(count, 8)?;
        let weights = (0..count)
            .map(|_| r.f64_le())
            .collect::<Result<Vec<_>, _>>()?;
        r.ensure(cols, 8)?;
        let bias = (0..cols).map(|_| r.f64_le()).collect::<Result<Vec<_>, _>>()?;
        let gain = match r.u8()? {
            0 => None,
            1 => Some(r.f64_le()?),
            flag => return Err(FormatError::Invalid(format!("gain flag {flag}"))),
        };
        let finite = weights.iter().chain(&bias).chain(gain.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(FormatError::NonFinite { layer: i + 1 });
        }
        layers.push(Layer {
            weights: Matrix::from_vec(rows, cols, weights).expect("length checked"),
            bias,
            gain,
        });
    }
    if r.remaining() != 0 {
        return Err(FormatError::TrailingBytes(r.remaining()));
    }
    FeedForwardNet::from_layers(spec, layers).map_err(|e| FormatError::Invalid(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct JsonModel {
    format: String,
    version: u32,
    spec: NetworkSpec,
    layers: Vec<JsonLayer>,
}

#[derive(Serialize, Deserialize)]
struct JsonLayer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    gain: Option<f64>,
}

pub(super) fn to_json(net: &FeedForwardNet) -> Result<String, FormatError> {
    let model = JsonModel {
        format: String::from_utf8_lossy(MAGIC).into_owned(),
        version: FORMAT_VERSION,
        spec: net.spec().clone(),
        layers: net
            .layers()
            .iter()
            .map(|l| JsonLayer {
                weights: (0..l.inputs()).map(|i| l.weights.row(i).to_vec()).collect(),
                bias: l.bias.clone(),
                gain: l.gain,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&model).map_err(|e| FormatError::Json(e.to_string()))
}

pub(super) fn from_json(text: &str) -> Result<FeedForwardNet, FormatError> {
    let model: JsonModel =
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    if model.format.as_bytes() != MAGIC {
        return Err(FormatError::BadMagic(model.format.into_bytes()));
    }
    if model.version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion {
            found: model.version,
            expected: FORMAT_VERSION,
        });
    }
    let layers = model
        .layers
        .into_iter()
        .map(|l| {
            Ok(Layer {
                weights: Matrix::from_rows(&l.weights)
                    .map_err(|e| FormatError::Invalid(e.to_string()))?,
                bias: l.bias,
                gain: l.gain,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    FeedForwardNet::from_layers(model.spec, layers).map_err(|e| FormatError::Invalid(e.to_string()))
}
