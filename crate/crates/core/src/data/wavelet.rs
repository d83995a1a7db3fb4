//! Haar wavelet features for 28x28 digit images.
//!
//! An image is zero-padded to 32x32 (the original occupies the top-left
//! corner) and transformed with the full-depth orthonormal 2-D Haar
//! transform. Each level transforms the rows and then the columns of the
//! current top-left block, writing averages `(a + b)/sqrt(2)` to the first half
//! and differences `(a - b)/sqrt(2)` to the second half (Mallat layout). The
//! coefficient vector is the final 32x32 array flattened row-major, so index 0
//! is the scaling coefficient.

use serde::{Deserialize, Serialize};

use super::idx::Mnist;
use super::{sha256_hex, DataError, Dataset, Role};
use crate::linalg::{leading_pivots, Matrix};

pub const IMAGE_SIDE: usize = 28;
pub const PADDED_SIDE: usize = 32;
pub const COEFFICIENTS: usize = PADDED_SIDE * PADDED_SIDE;

/// The wavelet coefficients kept as features.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletBasisSelection {
    /// Coefficient indices in pivot order.
    pub selected_indices: Vec<usize>,
    /// SHA-256 of the coefficient matrix the selection was computed from.
    pub source_fingerprint: String,
}

impl WaveletBasisSelection {
    pub fn validate(&self) -> Result<(), DataError> {
        let mut seen = vec![false; COEFFICIENTS];
        for &i in &self.selected_indices {
            if i >= COEFFICIENTS || std::mem::replace(&mut seen[i], true) {
                return Err(DataError::Invalid(format!(
                    "wavelet index {i} is out of range or repeated"
                )));
            }
        }
        Ok(())
    }
}

fn haar_step(v: &mut [f64], scratch: &mut [f64]) {
    let half = v.len() / 2;
    for k in 0..half {
        let (a, b) = (v[2 * k], v[2 * k + 1]);
        scratch[k] = (a + b) * std::f64::consts::FRAC_1_SQRT_2;
        scratch[half + k] = (a - b) * std::f64::consts::FRAC_1_SQRT_2;
    }
    v.copy_from_slice(&scratch[..v.len()]);
}

/// In-place full-depth transform of an `n x n` row-major array, `n` a power of two.
pub fn haar_2d(data: &mut [f64], n: usize) {
    assert!(n.is_power_of_two() && data.len() == n * n, "haar_2d needs an n x n power-of-two array");
    let mut line = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut size = n;
    while size > 1 {
        for r in 0..size {
            haar_step(&mut data[r * n..r * n + size], &mut scratch);
        }
        for c in 0..size {
            for r in 0..size {
                line[r] = data[r * n + c];
            }
            haar_step(&mut line[..size], &mut scratch);
            for r in 0..size {
                data[r * n + c] = line[r];
            }
        }
        size /= 2;
    }
}

/// Zero-pads a 28x28 image (row-major) to 32x32.
pub fn pad_image(image: &[f64]) -> Result<Vec<f64>, DataError> {
    if image.len() != IMAGE_SIDE * IMAGE_SIDE {
        return Err(DataError::Invalid(format!(
            "expected {} pixels, got {}",
            IMAGE_SIDE * IMAGE_SIDE,
            image.len()
        )));
    }
    if image.iter().any(|v| !v.is_finite()) {
        return Err(DataError::Invalid("image contains non-finite pixels".into()));
    }
    let mut padded = vec![0.0; COEFFICIENTS];
    for r in 0..IMAGE_SIDE {
        padded[r * PADDED_SIDE..r * PADDED_SIDE + IMAGE_SIDE]
            .copy_from_slice(&image[r * IMAGE_SIDE..(r + 1) * IMAGE_SIDE]);
    }
    Ok(padded)
}

/// The 1024 Haar coefficients of a 28x28 image.
pub fn haar_transform(image: &[f64]) -> Result<Vec<f64>, DataError> {
    let mut padded = pad_image(image)?;
    haar_2d(&mut padded, PADDED_SIDE);
    Ok(padded)
}

/// One row of coefficients per image.
pub fn coefficient_matrix(mnist: &Mnist) -> Matrix {
    let mut out = Matrix::zeros(mnist.len(), COEFFICIENTS);
    for i in 0..mnist.len() {
        let coeffs = haar_transform(&mnist.images.image(i)).expect("IDX images are 28x28 and finite");
        out.row_mut(i).copy_from_slice(&coeffs);
    }
    out
}

/// SHA-256 over the shape and little-endian values of `m`.
pub fn matrix_fingerprint(m: &Matrix) -> String {
    let mut bytes = Vec::with_capacity(16 + m.as_slice().len() * 8);
    bytes.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    sha256_hex(&bytes)
}

/// The first `k` pivots of a column-pivoted QR of `coeffs` (samples x coefficients).
pub fn select_wavelets(coeffs: &Matrix, k: usize) -> Result<WaveletBasisSelection, DataError> {
    if k > coeffs.cols() {
        return Err(DataError::Invalid(format!(
            "cannot select {k} of {} coefficients",
            coeffs.cols()
        )));
    }
    if coeffs.rows() < k {
        return Err(DataError::Invalid(format!(
            "{} samples are too few to select {k} coefficients",
            coeffs.rows()
        )));
    }
    Ok(WaveletBasisSelection {
        selected_indices: leading_pivots(coeffs, k)?,
        source_fingerprint: matrix_fingerprint(coeffs),
    })
}

/// Haar transform of one image restricted to the selected coefficients.
pub fn project_mnist(image: &[f64], selection: &WaveletBasisSelection) -> Result<Vec<f64>, DataError> {
    selection.validate()?;
    let coeffs = haar_transform(image)?;
    Ok(selection.selected_indices.iter().map(|&i| coeffs[i]).collect())
}

/// Labelled dataset of selected coefficients.
pub fn wavelet_dataset(
    coeffs: &Matrix,
    labels: &[usize],
    selection: &WaveletBasisSelection,
    role: Role,
    provenance: &str,
) -> Result<Dataset, DataError> {
    selection.validate()?;
    if coeffs.cols() != COEFFICIENTS {
        return Err(DataError::Invalid(format!(
            "coefficient matrix has {} columns",
            coeffs.cols()
        )));
    }
    Dataset::new(
        coeffs.select_columns(&selection.selected_indices),
        labels.to_vec(),
        10,
        role,
        provenance,
    )
}
