//! Dense matrix primitives: singular values, 2-norm condition numbers and
//! column-pivoted QR.

pub mod gemm;
mod matrix;
mod qr;
mod svd;

use thiserror::Error;

pub use matrix::Matrix;
pub use qr::{leading_pivots, pivoted_qr, QrResult};
pub use svd::singular_values;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular value iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Below this fraction of the largest singular value the smallest one is treated as zero.
const SINGULAR_FLOOR: f64 = 1e-300;

/// `sigma_max / sigma_min`, or `f64::INFINITY` for a (numerically) rank-deficient
/// or all-zero matrix.
pub fn condition_number(m: &Matrix) -> Result<f64, LinalgError> {
    let s = singular_values(m)?;
    Ok(condition_from_values(&s))
}

/// Condition number from an already computed, non-increasing list of singular values.
pub fn condition_from_values(s: &[f64]) -> f64 {
    let (Some(&first), Some(&last)) = (s.first(), s.last()) else {
        return f64::INFINITY;
    };
    if last == 0.0 || last < first * SINGULAR_FLOOR {
        f64::INFINITY
    } else {
        first / last
    }
}

/// Number of singular values strictly below `sigma_1 / tau`.
///
/// An all-zero matrix counts every value as small.
pub fn count_small_singular_values(m: &Matrix, tau: f64) -> Result<usize, LinalgError> {
    if !(tau > 1.0) || !tau.is_finite() {
        return Err(LinalgError::InvalidParameter(format!(
            "tau must be a finite value above 1, got {tau}"
        )));
    }
    let s = singular_values(m)?;
    Ok(count_small(&s, tau))
}

pub(crate) fn count_small(s: &[f64], tau: f64) -> usize {
    match s.first() {
        None => 0,
        Some(&lead) if lead == 0.0 => s.len(),
        Some(&lead) => {
            let threshold = lead / tau;
            s.iter().filter(|&&v| v < threshold).count()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_of_identity_and_diagonal() {
        assert_eq!(condition_number(&Matrix::identity(4)).unwrap(), 1.0);
        let c = condition_number(&Matrix::from_diag(3, 3, &[3.0, 1.0, 0.1])).unwrap();
        assert!((c - 30.0).abs() < 1e-12);
    }

    #[test]
    fn zero_column_is_infinitely_conditioned() {
        let m = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]).unwrap();
        let c = condition_number(&m).unwrap();
        assert!(c.is_infinite());
        assert!(c > 1e300);
        assert!(condition_number(&Matrix::zeros(2, 2)).unwrap().is_infinite());
    }

    #[test]
    fn small_value_counts() {
        let m = Matrix::from_diag(3, 3, &[10.0, 1.0, 0.1]);
        assert_eq!(count_small_singular_values(&m, 25.0).unwrap(), 1);
        assert_eq!(count_small_singular_values(&Matrix::identity(5), 1.0001).unwrap(), 0);
        assert_eq!(count_small_singular_values(&Matrix::zeros(3, 4), 10.0).unwrap(), 3);
    }

    #[test]
    fn tau_must_exceed_one() {
        let m = Matrix::identity(2);
        assert!(matches!(
            count_small_singular_values(&m, 1.0),
            Err(LinalgError::InvalidParameter(_))
        ));
        assert!(count_small_singular_values(&m, f64::NAN).is_err());
    }
}
