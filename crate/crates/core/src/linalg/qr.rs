//! Householder QR with greedy column pivoting (Businger–Golub).
//!
//! At every step the remaining column with the largest 2-norm is moved to the
//! front. Column norms are downdated after each reflection and recomputed from
//! scratch whenever the downdate has lost too many digits to be trusted.

use serde::{Deserialize, Serialize};

use super::{LinalgError, Matrix};

/// Output of [`pivoted_qr`]: `M[:, pivot[..computed_cols]] = Q * R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrResult {
    /// `rows x h` with orthonormal columns, `h` = number of reflections applied.
    pub q: Matrix,
    /// `h x computed_cols`, upper triangular (trapezoidal when wide).
    pub r: Matrix,
    /// Full column permutation; `pivot[k]` is the original index of the k-th pivoted column.
    pub pivot: Vec<usize>,
    /// Number of leading pivoted columns represented exactly by `q * r`.
    pub computed_cols: usize,
}

impl QrResult {
    /// `|r[i, i]|` for every reflection step.
    pub fn diagonal_magnitudes(&self) -> Vec<f64> {
        (0..self.r.rows().min(self.r.cols()))
            .map(|i| self.r[(i, i)].abs())
            .collect()
    }

    /// Whether the factorization stopped on a small diagonal entry.
    pub fn stopped_early(&self) -> bool {
        self.computed_cols < self.pivot.len()
    }
}

/// Column-pivoted QR of `m`.
///
/// With `stop_ratio = Some(r)` the factorization ends right after the first
/// step `k` whose diagonal satisfies `|r[k,k]| < r * |r[0,0]|`; that step is
/// still included in the result.
pub fn pivoted_qr(m: &Matrix, stop_ratio: Option<f64>) -> Result<QrResult, LinalgError> {
    m.ensure_finite()?;
    if let Some(ratio) = stop_ratio {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(LinalgError::InvalidParameter(format!(
                "stop ratio must lie in (0, 1), got {ratio}"
            )));
        }
    }
    let mut work = Factorization::new(m.clone());
    let limit = m.rows().min(m.cols());
    let stopped = work.run(limit, stop_ratio);

    let h = work.taus.len();
    let computed_cols = if stopped { h } else { m.cols() };
    let r = Matrix::from_fn(h, computed_cols, |i, j| {
        if j >= i {
            work.a[(i, j)]
        } else {
            0.0
        }
    });
    let q = work.form_q();
    Ok(QrResult {
        q,
        r,
        pivot: work.perm,
        computed_cols,
    })
}

/// The first `k` pivot columns chosen by column-pivoted QR, without forming `Q`.
///
/// This is the selection rule used to pick the most linearly independent
/// columns of a tall data matrix.
pub fn leading_pivots(m: &Matrix, k: usize) -> Result<Vec<usize>, LinalgError> {
    m.ensure_finite()?;
    if k > m.cols() {
        return Err(LinalgError::InvalidParameter(format!(
            "cannot select {k} columns from a matrix with {}",
            m.cols()
        )));
    }
    let steps = k.min(m.rows());
    let mut work = Factorization::new(m.clone());
    work.run(steps, None);
    // Past the row count every remaining column is already dependent; keep
    // the current norm-ordered choice for the rest.
    Ok(work.perm[..k].to_vec())
}

struct Factorization {
    a: Matrix,
    perm: Vec<usize>,
    norms: Vec<f64>,
    reference_norms: Vec<f64>,
    taus: Vec<f64>,
}

impl Factorization {
    fn new(a: Matrix) -> Self {
        let cols = a.cols();
        let mut norms = vec![0.0; cols];
        for i in 0..a.rows() {
            for (n, v) in norms.iter_mut().zip(a.row(i)) {
                *n += v * v;
            }
        }
        norms.iter_mut().for_each(|n| *n = n.sqrt());
        Self {
            perm: (0..cols).collect(),
            reference_norms: norms.clone(),
            norms,
            a,
            taus: Vec::new(),
        }
    }

    fn swap_columns(&mut self, x: usize, y: usize) {
        if x == y {
            return;
        }
        for i in 0..self.a.rows() {
            self.a.row_mut(i).swap(x, y);
        }
        self.perm.swap(x, y);
        self.norms.swap(x, y);
        self.reference_norms.swap(x, y);
    }

    /// Runs up to `steps` reflections; returns true when stopped by `stop_ratio`.
    fn run(&mut self, steps: usize, stop_ratio: Option<f64>) -> bool {
        let rows = self.a.rows();
        let cols = self.a.cols();
        let rescan_threshold = f64::EPSILON.sqrt();
        let mut leading = 0.0f64;
        let mut dots = vec![0.0; cols];

        for k in 0..steps {
            let best = (k..cols)
                .max_by(|&x, &y| self.norms[x].total_cmp(&self.norms[y]).then(y.cmp(&x)))
                .unwrap_or(k);
            self.swap_columns(k, best);

            // Householder vector for a[k.., k]; v[0] = 1 is implicit.
            let alpha = self.a[(k, k)];
            let mut tail = 0.0f64;
            for i in k + 1..rows {
                tail = tail.hypot(self.a[(i, k)]);
            }
            let tau;
            let diag;
            if tail == 0.0 {
                tau = 0.0;
                diag = alpha;
            } else {
                let beta = -alpha.signum() * alpha.hypot(tail);
                let beta = if alpha == 0.0 { -beta.abs() } else { beta };
                tau = (beta - alpha) / beta;
                let scale = 1.0 / (alpha - beta);
                for i in k + 1..rows {
                    self.a[(i, k)] *= scale;
                }
                diag = beta;
            }
            self.a[(k, k)] = diag;
            self.taus.push(tau);

            if k == 0 {
                leading = diag.abs();
            }
            if let Some(ratio) = stop_ratio {
                if diag.abs() < ratio * leading {
                    return true;
                }
            }

            if tau != 0.0 && k + 1 < cols {
                // w = v^T A[k.., k+1..], then A -= tau * v * w
                let w = &mut dots[k + 1..cols];
                w.iter_mut().for_each(|x| *x = 0.0);
                for i in k..rows {
                    let row = self.a.row(i);
                    let vi = if i == k { 1.0 } else { row[k] };
                    for (x, &aij) in w.iter_mut().zip(&row[k + 1..cols]) {
                        *x += vi * aij;
                    }
                }
                for i in k..rows {
                    let row = self.a.row_mut(i);
                    let vi = if i == k { 1.0 } else { row[k] };
                    let f = tau * vi;
                    for (aij, &x) in row[k + 1..cols].iter_mut().zip(w.iter()) {
                        *aij -= f * x;
                    }
                }
            }

            for j in k + 1..cols {
                if self.norms[j] == 0.0 {
                    continue;
                }
                let ratio = self.a[(k, j)].abs() / self.norms[j];
                let shrink = (1.0 - ratio * ratio).max(0.0);
                let drift = shrink * (self.norms[j] / self.reference_norms[j]).powi(2);
                if drift <= rescan_threshold {
                    let mut fresh = 0.0f64;
                    for i in k + 1..rows {
                        fresh = fresh.hypot(self.a[(i, j)]);
                    }
                    self.norms[j] = fresh;
                    self.reference_norms[j] = fresh;
                } else {
                    self.norms[j] *= shrink.sqrt();
                }
            }
        }
        false
    }

    /// Accumulates the reflectors into an explicit `rows x h` Q.
    fn form_q(&self) -> Matrix {
        let rows = self.a.rows();
        let h = self.taus.len();
        let mut q = Matrix::from_fn(rows, h, |i, j| if i == j { 1.0 } else { 0.0 });
        let mut w = vec![0.0; h];
        for k in (0..h).rev() {
            let tau = self.taus[k];
            if tau == 0.0 {
                continue;
            }
            let w = &mut w[k..h];
            w.iter_mut().for_each(|x| *x = 0.0);
            for i in k..rows {
                let vi = if i == k { 1.0 } else { self.a[(i, k)] };
                for (x, &qij) in w.iter_mut().zip(&q.row(i)[k..h]) {
                    *x += vi * qij;
                }
            }
            for i in k..rows {
                let vi = if i == k { 1.0 } else { self.a[(i, k)] };
                let f = tau * vi;
                for (qij, &x) in q.row_mut(i)[k..h].iter_mut().zip(w.iter()) {
                    *qij -= f * x;
                }
            }
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pivots_are_a_permutation() {
        let qr = pivoted_qr(&Matrix::identity(3), None).unwrap();
        let mut p = qr.pivot.clone();
        p.sort();
        assert_eq!(p, vec![0, 1, 2]);
        for d in qr.diagonal_magnitudes() {
            assert!((d - 1.0).abs() < 1e-15);
        }
        assert_eq!(qr.computed_cols, 3);
    }

    #[test]
    fn scaled_duplicate_column_is_pivoted_first() {
        // columns c, 2c, e
        let m = Matrix::from_rows(&[[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let qr = pivoted_qr(&m, None).unwrap();
        assert_eq!(qr.pivot[0], 1);
        let d = qr.diagonal_magnitudes();
        assert!(d[2] < 1e-14, "{d:?}");
    }

    #[test]
    fn early_stop_keeps_the_small_step() {
        let m = Matrix::from_diag(4, 4, &[1.0, 0.5, 1e-6, 1e-7]);
        let qr = pivoted_qr(&m, Some(1e-3)).unwrap();
        assert!(qr.stopped_early());
        assert_eq!(qr.computed_cols, 3);
        assert_eq!(&qr.pivot[..3], &[0, 1, 2]);
        assert_eq!(qr.r.shape(), (3, 3));
        assert_eq!(qr.q.shape(), (4, 3));
    }

    #[test]
    fn wide_full_decomposition_covers_all_columns() {
        let m = Matrix::from_fn(2, 4, |i, j| (i + 2 * j) as f64 + 1.0);
        let qr = pivoted_qr(&m, None).unwrap();
        assert_eq!(qr.computed_cols, 4);
        assert_eq!(qr.r.shape(), (2, 4));
        let rebuilt = qr.q.matmul(&qr.r).unwrap();
        let permuted = m.select_columns(&qr.pivot);
        assert!(rebuilt.sub(&permuted).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_stop_ratio() {
        assert!(pivoted_qr(&Matrix::identity(2), Some(1.5)).is_err());
        assert!(pivoted_qr(&Matrix::identity(2), Some(0.0)).is_err());
    }

    #[test]
    fn leading_pivots_prefers_large_columns() {
        let m = Matrix::from_diag(3, 3, &[0.1, 5.0, 1.0]);
        assert_eq!(leading_pivots(&m, 2).unwrap(), vec![1, 2]);
        assert!(leading_pivots(&m, 4).is_err());
    }
}
