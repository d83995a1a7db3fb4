//! Thin safe wrapper over `matrixmultiply::dgemm` for row-major buffers.

use super::Matrix;

/// Borrowed row-major operand, optionally read transposed.
#[derive(Clone, Copy)]
pub struct View<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    transposed: bool,
}

impl<'a> View<'a> {
    pub fn normal(m: &'a Matrix) -> Self {
        Self::raw(m.as_slice(), m.rows(), m.cols(), false)
    }

    pub fn transposed(m: &'a Matrix) -> Self {
        Self::raw(m.as_slice(), m.rows(), m.cols(), true)
    }

    /// `data` holds a `rows x cols` row-major block.
    pub fn raw(data: &'a [f64], rows: usize, cols: usize, transposed: bool) -> Self {
        assert!(data.len() >= rows * cols, "buffer too small for view");
        Self {
            data,
            rows,
            cols,
            transposed,
        }
    }

    /// Logical (rows, cols) after the optional transpose.
    fn dims(&self) -> (usize, usize) {
        if self.transposed {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        }
    }

    fn strides(&self) -> (isize, isize) {
        if self.transposed {
            (1, self.cols as isize)
        } else {
            (self.cols as isize, 1)
        }
    }
}

/// `c <- alpha * a * b + beta * c`.
pub fn gemm(alpha: f64, a: View<'_>, b: View<'_>, beta: f64, c: &mut Matrix) {
    let (rows, cols) = c.shape();
    gemm_raw(alpha, a, b, beta, c.as_mut_slice(), rows, cols);
}

/// Same as [`gemm`] with the output given as a raw `rows x cols` row-major buffer.
pub fn gemm_raw(
    alpha: f64,
    a: View<'_>,
    b: View<'_>,
    beta: f64,
    c: &mut [f64],
    rows: usize,
    cols: usize,
) {
    let (m, k) = a.dims();
    let (k2, n) = b.dims();
    assert_eq!(k, k2, "inner dimensions differ");
    assert_eq!((m, n), (rows, cols), "output shape mismatch");
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in &mut c[..m * n] {
            *v *= beta;
        }
        return;
    }
    let (rsa, csa) = a.strides();
    let (rsb, csb) = b.strides();
    // SAFETY: the asserts above pin every operand's extent: `a` spans m x k,
    // `b` spans k x n and `c` spans m x n with the strides computed from the
    // same row-major layouts, so every access dgemm makes stays in bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Matrix, b: &Matrix) -> Matrix {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
        })
    }

    #[test]
    fn matches_naive_product_with_transposes() {
        let a = Matrix::from_fn(4, 3, |i, j| (i as f64) - 0.5 * j as f64);
        let b = Matrix::from_fn(3, 5, |i, j| (i * j) as f64 + 1.0);
        let expected = naive(&a, &b);

        let mut c = Matrix::zeros(4, 5);
        gemm(1.0, View::normal(&a), View::normal(&b), 0.0, &mut c);
        assert_eq!(c, expected);

        let at = a.transpose();
        let bt = b.transpose();
        let mut c2 = Matrix::zeros(4, 5);
        gemm(1.0, View::transposed(&at), View::transposed(&bt), 0.0, &mut c2);
        assert_eq!(c2, expected);
    }

    #[test]
    fn accumulates_with_beta() {
        let a = Matrix::identity(2);
        let b = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let mut c = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        gemm(2.0, View::normal(&a), View::normal(&b), 1.0, &mut c);
        assert_eq!(c.as_slice(), &[3.0, 5.0, 7.0, 9.0]);
    }
}
