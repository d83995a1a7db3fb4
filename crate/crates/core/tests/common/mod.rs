//! Reference implementations used only by tests. They are written for clarity
//! rather than speed and share no code with the library kernels.

#![allow(dead_code)]

use condnet::network::Layer;
use condnet::{FeedForwardNet, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Singular values by one-sided (Hestenes) Jacobi rotations, descending.
pub fn jacobi_singular_values(m: &Matrix) -> Vec<f64> {
    let a = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
    let (rows, cols) = a.shape();
    // column-major copy
    let mut c: Vec<Vec<f64>> = (0..cols).map(|j| a.column(j)).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = c[p].iter().map(|v| v * v).sum();
                let beta: f64 = c[q].iter().map(|v| v * v).sum();
                let gamma: f64 = c[p].iter().zip(&c[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= 1e-16 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let (x, y) = (c[p][i], c[q][i]);
                    c[p][i] = cs * x - sn * y;
                    c[q][i] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c.iter().map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `U * diag(s) * V^T` for random orthogonal `U` (rows x k) and `V` (cols x k).
pub fn with_singular_values(rng: &mut ChaCha8Rng, rows: usize, cols: usize, s: &[f64]) -> Matrix {
    let u = random_orthonormal(rng, rows, s.len());
    let v = random_orthonormal(rng, cols, s.len());
    Matrix::from_fn(rows, cols, |i, j| {
        (0..s.len()).map(|k| u[k][i] * s[k] * v[k][j]).sum()
    })
}

/// `k` orthonormal vectors of length `n` by modified Gram-Schmidt (twice).
pub fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

/// Logits by the textbook formula, one scalar at a time.
pub fn naive_logits(net: &FeedForwardNet, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    let last = net.layer_count() - 1;
    for (i, layer) in net.layers().iter().enumerate() {
        let mut next = Vec::with_capacity(layer.neurons());
        for j in 0..layer.neurons() {
            let mut z = layer.bias[j];
            for (k, yk) in y.iter().enumerate() {
                z += yk * layer.weights[(k, j)];
            }
            next.push(if i == last {
                z
            } else {
                net.activation().apply(layer.gain.unwrap_or(1.0) * z)
            });
        }
        y = next;
    }
    y
}

/// Copy of `net` in which the given neurons of hidden layer `layer` no
/// longer influence anything downstream.
pub fn zero_masked(net: &FeedForwardNet, layer: usize, victims: &[usize]) -> FeedForwardNet {
    let mut layers: Vec<Layer> = net.layers().to_vec();
    for &v in victims {
        for x in layers[layer + 1].weights.row_mut(v) {
            *x = 0.0;
        }
    }
    FeedForwardNet::from_layers(net.spec().clone(), layers).unwrap()
}

/// Inverse of the full-depth orthonormal Haar transform in Mallat layout.
pub fn inverse_haar_2d(coeffs: &[f64], n: usize) -> Vec<f64> {
    let mut d = coeffs.to_vec();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut size = 2;
    while size <= n {
        let half = size / 2;
        // columns first (undoing the last forward step), then rows
        for c in 0..size {
            let col: Vec<f64> = (0..size).map(|r| d[r * n + c]).collect();
            for k in 0..half {
                d[(2 * k) * n + c] = (col[k] + col[half + k]) * s;
                d[(2 * k + 1) * n + c] = (col[k] - col[half + k]) * s;
            }
        }
        for r in 0..size {
            let row: Vec<f64> = d[r * n..r * n + size].to_vec();
            for k in 0..half {
                d[r * n + 2 * k] = (row[k] + row[half + k]) * s;
                d[r * n + 2 * k + 1] = (row[k] - row[half + k]) * s;
            }
        }
        size *= 2;
    }
    d
}
