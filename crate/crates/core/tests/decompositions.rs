mod common;

use common::{jacobi_singular_values, random_matrix, rng, with_singular_values};
use condnet::linalg::{
    condition_number, count_small_singular_values, leading_pivots, pivoted_qr, singular_values,
};
use condnet::Matrix;
use proptest::prelude::*;
use rand::Rng;

fn reconstruction_error(m: &Matrix) -> (f64, Vec<f64>) {
    let qr = pivoted_qr(m, None).unwrap();
    let mp = m.select_columns(&qr.pivot);
    let err = mp.sub(&qr.q.matmul(&qr.r).unwrap()).unwrap().frobenius_norm();
    (err, qr.diagonal_magnitudes())
}

#[test]
fn qr_reconstructs_random_matrices() {
    let mut r = rng(1);
    for _ in 0..200 {
        let rows = r.gen_range(1..=30);
        let cols = r.gen_range(1..=30);
        let m = random_matrix(&mut r, rows, cols);
        let (err, diag) = reconstruction_error(&m);
        assert!(err <= 1e-10 * m.frobenius_norm(), "{rows}x{cols}: {err}");
        assert!(diag.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{diag:?}");
    }
}

#[test]
fn q_has_orthonormal_columns() {
    let mut r = rng(2);
    let m = random_matrix(&mut r, 12, 7);
    let qr = pivoted_qr(&m, None).unwrap();
    let qtq = qr.q.transpose().matmul(&qr.q).unwrap();
    assert!(qtq.sub(&Matrix::identity(7)).unwrap().frobenius_norm() < 1e-13);
}

#[test]
fn singular_values_match_jacobi_oracle() {
    let mut r = rng(3);
    for _ in 0..200 {
        let rows = r.gen_range(1..=25);
        let cols = r.gen_range(1..=25);
        let m = random_matrix(&mut r, rows, cols);
        let s = singular_values(&m).unwrap();
        let o = jacobi_singular_values(&m);
        assert_eq!(s.len(), o.len());
        for (a, b) in s.iter().zip(&o) {
            assert!((a - b).abs() <= 1e-10 * b, "{rows}x{cols}: {a} vs {b}");
        }
    }
}

#[test]
fn planted_spectrum_is_recovered() {
    let mut r = rng(4);
    let planted = [3.0, 1.0, 0.5, 1e-3, 1e-6];
    let m = with_singular_values(&mut r, 9, 6, &planted);
    let s = singular_values(&m).unwrap();
    for (a, b) in s.iter().zip(planted) {
        assert!((a - b).abs() <= 1e-12 * 3.0, "{s:?}");
    }
    // the sixth value is zero up to rounding
    assert!(s[5] < 1e-14);
}

#[test]
fn small_value_count_on_constructed_matrix() {
    let mut r = rng(5);
    let m = with_singular_values(&mut r, 6, 3, &[1.0, 0.05, 0.01]);
    // sigma_1 / 25 = 0.04, so only 0.01 is small
    assert_eq!(count_small_singular_values(&m, 25.0).unwrap(), 1);
    assert_eq!(count_small_singular_values(&m, 10.0).unwrap(), 2);
    let kappa = condition_number(&m).unwrap();
    assert!((kappa - 100.0).abs() < 1e-9);
}

#[test]
fn rank_deficient_condition_is_infinite() {
    let m = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 0.0]]).unwrap();
    assert_eq!(condition_number(&m).unwrap(), f64::INFINITY);
    assert_eq!(condition_number(&Matrix::zeros(3, 2)).unwrap(), f64::INFINITY);
}

#[test]
fn leading_pivots_agree_with_full_factorization() {
    let mut r = rng(6);
    let m = random_matrix(&mut r, 40, 15);
    let full = pivoted_qr(&m, None).unwrap();
    assert_eq!(leading_pivots(&m, 10).unwrap(), full.pivot[..10].to_vec());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transposition_preserves_singular_values(seed in any::<u64>(), rows in 1usize..12, cols in 1usize..12) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, rows, cols);
        let a = singular_values(&m).unwrap();
        let b = singular_values(&m.transpose()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * a[0].max(1e-300));
        }
    }

    #[test]
    fn scaling_leaves_condition_unchanged(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, 6, 4);
        let scaled = Matrix::from_fn(6, 4, |i, j| m[(i, j)] * scale);
        let a = condition_number(&m).unwrap();
        let b = condition_number(&scaled).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn pivot_is_a_permutation(seed in any::<u64>(), rows in 1usize..10, cols in 1usize..10) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, rows, cols);
        let mut p = pivoted_qr(&m, None).unwrap().pivot;
        p.sort();
        prop_assert_eq!(p, (0..cols).collect::<Vec<_>>());
    }
}
