//! Singular values by Householder bidiagonalization followed by implicitly
//! shifted QR sweeps on the bidiagonal (Golub–Kahan–Reinsch). Only values are
//! computed; no singular vectors are accumulated.

use super::{LinalgError, Matrix};

const MAX_SWEEPS_PER_VALUE: usize = 75;

/// Singular values of `m` in non-increasing order; length `min(rows, cols)`.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>, LinalgError> {
    m.ensure_finite()?;
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(Vec::new());
    }
    // The sweep below assumes rows >= cols.
    let a = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.transpose()
    };
    let (s, _) = bidiagonal_values(a)?;
    Ok(s)
}

fn bidiagonal_values(mut a: Matrix) -> Result<(Vec<f64>, usize), LinalgError> {
    let rows = a.rows();
    let cols = a.cols();
    let nct = (rows - 1).min(cols);
    let nrt = cols.saturating_sub(2).min(rows);
    let mut s = vec![0.0; (rows + 1).min(cols)];
    let mut e = vec![0.0; cols];
    let mut work = vec![0.0; rows];
    let mut col_coeff = vec![0.0; cols];

    for k in 0..nct.max(nrt) {
        if k < nct {
            // Column reflector; s[k] receives the k-th diagonal.
            let mut norm = 0.0f64;
            for i in k..rows {
                norm = norm.hypot(a[(i, k)]);
            }
            if norm != 0.0 {
                if a[(k, k)] < 0.0 {
                    norm = -norm;
                }
                for i in k..rows {
                    a[(i, k)] /= norm;
                }
                a[(k, k)] += 1.0;
            }
            s[k] = -norm;
        }
        if k < nct && s[k] != 0.0 && k + 1 < cols {
            let coeff = &mut col_coeff[k + 1..cols];
            coeff.iter_mut().for_each(|c| *c = 0.0);
            for i in k..rows {
                let row = a.row(i);
                let aik = row[k];
                for (c, v) in coeff.iter_mut().zip(&row[k + 1..cols]) {
                    *c += aik * v;
                }
            }
            let pivot = a[(k, k)];
            coeff.iter_mut().for_each(|c| *c = -*c / pivot);
            for i in k..rows {
                let row = a.row_mut(i);
                let aik = row[k];
                for (v, c) in row[k + 1..cols].iter_mut().zip(coeff.iter()) {
                    *v += c * aik;
                }
            }
        }
        for j in k + 1..cols {
            e[j] = a[(k, j)];
        }
        if k < nrt {
            // Row reflector; e[k] receives the k-th superdiagonal.
            let mut norm = 0.0f64;
            for v in &e[k + 1..cols] {
                norm = norm.hypot(*v);
            }
            if norm != 0.0 {
                if e[k + 1] < 0.0 {
                    norm = -norm;
                }
                for v in &mut e[k + 1..cols] {
                    *v /= norm;
                }
                e[k + 1] += 1.0;
            }
            e[k] = -norm;
            if k + 1 < rows && e[k] != 0.0 {
                work[k + 1..rows].iter_mut().for_each(|w| *w = 0.0);
                for i in k + 1..rows {
                    let row = a.row(i);
                    let mut acc = 0.0;
                    for j in k + 1..cols {
                        acc += e[j] * row[j];
                    }
                    work[i] = acc;
                }
                for i in k + 1..rows {
                    let wi = work[i];
                    let row = a.row_mut(i);
                    for j in k + 1..cols {
                        row[j] += (-e[j] / e[k + 1]) * wi;
                    }
                }
            }
        }
    }

    let mut p = cols.min(rows + 1);
    if nct < cols {
        s[nct] = a[(nct, nct)];
    }
    if rows < p {
        s[p - 1] = 0.0;
    }
    if nrt + 1 < p {
        e[nrt] = a[(nrt, p - 1)];
    }
    e[p - 1] = 0.0;

    let last = p - 1;
    let eps = f64::EPSILON;
    let tiny = 2f64.powi(-966);
    let budget = MAX_SWEEPS_PER_VALUE * p.max(1);
    let mut sweeps = 0usize;

    while p > 0 {
        // Locate the active unreduced block [k+1, p-1].
        let mut k: isize = p as isize - 2;
        while k >= 0 {
            let ku = k as usize;
            if e[ku].abs() <= tiny + eps * (s[ku].abs() + s[ku + 1].abs()) {
                e[ku] = 0.0;
                break;
            }
            k -= 1;
        }
        let kind;
        if k == p as isize - 2 {
            kind = Step::Converged;
        } else {
            let mut ks: isize = p as isize - 1;
            while ks > k {
                let ksu = ks as usize;
                let t = (if ksu != p { e[ksu].abs() } else { 0.0 })
                    + (if ks != k + 1 { e[ksu - 1].abs() } else { 0.0 });
                if s[ksu].abs() <= tiny + eps * t {
                    s[ksu] = 0.0;
                    break;
                }
                ks -= 1;
            }
            if ks == k {
                kind = Step::QrSweep;
            } else if ks == p as isize - 1 {
                kind = Step::DeflateLast;
            } else {
                kind = Step::Split;
                k = ks;
            }
        }
        let k = (k + 1) as usize;

        match kind {
            Step::DeflateLast => {
                let mut f = e[p - 2];
                e[p - 2] = 0.0;
                let mut j = p - 2;
                loop {
                    let t = s[j].hypot(f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    if j != k {
                        f = -sn * e[j - 1];
                        e[j - 1] *= cs;
                    }
                    if j == k {
                        break;
                    }
                    j -= 1;
                }
            }
            Step::Split => {
                let mut f = e[k - 1];
                e[k - 1] = 0.0;
                for j in k..p {
                    let t = s[j].hypot(f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    f = -sn * e[j];
                    e[j] *= cs;
                }
            }
            Step::QrSweep => {
                sweeps += 1;
                if sweeps > budget {
                    return Err(LinalgError::NoConvergence { sweeps });
                }
                let scale = s[p - 1]
                    .abs()
                    .max(s[p - 2].abs())
                    .max(e[p - 2].abs())
                    .max(s[k].abs())
                    .max(e[k].abs());
                let sp = s[p - 1] / scale;
                let spm1 = s[p - 2] / scale;
                let epm1 = e[p - 2] / scale;
                let sk = s[k] / scale;
                let ek = e[k] / scale;
                let b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
                let c = (sp * epm1) * (sp * epm1);
                let mut shift = 0.0;
                if b != 0.0 || c != 0.0 {
                    shift = (b * b + c).sqrt();
                    if b < 0.0 {
                        shift = -shift;
                    }
                    shift = c / (b + shift);
                }
                let mut f = (sk + sp) * (sk - sp) + shift;
                let mut g = sk * ek;
                for j in k..p - 1 {
                    let mut t = f.hypot(g);
                    let mut cs = f / t;
                    let mut sn = g / t;
                    if j != k {
                        e[j - 1] = t;
                    }
                    f = cs * s[j] + sn * e[j];
                    e[j] = cs * e[j] - sn * s[j];
                    g = sn * s[j + 1];
                    s[j + 1] *= cs;

                    t = f.hypot(g);
                    cs = f / t;
                    sn = g / t;
                    s[j] = t;
                    f = cs * e[j] + sn * s[j + 1];
                    s[j + 1] = -sn * e[j] + cs * s[j + 1];
                    g = sn * e[j + 1];
                    e[j + 1] *= cs;
                }
                e[p - 2] = f;
            }
            Step::Converged => {
                let mut k = k;
                if s[k] <= 0.0 {
                    s[k] = if s[k] < 0.0 { -s[k] } else { 0.0 };
                }
                while k < last && s[k] < s[k + 1] {
                    s.swap(k, k + 1);
                    k += 1;
                }
                p -= 1;
            }
        }
    }
    s.truncate(cols.min(rows));
    Ok((s, sweeps))
}

#[derive(Clone, Copy, Debug)]
enum Step {
    DeflateLast,
    Split,
    QrSweep,
    Converged,
}
