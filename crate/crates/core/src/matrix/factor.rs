use num_complex::Complex64;

use super::{ensure_square, fro, hermitian_asymmetry, identity, CMatrix, UpperUnipotent};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Householder QR with the diagonal of `R` made real and positive: `A = Q R`.
///
/// Fails with `DecompositionFailure` if `A` is numerically singular.
pub fn qr_positive(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = ensure_square(a)?;
    let mut r = a.clone();
    let mut q = identity(n);
    let scale = fro(a);
    if scale == 0.0 {
        return Err(Error::DecompositionFailure("zero matrix".into()));
    }

    for k in 0..n.saturating_sub(1) {
        let norm_x = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x <= 1e-14 * scale {
            return Err(Error::DecompositionFailure(format!("column {k} is numerically dependent")));
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm_x;
        let mut v: Vec<Complex64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let v_norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / v_norm2;
        // R <- H R on rows k..n
        for j in k..n {
            let s: Complex64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * r[(k + t, j)]).sum();
            let s = s * beta;
            for (t, vi) in v.iter().enumerate() {
                r[(k + t, j)] -= vi * s;
            }
        }
        // Q <- Q H on columns k..n
        for i in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(t, vi)| q[(i, k + t)] * vi).sum();
            let s = s * beta;
            for (t, vi) in v.iter().enumerate() {
                q[(i, k + t)] -= s * vi.conj();
            }
        }
        for i in (k + 1)..n {
            r[(i, k)] = ZERO;
        }
    }

    for k in 0..n {
        let d = r[(k, k)];
        let m = d.norm();
        if m <= 1e-14 * scale {
            return Err(Error::DecompositionFailure(format!("pivot {k} vanishes")));
        }
        let phase = d / m;
        for j in k..n {
            r[(k, j)] *= phase.conj();
        }
        for i in 0..n {
            q[(i, k)] *= phase;
        }
        r[(k, k)] = Complex64::new(m, 0.0);
    }
    Ok((q, r))
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn invert_upper(u: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(u)?;
    let mut inv = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in (0..=j).rev() {
            let rhs = if i == j { Complex64::new(1.0, 0.0) } else { ZERO };
            let acc: Complex64 = ((i + 1)..=j).map(|k| u[(i, k)] * inv[(k, j)]).sum();
            let d = u[(i, i)];
            if d.norm() == 0.0 {
                return Err(Error::DecompositionFailure(format!("zero diagonal entry {i}")));
            }
            inv[(i, j)] = (rhs - acc) / d;
        }
    }
    Ok(inv)
}

/// `H = N · diag(d) · N†` with `N` unit upper triangular and `d > 0`.
pub fn udu_decompose(h: &CMatrix) -> Result<(CMatrix, Vec<f64>)> {
    let n = ensure_square(h)?;
    let asym = hermitian_asymmetry(h);
    if asym > 1e-10 {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let mut nm = identity(n);
    let mut d = vec![0.0; n];
    for j in (0..n).rev() {
        let mut dj = h[(j, j)].re;
        for k in (j + 1)..n {
            dj -= nm[(j, k)].norm_sqr() * d[k];
        }
        if !(dj > 0.0) || !dj.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: dj });
        }
        d[j] = dj;
        for i in 0..j {
            let mut acc = h[(i, j)];
            for k in (j + 1)..n {
                acc -= nm[(i, k)] * d[k] * nm[(j, k)].conj();
            }
            nm[(i, j)] = acc / dj;
        }
    }
    Ok((nm, d))
}

/// `L = n₊ · e^{2p} · n₊†` for a positive-definite Hermitian `L` with unit determinant.
pub fn udu_factor(l: &CMatrix) -> Result<(UpperUnipotent, Vec<f64>)> {
    let (nm, d) = udu_decompose(l)?;
    let log_det: f64 = d.iter().map(|x| x.ln()).sum();
    if log_det.abs() > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "udu_factor expects det L = 1, got log det = {log_det:.3e}"
        )));
    }
    let p = d.iter().map(|x| 0.5 * x.ln()).collect();
    Ok((UpperUnipotent::from_raw(nm), p))
}

/// Upper-triangular `U` with positive diagonal such that `H = U U†`.
pub fn upper_cholesky(h: &CMatrix) -> Result<CMatrix> {
    let (mut nm, d) = udu_decompose(h)?;
    let n = d.len();
    for j in 0..n {
        let s = d[j].sqrt();
        for i in 0..=j {
            nm[(i, j)] *= s;
        }
    }
    Ok(nm)
}
