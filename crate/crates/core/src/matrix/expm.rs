use num_complex::Complex64;

use super::{ensure_square, identity, CMatrix, UpperUnipotent};
use crate::{Error, Result};

fn is_strictly_triangular(a: &CMatrix) -> bool {
    let n = a.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let upper = (0..n).all(|i| (0..=i).all(|j| a[(i, j)] == zero));
    let lower = (0..n).all(|i| (i..n).all(|j| a[(i, j)] == zero));
    upper || lower
}

fn norm1(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
///
/// Strictly triangular input is nilpotent and gets the exact finite series.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    if is_strictly_triangular(a) {
        return nilpotent_series(a);
    }
    let norm = norm1(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / Complex64::new(2f64.powi(squarings), 0.0);

    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=40 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        sum += &term;
        if norm1(&term) <= f64::EPSILON * 1e-2 * norm1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn nilpotent_series(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..n {
        term = &term * a / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    sum
}

/// `exp(σ)` for strictly upper-triangular `σ`.
pub fn unipotent_exp(sigma: &CMatrix) -> Result<UpperUnipotent> {
    ensure_square(sigma)?;
    let n = sigma.nrows();
    for i in 0..n {
        for j in 0..=i {
            if sigma[(i, j)] != Complex64::new(0.0, 0.0) {
                return Err(Error::InvalidInput(
                    "spin coordinate must be strictly upper triangular".into(),
                ));
            }
        }
    }
    Ok(UpperUnipotent::from_raw(nilpotent_series(sigma)))
}

/// Logarithm of an upper unipotent matrix: the finite series
/// `Σ_{k=1}^{n−1} (−1)^{k+1} N^k / k` with `N = U − 1`.
pub fn nilpotent_log(u: &UpperUnipotent) -> CMatrix {
    let n = u.dim();
    let nil = u.as_matrix() - identity(n);
    let mut sum = CMatrix::zeros(n, n);
    let mut power = identity(n);
    for k in 1..n {
        power = &power * &nil;
        let coeff = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
        sum += &power * Complex64::new(coeff, 0.0);
    }
    for i in 0..n {
        for j in 0..=i {
            sum[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    sum
}
