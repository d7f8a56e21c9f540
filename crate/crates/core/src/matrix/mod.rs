//! Dense complex matrix kernels and the structured factorizations used by
//! the rest of the crate: Hermitian eigensolver, unitary diagonalization with
//! alcove normalization, UDU† and QR factorizations, matrix exponential and
//! the nilpotent logarithm.

mod eig;
mod expm;
mod factor;
mod types;

pub use eig::{hermitian_eig, unitary_diag};
pub use expm::{expm, nilpotent_log, unipotent_exp};
pub use factor::{invert_upper, qr_positive, udu_decompose, udu_factor, upper_cholesky};
pub use types::{alcove_gaps, AlcovePoint, BorelElement, UnitaryMatrix, UpperUnipotent};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex square matrix.
pub type CMatrix = DMatrix<Complex64>;

/// Default minimal alcove gap (radians) below which a torus point counts as singular.
pub const DEFAULT_REGULARITY_TOL: f64 = 1e-9;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(values[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn diag_complex(values: &[Complex64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { Complex64::new(0.0, 0.0) })
}

/// `diag(e^{i q_a})`.
pub fn torus_matrix(q: &[f64]) -> CMatrix {
    diag_complex(&q.iter().map(|&x| Complex64::from_polar(1.0, x)).collect::<Vec<_>>())
}

/// Frobenius norm.
pub fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// `‖H − H†‖ / max(‖H‖, 1e-300)`.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    let scale = fro(m).max(1e-300);
    fro(&(m - m.adjoint())) / scale
}

/// `‖U U† − 1‖`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    fro(&(m * m.adjoint() - identity(m.nrows())))
}

/// Frobenius norm of the strictly lower-triangular part.
pub fn strictly_lower_norm(m: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i.min(m.ncols()) {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// Strictly upper-triangular entries in row-major order.
pub fn strict_upper_entries(m: &CMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Builds a strictly upper-triangular matrix from row-major entries.
pub fn strict_upper_from_entries(n: usize, entries: &[Complex64]) -> crate::Result<CMatrix> {
    if entries.len() != n * (n - 1) / 2 {
        return Err(crate::Error::InvalidInput(format!(
            "expected {} strictly upper entries for n = {n}, got {}",
            n * (n - 1) / 2,
            entries.len()
        )));
    }
    let mut m = CMatrix::zeros(n, n);
    let mut it = entries.iter();
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = *it.next().unwrap();
        }
    }
    Ok(m)
}

pub(crate) fn ensure_square(m: &CMatrix) -> crate::Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(crate::Error::InvalidInput(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(crate::Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(m.nrows())
}
