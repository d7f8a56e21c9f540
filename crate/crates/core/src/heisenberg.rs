//! The Heisenberg double SL(n,ℂ) ≅ SU(n) × B: Iwasawa factors, the dressing
//! action of SU(n) on B, the quasi-adjoint action on the double extended by a
//! dressing orbit, and the B-valued moment map.
//!
//! Every `K ∈ SL(n,ℂ)` factors uniquely as `K = b_L g_R⁻¹ = g_L b_R⁻¹`.

use crate::matrix::{fro, identity, invert_upper, qr_positive, BorelElement, CMatrix, UnitaryMatrix};
use crate::{Error, Result};

/// A point `(K, S)` of the double extended by a dressing orbit.
///
/// Only `K` is stored; Iwasawa factors are recomputed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublePoint {
    k: CMatrix,
    s: BorelElement,
}

impl DoublePoint {
    pub const DET_TOLERANCE: f64 = 1e-10;

    pub fn new(k: CMatrix, s: BorelElement) -> Result<Self> {
        if k.nrows() != k.ncols() || k.nrows() != s.dim() {
            return Err(Error::InvalidInput("K and S must be square of equal size".into()));
        }
        let dev = (k.determinant() - 1.0).norm();
        if dev > Self::DET_TOLERANCE {
            return Err(Error::InvalidInput(format!("det K differs from 1 by {dev:.3e}")));
        }
        Ok(DoublePoint { k, s })
    }

    pub fn k(&self) -> &CMatrix {
        &self.k
    }

    pub fn s(&self) -> &BorelElement {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }
}

/// Which side of `K` an [`IwasawaPair`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `K = g_L b_R⁻¹`.
    Right,
    /// `K = b_L g_R⁻¹`.
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaPair {
    pub g: UnitaryMatrix,
    pub b: BorelElement,
    pub side: Side,
}

impl IwasawaPair {
    pub fn reassemble(&self) -> CMatrix {
        match self.side {
            Side::Right => self.g.as_matrix() * self.b.inverse().as_matrix(),
            Side::Left => self.b.as_matrix() * self.g.as_matrix().adjoint(),
        }
    }
}

fn reassembly_check(k: &CMatrix, pair: &IwasawaPair) -> Result<()> {
    let residual = fro(&(pair.reassemble() - k));
    let bound = 1e-10 * fro(k).max(1.0);
    if residual > bound {
        return Err(Error::DecompositionFailure(format!(
            "reassembly residual {residual:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(())
}

/// `K = g_L b_R⁻¹` via QR with positive diagonal: `g_L = Q`, `b_R = R⁻¹`.
pub fn decompose_right(k: &CMatrix) -> Result<IwasawaPair> {
    let (q, r) = qr_positive(k)?;
    let b = BorelElement::new(invert_upper(&r)?).map_err(|e| Error::DecompositionFailure(e.to_string()))?;
    let g = UnitaryMatrix::new(q).map_err(|e| Error::DecompositionFailure(e.to_string()))?;
    let pair = IwasawaPair { g, b, side: Side::Right };
    reassembly_check(k, &pair)?;
    Ok(pair)
}

/// `K = b_L g_R⁻¹` via QR of the index-reversed `K†`, which avoids forming `K K†`.
pub fn decompose_left(k: &CMatrix) -> Result<IwasawaPair> {
    let n = k.nrows();
    let flip = |m: &CMatrix| CMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
    let (q, r) = qr_positive(&flip(&k.adjoint()))?;
    let b = BorelElement::new(flip(&r).adjoint()).map_err(|e| Error::DecompositionFailure(e.to_string()))?;
    let g = UnitaryMatrix::new(flip(&q)).map_err(|e| Error::DecompositionFailure(e.to_string()))?;
    let pair = IwasawaPair { g, b, side: Side::Left };
    reassembly_check(k, &pair)?;
    Ok(pair)
}

/// `Dr_η(b) = Λ_L(η b)`.
pub fn dressing(eta: &UnitaryMatrix, b: &BorelElement) -> Result<BorelElement> {
    Ok(decompose_left(&(eta.as_matrix() * b.as_matrix()))?.b)
}

/// `Ξ_R(X)`: the unitary factor `g_R` of `X = b_L g_R⁻¹`.
fn xi_right(x: &CMatrix) -> Result<UnitaryMatrix> {
    Ok(decompose_left(x)?.g)
}

/// `Ψ_η(K, S) = (η K Ξ_R(η b_L), Dr_{Ξ_R(η b_L b_R)⁻¹}(S))`.
pub fn quasi_adjoint(eta: &UnitaryMatrix, point: &DoublePoint) -> Result<DoublePoint> {
    let b_l = decompose_left(point.k())?.b;
    let b_r = decompose_right(point.k())?.b;
    let eta_bl = eta.as_matrix() * b_l.as_matrix();
    let k_new = eta.as_matrix() * point.k() * xi_right(&eta_bl)?.as_matrix();
    let twist = xi_right(&(eta_bl * b_r.as_matrix()))?.inverse();
    let s_new = dressing(&twist, point.s())?;
    Ok(DoublePoint { k: k_new, s: s_new })
}

/// `Λ(K, S) = Λ_L(K) Λ_R(K) S`.
pub fn moment_map(point: &DoublePoint) -> Result<BorelElement> {
    let b_l = decompose_left(point.k())?.b;
    let b_r = decompose_right(point.k())?.b;
    Ok(BorelElement::from_raw(b_l.as_matrix() * b_r.as_matrix() * point.s().as_matrix()))
}

/// `‖Λ(K, S) − 1‖`.
pub fn moment_map_residual(point: &DoublePoint) -> Result<f64> {
    let lambda = moment_map(point)?;
    Ok(fro(&(lambda.into_matrix() - identity(point.dim()))))
}
