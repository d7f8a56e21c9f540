use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{ensure_square, fro, identity, strictly_lower_norm, torus_matrix, unitarity_residual, CMatrix};
use crate::{Error, Result};

/// Element of U(n), validated to `‖U U† − 1‖ ≤ 1e-11·n`.
///
/// The determinant is not pinned to 1: eigenvector frames and gauge
/// transformations are only defined up to torus phases. Use
/// [`UnitaryMatrix::new_special`] where an SU(n) element is required.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub const TOLERANCE: f64 = 1e-11;

    pub fn new(m: CMatrix) -> Result<Self> {
        let n = ensure_square(&m)?;
        let residual = unitarity_residual(&m);
        if residual > Self::TOLERANCE * n as f64 {
            return Err(Error::NotUnitary { residual });
        }
        Ok(UnitaryMatrix(m))
    }

    /// Like [`UnitaryMatrix::new`] but additionally requires `|det U − 1| ≤ 1e-10`.
    pub fn new_special(m: CMatrix) -> Result<Self> {
        let u = Self::new(m)?;
        let dev = (u.determinant() - 1.0).norm();
        if dev > 1e-10 {
            return Err(Error::NotUnitary { residual: dev });
        }
        Ok(u)
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        UnitaryMatrix(m)
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix(identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn inverse(&self) -> UnitaryMatrix {
        UnitaryMatrix(self.0.adjoint())
    }

    pub fn determinant(&self) -> Complex64 {
        self.0.determinant()
    }

    pub fn mul(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(&self.0 * &other.0)
    }
}

/// Upper-triangular matrix with positive real diagonal and unit determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct BorelElement(CMatrix);

impl BorelElement {
    pub const DET_TOLERANCE: f64 = 1e-10;

    /// Validates and snaps roundoff (strictly lower part and imaginary diagonal parts are zeroed).
    pub fn new(mut m: CMatrix) -> Result<Self> {
        let n = ensure_square(&m)?;
        let scale = fro(&m).max(1.0);
        let lower = strictly_lower_norm(&m);
        if lower > 1e-12 * scale {
            return Err(Error::NotBorel(format!("strictly lower part has norm {lower:.3e}")));
        }
        let mut det = 1.0;
        for i in 0..n {
            let d = m[(i, i)];
            if d.re <= 0.0 || d.im.abs() > 1e-12 * d.re.max(1.0) {
                return Err(Error::NotBorel(format!("diagonal entry {i} is {d}")));
            }
            det *= d.re;
        }
        if (det - 1.0).abs() > Self::DET_TOLERANCE {
            return Err(Error::NotBorel(format!("determinant {det} differs from 1")));
        }
        for i in 0..n {
            m[(i, i)].im = 0.0;
            for j in 0..i {
                m[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(BorelElement(m))
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        BorelElement(m)
    }

    pub fn identity(n: usize) -> Self {
        BorelElement(identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn inverse(&self) -> BorelElement {
        BorelElement(super::invert_upper(&self.0).expect("Borel elements are invertible"))
    }

    pub fn mul(&self, other: &BorelElement) -> BorelElement {
        let mut m = &self.0 * &other.0;
        let n = self.dim();
        for i in 0..n {
            m[(i, i)].im = 0.0;
            for j in 0..i {
                m[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        BorelElement(m)
    }

    /// `b b†`.
    pub fn gram(&self) -> CMatrix {
        &self.0 * self.0.adjoint()
    }
}

/// Upper-triangular matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperUnipotent(CMatrix);

impl UpperUnipotent {
    pub fn new(mut m: CMatrix) -> Result<Self> {
        let n = ensure_square(&m)?;
        let scale = fro(&m).max(1.0);
        let mut deviation = strictly_lower_norm(&m) / scale;
        for i in 0..n {
            deviation = deviation.max((m[(i, i)] - 1.0).norm());
        }
        if deviation > 1e-10 {
            return Err(Error::NotUnipotent { deviation });
        }
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
            for j in 0..i {
                m[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(UpperUnipotent(m))
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        UpperUnipotent(m)
    }

    pub fn identity(n: usize) -> Self {
        UpperUnipotent(identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn to_borel(&self) -> BorelElement {
        BorelElement(self.0.clone())
    }
}

/// Regular point `q` of the open Weyl alcove of SU(n):
/// `q_1 > q_2 > … > q_n`, `q_1 − q_n < 2π`, `Σ q_a = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlcovePoint {
    q: Vec<f64>,
}

impl AlcovePoint {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    /// Validates ordering, centering and regularity (every gap, including the
    /// affine gap `2π − (q_1 − q_n)`, must exceed `tolerance`).
    pub fn new(q: Vec<f64>, tolerance: f64) -> Result<Self> {
        let n = q.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!("alcove point needs n >= 2, got {n}")));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("alcove point has non-finite entries".into()));
        }
        let sum: f64 = q.iter().sum();
        if sum.abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("alcove coordinates sum to {sum:.3e}, expected 0")));
        }
        let gaps = alcove_gaps(&q);
        for (a, &g) in gaps.iter().enumerate().take(n - 1) {
            if g < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "alcove ordering violated: q_{} = {} is not greater than q_{} = {}",
                    a + 1,
                    q[a],
                    a + 2,
                    q[a + 1]
                )));
            }
        }
        if gaps[n - 1] < 0.0 {
            return Err(Error::InvalidInput(format!(
                "alcove width violated: q_1 - q_n = {} is not below 2*pi",
                q[0] - q[n - 1]
            )));
        }
        let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_gap <= tolerance {
            return Err(Error::NonRegularTorus { min_gap, tolerance });
        }
        Ok(AlcovePoint { q })
    }

    /// Maps arbitrary eigenvalue phases to the unique alcove representative of
    /// the same set of unit-circle points (the phases must sum to a multiple of 2π).
    ///
    /// Returns the alcove values together with the index of the source phase for each slot.
    pub fn normalize_phases(phases: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let n = phases.len();
        let principal: Vec<f64> = phases
            .iter()
            .map(|&x| {
                let y = x.rem_euclid(TAU);
                if y > std::f64::consts::PI {
                    y - TAU
                } else {
                    y
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| principal[b].total_cmp(&principal[a]).then(a.cmp(&b)));
        let mut vals: Vec<f64> = order.iter().map(|&i| principal[i]).collect();
        let winding = (vals.iter().sum::<f64>() / TAU).round() as i64;
        // Shifting the m largest down (or the m smallest up) by 2π is a cyclic
        // rotation of the sorted list.
        if winding > 0 {
            let m = (winding as usize).min(n);
            for v in vals.iter_mut().take(m) {
                *v -= TAU;
            }
            vals.rotate_left(m);
            order.rotate_left(m);
        } else if winding < 0 {
            let m = ((-winding) as usize).min(n);
            for v in vals.iter_mut().skip(n - m) {
                *v += TAU;
            }
            vals.rotate_right(m);
            order.rotate_right(m);
        }
        (vals, order)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn gaps(&self) -> Vec<f64> {
        alcove_gaps(&self.q)
    }

    pub fn min_gap(&self) -> f64 {
        self.gaps().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `Q = diag(e^{i q_a})`.
    pub fn torus(&self) -> CMatrix {
        torus_matrix(&self.q)
    }

    pub fn torus_entries(&self) -> Vec<Complex64> {
        self.q.iter().map(|&x| Complex64::from_polar(1.0, x)).collect()
    }
}

/// Consecutive gaps `q_a − q_{a+1}` followed by the affine gap `2π − (q_1 − q_n)`.
pub fn alcove_gaps(q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let mut gaps: Vec<f64> = q.windows(2).map(|w| w[0] - w[1]).collect();
    gaps.push(TAU - (q[0] - q[n - 1]));
    gaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn alcove_rejects_bad_ordering_and_walls() {
        assert!(matches!(
            AlcovePoint::new(vec![-0.5, 0.5], 1e-9),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            AlcovePoint::new(vec![0.5, 0.5, -1.0], 1e-9),
            Err(Error::NonRegularTorus { .. })
        ));
        assert!(matches!(
            AlcovePoint::new(vec![0.3, 0.3], 1e-9),
            Err(Error::InvalidInput(_))
        ));
        assert!(AlcovePoint::new(vec![1.0, 0.0, -1.0], 1e-9).is_ok());
        // affine wall: q_1 - q_n = 2π
        assert!(matches!(
            AlcovePoint::new(vec![PI, -PI], 1e-9),
            Err(Error::NonRegularTorus { .. })
        ));
    }

    #[test]
    fn phase_normalization_rotates_winding() {
        // phases 3, 2.5, -0.5 sum to 5, winding 1: the largest shifts by -2π
        let (vals, order) = AlcovePoint::normalize_phases(&[2.5, -0.5, 3.0]);
        let sum: f64 = vals.iter().sum();
        assert!((sum - (5.0 - TAU)).abs() < 1e-12);
        assert_eq!(order, vec![0, 1, 2]);
        assert!((vals[2] - (3.0 - TAU)).abs() < 1e-12);
        let (vals, _) = AlcovePoint::normalize_phases(&[0.3, -0.1, -0.2 + TAU]);
        assert!(vals.iter().sum::<f64>().abs() < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] > w[1]));
        // winding -1: the smallest shifts up by 2π
        let (vals, order) = AlcovePoint::normalize_phases(&[-3.0, -2.5, 0.5]);
        assert_eq!(order, vec![0, 2, 1]);
        assert!((vals[0] - (TAU - 3.0)).abs() < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn borel_validation() {
        let mut m = identity(3);
        m[(0, 0)] = Complex64::new(2.0, 0.0);
        m[(2, 2)] = Complex64::new(0.5, 0.0);
        m[(0, 2)] = Complex64::new(0.1, 0.3);
        assert!(BorelElement::new(m.clone()).is_ok());
        m[(2, 0)] = Complex64::new(0.1, 0.0);
        assert!(BorelElement::new(m).is_err());
        let mut d = identity(2);
        d[(0, 0)] = Complex64::new(2.0, 0.0);
        assert!(BorelElement::new(d).is_err());
    }
}
