//! Explicit solution of the moment-map constraint on the gauge slice.
//!
//! For a regular torus element `Q = diag(e^{i q})` and a unipotent spin `S₊`,
//! the constraint `Q⁻¹ b₊ Q = b₊ S₊` has a unique unit upper-triangular
//! solution `b₊`. Splitting by the principal grading (entries `(a, a+k)` have
//! grade `k`) gives, grade by grade,
//!
//! ```text
//! b_{a,a+k} = I_{a,a+k} · ( S_{a,a+k} + Σ_{m=1}^{k−1} b_{a,a+m} S_{a+m,a+k} ),
//! I_{a,b}   = 1 / (Q_b Q_a⁻¹ − 1)
//! ```
//!
//! which is the production path. The fully expanded sum over compositions of
//! `k` is kept as an independent cross-check.

use num_complex::Complex64;

use crate::matrix::{fro, identity, invert_upper, AlcovePoint, BorelElement, CMatrix, UpperUnipotent};
use crate::{Error, Result};

/// Inverse factors above this modulus flag a near-wall, ill-conditioned solve.
pub const ILL_CONDITIONED_FACTOR: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSolution {
    pub b_plus: UpperUnipotent,
    /// `‖Q⁻¹ b₊ Q − b₊ S₊‖`.
    pub residual: f64,
    /// Largest `|I_{a,b}|` used by the solve.
    pub max_inverse_factor: f64,
}

impl ConstraintSolution {
    pub fn is_ill_conditioned(&self) -> bool {
        self.max_inverse_factor > ILL_CONDITIONED_FACTOR
    }
}

/// `I_{a,b} = 1/(e^{i(q_b − q_a)} − 1) = −1/2 − (i/2)·cot((q_b − q_a)/2)`.
pub fn inverse_factor(q: &[f64], a: usize, b: usize) -> Result<Complex64> {
    let half = 0.5 * (q[b] - q[a]);
    let s = half.sin();
    if s == 0.0 || !s.is_finite() {
        return Err(Error::NonRegularTorus {
            min_gap: (q[b] - q[a]).abs(),
            tolerance: 0.0,
        });
    }
    Ok(Complex64::new(-0.5, -0.5 * half.cos() / s))
}

fn inverse_factor_table(q: &[f64]) -> Result<(Vec<Vec<Complex64>>, f64)> {
    let n = q.len();
    let mut table = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut max = 0.0f64;
    for a in 0..n {
        for b in (a + 1)..n {
            let f = inverse_factor(q, a, b)?;
            max = max.max(f.norm());
            table[a][b] = f;
        }
    }
    Ok((table, max))
}

fn check_dims(q: &AlcovePoint, n: usize) -> Result<()> {
    if q.dim() != n {
        return Err(Error::InvalidInput(format!(
            "torus has dimension {} but spin has dimension {n}",
            q.dim()
        )));
    }
    Ok(())
}

/// `‖Q⁻¹ b Q − b S‖`.
pub fn constraint_residual(q: &AlcovePoint, b_plus: &CMatrix, s_plus: &CMatrix) -> f64 {
    let torus = q.torus();
    let lhs = torus.adjoint() * b_plus * &torus;
    fro(&(lhs - b_plus * s_plus))
}

/// Grade-by-grade solve of `Q⁻¹ b₊ Q = b₊ S₊`.
pub fn solve_bplus(q: &AlcovePoint, s_plus: &UpperUnipotent) -> Result<ConstraintSolution> {
    let n = s_plus.dim();
    check_dims(q, n)?;
    let (factors, max_inverse_factor) = inverse_factor_table(q.values())?;
    let s = s_plus.as_matrix();
    let mut b = identity(n);
    for k in 1..n {
        for a in 0..(n - k) {
            let mut rhs = s[(a, a + k)];
            for m in 1..k {
                rhs += b[(a, a + m)] * s[(a + m, a + k)];
            }
            b[(a, a + k)] = factors[a][a + k] * rhs;
        }
    }
    let residual = constraint_residual(q, &b, s);
    Ok(ConstraintSolution {
        b_plus: UpperUnipotent::from_raw(b),
        residual,
        max_inverse_factor,
    })
}

/// Closed-form solution as an explicit sum over compositions `i_1 + … + i_m = k`:
///
/// `b_{a,a+k} = Σ_{(i_1..i_m)} Π_α I_{a, a+c_α} S_{a+c_{α−1}, a+c_α}`, `c_α = i_1 + … + i_α`.
pub fn solve_bplus_closed_form(q: &AlcovePoint, s_plus: &UpperUnipotent) -> Result<CMatrix> {
    let n = s_plus.dim();
    check_dims(q, n)?;
    if n > 16 {
        return Err(Error::InvalidInput("closed form enumerates 2^(n-2) compositions; n <= 16".into()));
    }
    let (factors, _) = inverse_factor_table(q.values())?;
    let s = s_plus.as_matrix();
    let mut b = identity(n);
    for a in 0..n {
        for k in 1..(n - a) {
            b[(a, a + k)] = composition_sum(&factors, s, a, 0, k);
        }
    }
    Ok(b)
}

/// Sum over compositions of the remaining grade, given the partial sum `reached`.
fn composition_sum(
    factors: &[Vec<Complex64>],
    s: &CMatrix,
    a: usize,
    reached: usize,
    k: usize,
) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for step in 1..=(k - reached) {
        let next = reached + step;
        let term = factors[a][a + next] * s[(a + reached, a + next)];
        total += if next == k {
            term
        } else {
            term * composition_sum(factors, s, a, next, k)
        };
    }
    total
}

/// Recovers the spin `S = b_R⁻¹ Q⁻¹ b_R Q` from a Borel factor on the gauge slice.
pub fn reconstruct_spin(q: &AlcovePoint, b_r: &BorelElement) -> Result<UpperUnipotent> {
    let n = b_r.dim();
    check_dims(q, n)?;
    let phases = q.values();
    let b = b_r.as_matrix();
    let conjugated = CMatrix::from_fn(n, n, |i, j| b[(i, j)] * Complex64::from_polar(1.0, phases[j] - phases[i]));
    let inv = invert_upper(b)?;
    UpperUnipotent::new(inv * conjugated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{diag_real, unipotent_exp};
    use crate::sample::{random_alcove, random_strict_upper, random_traceless, Rng64};

    fn random_spin(rng: &mut Rng64, n: usize) -> UpperUnipotent {
        unipotent_exp(&random_strict_upper(rng, n, 1.0)).unwrap()
    }

    #[test]
    fn identity_spin_gives_identity() {
        let q = AlcovePoint::new(vec![1.0, 0.2, -1.2], 1e-9).unwrap();
        let sol = solve_bplus(&q, &UpperUnipotent::identity(3)).unwrap();
        assert_eq!(sol.b_plus.as_matrix(), &identity(3));
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn inverse_factor_matches_definition() {
        let q = [0.9, -0.1, -0.8];
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let direct = 1.0 / (Complex64::from_polar(1.0, q[b] - q[a]) - 1.0);
            assert!((inverse_factor(&q, a, b).unwrap() - direct).norm() < 1e-14);
            let expected_mod2 = 1.0 / (4.0 * ((q[b] - q[a]) / 2.0).sin().powi(2));
            assert!((direct.norm_sqr() - expected_mod2).abs() < 1e-13);
        }
    }

    #[test]
    fn residual_is_small_and_solutions_agree() {
        let mut rng = Rng64::seeded(31);
        for n in 2..=6 {
            for _ in 0..10 {
                let q = random_alcove(&mut rng, n, 0.1);
                let s = random_spin(&mut rng, n);
                let sol = solve_bplus(&q, &s).unwrap();
                assert!(sol.residual < 1e-11, "n={n} residual={}", sol.residual);
                let closed = solve_bplus_closed_form(&q, &s).unwrap();
                assert!(fro(&(closed - sol.b_plus.as_matrix())) < 1e-12);
            }
        }
    }

    #[test]
    fn grade_additivity() {
        // Zeroing grades above k leaves entries of grade <= k unchanged.
        let mut rng = Rng64::seeded(32);
        let n = 5;
        let q = random_alcove(&mut rng, n, 0.1);
        let s = random_spin(&mut rng, n);
        let full = solve_bplus(&q, &s).unwrap().b_plus.into_matrix();
        for k in 1..n {
            let mut truncated = s.as_matrix().clone();
            for i in 0..n {
                for j in (i + k + 1)..n {
                    truncated[(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
            let part = solve_bplus(&q, &UpperUnipotent::new(truncated).unwrap()).unwrap().b_plus;
            for i in 0..n {
                for j in (i + 1)..=(i + k).min(n - 1) {
                    assert_eq!(part.as_matrix()[(i, j)], full[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn entries_do_not_depend_on_n() {
        // Embedding (q, S) into n+1 with an extra far particle leaves b_{a,a+k}, a+k < n, unchanged
        // as long as the relevant differences q_b - q_a are the same.
        let q3 = AlcovePoint::new(vec![1.0, 0.3, -1.3], 1e-9).unwrap();
        let q4 = AlcovePoint::new(vec![1.5, 0.8, -0.8, -1.5], 1e-9).unwrap();
        let mut rng = Rng64::seeded(33);
        let sigma3 = random_strict_upper(&mut rng, 3, 1.0);
        let mut sigma4 = CMatrix::zeros(4, 4);
        for i in 0..3 {
            for j in 0..3 {
                sigma4[(i, j)] = sigma3[(i, j)];
            }
        }
        let b3 = solve_bplus(&q3, &unipotent_exp(&sigma3).unwrap()).unwrap().b_plus;
        let b4 = solve_bplus(&q4, &unipotent_exp(&sigma4).unwrap()).unwrap().b_plus;
        // shifts: q4[0..3] = q3 + 0.5 so all differences agree
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!((b3.as_matrix()[(i, j)] - b4.as_matrix()[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn spin_reconstruction_round_trip() {
        let mut rng = Rng64::seeded(34);
        for n in 2..=6 {
            let q = random_alcove(&mut rng, n, 0.1);
            let s = random_spin(&mut rng, n);
            let p = random_traceless(&mut rng, n, 1.0);
            let b_plus = solve_bplus(&q, &s).unwrap().b_plus;
            let e_p = diag_real(&p.iter().map(|x| x.exp()).collect::<Vec<_>>());
            let b_r = BorelElement::new(e_p * b_plus.as_matrix()).unwrap();
            let back = reconstruct_spin(&q, &b_r).unwrap();
            assert!(fro(&(back.as_matrix() - s.as_matrix())) < 1e-10);
        }
    }

    #[test]
    fn diagonal_borel_gives_identity_spin() {
        let q = AlcovePoint::new(vec![0.7, -0.7], 1e-9).unwrap();
        let b = BorelElement::new(diag_real(&[2.0, 0.5])).unwrap();
        let s = reconstruct_spin(&q, &b).unwrap();
        assert!(fro(&(s.as_matrix() - identity(2))) < 1e-15);
    }
}
