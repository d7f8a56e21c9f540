use num_complex::Complex64;

use super::{
    ensure_square, fro, hermitian_asymmetry, identity, unitarity_residual, AlcovePoint, CMatrix,
    UnitaryMatrix,
};
use crate::{Error, Result};

const MAX_SWEEPS: usize = 64;
/// Relative off-diagonal norm at which the Jacobi sweeps stop.
const OFF_TOL: f64 = 1e-14;
/// Eigenvalues of `(W + W†)/2` closer than this are re-resolved jointly.
const CLUSTER_GAP: f64 = 1e-5;

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Eigenvalues are returned in ascending order, eigenvectors as the columns of `U`.
pub fn hermitian_eig(h: &CMatrix) -> Result<(Vec<f64>, UnitaryMatrix)> {
    let n = ensure_square(h)?;
    let asymmetry = hermitian_asymmetry(h);
    if asymmetry > 1e-10 {
        return Err(Error::NotHermitian { asymmetry });
    }
    let mut a = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v = identity(n);
    let norm = fro(&a);

    let mut converged = norm == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off_norm(&a) <= OFF_TOL * norm;
    }
    if !converged && off_norm(&a) > 1e-12 * norm {
        return Err(Error::DecompositionFailure("Jacobi sweeps did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, UnitaryMatrix::from_raw(vectors)))
}

fn off_norm(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One Jacobi rotation annihilating `a[p][q]`; `A ← J† A J`, `V ← V J`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let modulus = apq.norm();
    if modulus == 0.0 {
        return;
    }
    let n = a.nrows();
    let phase = apq / modulus;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * modulus);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    // J = diag(1, conj(phase)) · [[c, s], [-s, c]]
    let j_pp = Complex64::new(cs, 0.0);
    let j_pq = Complex64::new(sn, 0.0);
    let j_qp = -phase.conj() * sn;
    let j_qq = phase.conj() * cs;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * j_pp + akq * j_qp;
        a[(k, q)] = akp * j_pq + akq * j_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
        a[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * j_pp + vkq * j_qp;
        v[(k, q)] = vkp * j_pq + vkq * j_qq;
    }
}

/// Diagonalizes a special unitary `W` as `η⁻¹ W η = diag(e^{i·phases})`.
///
/// The phases are the alcove representative (strictly decreasing, zero sum,
/// spread below 2π). With a `reference` frame each column of `η` is phased
/// to have real positive overlap with the matching reference column;
/// otherwise its largest-modulus entry is made real positive.
pub fn unitary_diag(
    w: &CMatrix,
    reference: Option<&UnitaryMatrix>,
    tolerance: f64,
) -> Result<(AlcovePoint, UnitaryMatrix)> {
    let n = ensure_square(w)?;
    let residual = unitarity_residual(w);
    if residual > 1e-9 * n as f64 {
        return Err(Error::NotUnitary { residual });
    }
    let det_dev = (w.determinant() - 1.0).norm();
    if det_dev > 1e-8 {
        return Err(Error::NotUnitary { residual: det_dev });
    }
    if let Some(r) = reference {
        if r.dim() != n {
            return Err(Error::InvalidInput("reference frame has wrong dimension".into()));
        }
    }

    let half = Complex64::new(0.5, 0.0);
    let real_part = (w + w.adjoint()) * half;
    let (cosines, frame) = hermitian_eig(&real_part)?;
    let mut u = frame.into_matrix();

    // Pairs e^{±iθ} share a cosine; split such clusters with a rotated
    // Hermitian combination restricted to the cluster subspace.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cosines[end] - cosines[end - 1] < CLUSTER_GAP {
            end += 1;
        }
        if end - start > 1 {
            resolve_cluster(w, &mut u, start, end)?;
        }
        start = end;
    }

    let raw_phases: Vec<f64> = (0..n)
        .map(|j| {
            let col = u.column(j);
            let rayleigh = (col.adjoint() * w * col)[(0, 0)];
            rayleigh.arg()
        })
        .collect();
    let (mut phases, order) = AlcovePoint::normalize_phases(&raw_phases);
    let sum: f64 = phases.iter().sum();
    if sum.abs() > 1e-8 {
        return Err(Error::NotUnitary { residual: sum.abs() });
    }
    let mean = sum / n as f64;
    phases.iter_mut().for_each(|x| *x -= mean);

    let mut eta = CMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    fix_column_phases(&mut eta, reference);
    let alcove = AlcovePoint::new(phases, tolerance)?;
    Ok((alcove, UnitaryMatrix::from_raw(eta)))
}

fn resolve_cluster(w: &CMatrix, u: &mut CMatrix, start: usize, end: usize) -> Result<()> {
    let n = u.nrows();
    let m = end - start;
    let basis = u.columns(start, m).into_owned();
    let mut best: Option<(f64, CMatrix)> = None;
    for k in 0..8 {
        let angle = std::f64::consts::PI * (k as f64 + 0.5) / 8.0;
        let rot = Complex64::from_polar(1.0, -angle);
        let combo = (w * rot + w.adjoint() * rot.conj()) * Complex64::new(0.5, 0.0);
        let restricted = basis.adjoint() * combo * &basis;
        let restricted = (&restricted + restricted.adjoint()) * Complex64::new(0.5, 0.0);
        let (vals, vecs) = hermitian_eig(&restricted)?;
        let gap = vals.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(g, _)| gap > *g) {
            best = Some((gap, vecs.into_matrix()));
        }
    }
    let (_, rotation) = best.expect("at least one candidate");
    let resolved = basis * rotation;
    for j in 0..m {
        for i in 0..n {
            u[(i, start + j)] = resolved[(i, j)];
        }
    }
    Ok(())
}

fn fix_column_phases(eta: &mut CMatrix, reference: Option<&UnitaryMatrix>) {
    let n = eta.nrows();
    for j in 0..n {
        let target = match reference {
            Some(r) => {
                let overlap: Complex64 = (0..n).map(|i| r.as_matrix()[(i, j)].conj() * eta[(i, j)]).sum();
                if overlap.norm() > 1e-8 {
                    Some(overlap)
                } else {
                    None
                }
            }
            None => None,
        };
        let anchor = target.unwrap_or_else(|| {
            let mut best = 0;
            let mut best_mod = eta[(0, j)].norm();
            for i in 1..n {
                let m = eta[(i, j)].norm();
                if m > best_mod * (1.0 + 1e-12) {
                    best = i;
                    best_mod = m;
                }
            }
            eta[(best, j)]
        });
        if anchor.norm() == 0.0 {
            continue;
        }
        let correction = anchor.conj() / anchor.norm();
        for i in 0..n {
            eta[(i, j)] *= correction;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{diag_real, expm, torus_matrix};
    use crate::sample::{random_hermitian, random_special_unitary, Rng64};
    use std::f64::consts::PI;

    fn residual(h: &CMatrix, vals: &[f64], u: &UnitaryMatrix) -> f64 {
        fro(&(h * u.as_matrix() - u.as_matrix() * diag_real(vals)))
    }

    #[test]
    fn identity_and_diagonal() {
        let (vals, u) = hermitian_eig(&identity(3)).unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0]);
        assert_eq!(u.as_matrix(), &identity(3));

        let (vals, u) = hermitian_eig(&diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        let m = u.as_matrix();
        assert_eq!(m[(1, 0)].re, 1.0);
        assert_eq!(m[(2, 1)].re, 1.0);
        assert_eq!(m[(0, 2)].re, 1.0);
    }

    #[test]
    fn random_hermitian_residual() {
        let mut rng = Rng64::seeded(1);
        for n in 2..=8 {
            let h = random_hermitian(&mut rng, n, 2.0);
            let (vals, u) = hermitian_eig(&h).unwrap();
            assert!(residual(&h, &vals, &u) < 1e-11 * fro(&h), "n={n}");
            assert!(unitarity_residual(u.as_matrix()) < 1e-11);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = identity(2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn diagonal_unitary_already_ordered() {
        let w = torus_matrix(&[PI / 3.0, 0.0, -PI / 3.0]);
        let (q, eta) = unitary_diag(&w, None, 1e-9).unwrap();
        for (a, b) in q.values().iter().zip([PI / 3.0, 0.0, -PI / 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(fro(&(eta.as_matrix() - identity(3))) < 1e-14);
    }

    #[test]
    fn permuted_diagonal_unitary() {
        let w = torus_matrix(&[-0.4, 1.0, -0.6]);
        let (q, eta) = unitary_diag(&w, None, 1e-9).unwrap();
        assert_eq!(q.values().len(), 3);
        for (a, b) in q.values().iter().zip([1.0, -0.4, -0.6]) {
            assert!((a - b).abs() < 1e-14);
        }
        let e = eta.as_matrix();
        assert!((e[(1, 0)].re - 1.0).abs() < 1e-14);
        assert!((e[(0, 1)].re - 1.0).abs() < 1e-14);
        assert!((e[(2, 2)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn wrapped_phases_land_in_alcove() {
        // phases 3.0, 2.9, -5.9 ≡ 0.383 mod 2π
        let w = torus_matrix(&[3.0, 2.9, -5.9]);
        let (q, _) = unitary_diag(&w, None, 1e-9).unwrap();
        let v = q.values();
        assert!(v.iter().sum::<f64>().abs() < 1e-12);
        assert!(v[0] - v[2] < 2.0 * PI);
    }

    #[test]
    fn random_special_unitaries_reassemble() {
        let mut rng = Rng64::seeded(2);
        for n in 2..=6 {
            for _ in 0..20 {
                let w = random_special_unitary(&mut rng, n);
                let (q, eta) = unitary_diag(w.as_matrix(), None, 1e-9).unwrap();
                let d = torus_matrix(q.values());
                let rebuilt = eta.as_matrix() * d * eta.as_matrix().adjoint();
                assert!(fro(&(rebuilt - w.as_matrix())) < 1e-10 * n as f64);
                assert!(unitarity_residual(eta.as_matrix()) < 1e-11 * n as f64);
            }
        }
    }

    #[test]
    fn conjugate_pair_cluster_is_split() {
        // e^{±iθ} share a cosine; also include a near-degenerate-cosine pair near π/2.
        let mut rng = Rng64::seeded(8);
        let v = random_special_unitary(&mut rng, 4);
        let phases = [1.2, 0.3, -0.3, -1.2];
        let w = v.as_matrix() * torus_matrix(&phases) * v.as_matrix().adjoint();
        let (q, eta) = unitary_diag(&w, None, 1e-9).unwrap();
        for (a, b) in q.values().iter().zip(phases) {
            assert!((a - b).abs() < 1e-12);
        }
        let rebuilt = eta.as_matrix() * torus_matrix(q.values()) * eta.as_matrix().adjoint();
        assert!(fro(&(rebuilt - w)) < 1e-11);
    }

    #[test]
    fn reference_frame_tracks_phase() {
        let mut rng = Rng64::seeded(4);
        let v = random_special_unitary(&mut rng, 3);
        let w0 = v.as_matrix() * torus_matrix(&[1.0, 0.2, -1.2]) * v.as_matrix().adjoint();
        let (_, eta0) = unitary_diag(&w0, None, 1e-9).unwrap();
        let h = random_hermitian(&mut rng, 3, 1e-3);
        let step = expm(&(h * Complex64::new(0.0, 1.0)));
        let w1 = &step * &w0 * step.adjoint();
        let (_, eta1) = unitary_diag(&w1, Some(&eta0), 1e-9).unwrap();
        for j in 0..3 {
            let overlap: Complex64 =
                (0..3).map(|i| eta0.as_matrix()[(i, j)].conj() * eta1.as_matrix()[(i, j)]).sum();
            assert!(overlap.im.abs() < 1e-12 && overlap.re > 0.99);
        }
    }

    #[test]
    fn non_regular_is_reported() {
        let w = torus_matrix(&[0.5, 0.5, -1.0]);
        assert!(matches!(unitary_diag(&w, None, 1e-9), Err(Error::NonRegularTorus { .. })));
    }
}
