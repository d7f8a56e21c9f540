//! Reduced states on the gauge slice, the Lax matrix `L = b_R b_R†`, the
//! reduced Hamiltonian `tr L` and the conserved and gauge-invariant observables.
//!
//! A reduced state is `(q, p, σ)`: an alcove point, a centered momentum and a
//! strictly upper-triangular spin with `S₊ = e^σ`. The Borel factor is
//! `b_R = e^p b₊` where `b₊` solves the moment-map constraint for `(Q, S₊)`.
//! The residual gauge group is the maximal torus acting by `σ ↦ T σ T⁻¹`.

use num_complex::Complex64;

use crate::constraint::{reconstruct_spin, solve_bplus, ConstraintSolution};
use crate::heisenberg::DoublePoint;
use crate::matrix::{
    diag_real, fro, hermitian_asymmetry, hermitian_eig, identity, invert_upper, nilpotent_log, trace, udu_decompose,
    unipotent_exp, AlcovePoint, BorelElement, CMatrix, UpperUnipotent,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    q: AlcovePoint,
    p: Vec<f64>,
    sigma: CMatrix,
}

impl ReducedState {
    pub const MOMENTUM_SUM_TOLERANCE: f64 = 1e-9;

    /// Validates dimensions, `Σ p = 0`, finiteness and the strictly upper shape of `σ`.
    pub fn new(q: AlcovePoint, p: Vec<f64>, mut sigma: CMatrix) -> Result<Self> {
        let n = q.dim();
        if p.len() != n || sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "state dimensions disagree: q has {n}, p has {}, sigma is {}x{}",
                p.len(),
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) || sigma.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("state has non-finite entries".into()));
        }
        let sum: f64 = p.iter().sum();
        if sum.abs() > Self::MOMENTUM_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("momenta sum to {sum:.3e}, expected 0")));
        }
        for i in 0..n {
            for j in 0..=i {
                if sigma[(i, j)].norm() > 1e-14 {
                    return Err(Error::InvalidInput(format!(
                        "spin entry ({i}, {j}) is on or below the diagonal"
                    )));
                }
                sigma[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(ReducedState { q, p, sigma })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn q(&self) -> &AlcovePoint {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn sigma(&self) -> &CMatrix {
        &self.sigma
    }

    pub fn s_plus(&self) -> UpperUnipotent {
        unipotent_exp(&self.sigma).expect("spin is strictly upper by construction")
    }

    /// `(q, ε p, ε σ)`.
    pub fn scaled(&self, eps: f64) -> ReducedState {
        ReducedState {
            q: self.q.clone(),
            p: self.p.iter().map(|x| eps * x).collect(),
            sigma: &self.sigma * Complex64::new(eps, 0.0),
        }
    }

    /// Residual gauge transformation `σ ↦ T σ T⁻¹` with `T = diag(e^{i θ})`.
    pub fn torus_conjugate(&self, theta: &[f64]) -> ReducedState {
        let n = self.dim();
        let sigma = CMatrix::from_fn(n, n, |i, j| self.sigma[(i, j)] * Complex64::from_polar(1.0, theta[i] - theta[j]));
        ReducedState {
            q: self.q.clone(),
            p: self.p.clone(),
            sigma,
        }
    }
}

/// Solution `b₊` of the constraint for the state's `(Q, S₊)`.
pub fn constraint_solution(state: &ReducedState) -> Result<ConstraintSolution> {
    solve_bplus(state.q(), &state.s_plus())
}

/// `b_R = diag(e^p) · b₊`.
pub fn build_b_r(state: &ReducedState) -> Result<BorelElement> {
    let b_plus = constraint_solution(state)?.b_plus;
    let e_p: Vec<f64> = state.p().iter().map(|x| x.exp()).collect();
    BorelElement::new(diag_real(&e_p) * b_plus.as_matrix())
}

/// Gauge-slice point `K = Q⁻¹ b₊⁻¹ e^{−p}`, `S = S₊`.
pub fn gauge_slice_point(state: &ReducedState) -> Result<DoublePoint> {
    let b_r = build_b_r(state)?;
    let k = state.q().torus().adjoint() * invert_upper(b_r.as_matrix())?;
    DoublePoint::new(k, state.s_plus().to_borel())
}

/// Positive-definite Hermitian matrix with unit determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct LaxMatrix(CMatrix);

impl LaxMatrix {
    pub const HERMITIAN_TOLERANCE: f64 = 1e-11;
    pub const DET_TOLERANCE: f64 = 1e-9;

    pub fn new(m: CMatrix) -> Result<Self> {
        let asymmetry = hermitian_asymmetry(&m);
        if asymmetry > Self::HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian { asymmetry });
        }
        let (_, p) = udu_decompose(&m)?;
        let log_det: f64 = p.iter().map(|d| d.ln()).sum();
        if log_det.abs() > Self::DET_TOLERANCE {
            return Err(Error::InvalidInput(format!("det L differs from 1: log det = {log_det:.3e}")));
        }
        Ok(LaxMatrix(m))
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        LaxMatrix(m)
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

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    /// `tr(L^k)` for `k = 1..=max_power`.
    pub fn power_traces(&self, max_power: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(max_power);
        let mut power = self.0.clone();
        for k in 1..=max_power {
            if k > 1 {
                power = &power * &self.0;
            }
            out.push(trace(&power).re);
        }
        out
    }
}

pub fn lax(state: &ReducedState) -> Result<LaxMatrix> {
    let b_r = build_b_r(state)?;
    Ok(LaxMatrix::from_raw(b_r.gram()))
}

/// `L − 1` evaluated without cancellation:
/// `diag(expm1(2p)) + e^p (N + N† + N N†) e^p` with `N = b₊ − 1`.
pub fn lax_minus_identity(state: &ReducedState) -> Result<CMatrix> {
    let n = state.dim();
    let nil = constraint_solution(state)?.b_plus.into_matrix() - identity(n);
    let inner = &nil + nil.adjoint() + &nil * nil.adjoint();
    let e_p: Vec<f64> = state.p().iter().map(|x| x.exp()).collect();
    let mut out = CMatrix::from_fn(n, n, |i, j| inner[(i, j)] * (e_p[i] * e_p[j]));
    for (a, x) in state.p().iter().enumerate() {
        out[(a, a)] += (2.0 * x).exp_m1();
    }
    Ok(out)
}

/// `H_red = tr(b_R b_R†)`.
pub fn h_red(state: &ReducedState) -> Result<f64> {
    Ok(lax(state)?.trace())
}

/// `H_red − n = Σ_a expm1(2p_a) + Σ_a e^{2p_a} Σ_{k>a} |b₊_{ak}|²`, accurate near the identity.
pub fn h_red_minus_n(state: &ReducedState) -> Result<f64> {
    let b = constraint_solution(state)?.b_plus.into_matrix();
    let n = state.dim();
    let mut total = 0.0;
    for a in 0..n {
        let x = 2.0 * state.p()[a];
        let off: f64 = ((a + 1)..n).map(|k| b[(a, k)].norm_sqr()).sum();
        total += x.exp_m1() + x.exp() * off;
    }
    Ok(total)
}

/// Letters of a mixed word: `A ↦ L`, `B ↦ Q⁻¹ L Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    A,
    B,
}

/// `Q⁻¹ L Q`.
pub fn conjugated_lax(q: &AlcovePoint, l: &CMatrix) -> CMatrix {
    let v = q.values();
    CMatrix::from_fn(l.nrows(), l.ncols(), |i, j| l[(i, j)] * Complex64::from_polar(1.0, v[j] - v[i]))
}

/// Trace of the word with `A ↦ L`, `B ↦ Q⁻¹ L Q`.
pub fn mixed_trace(q: &AlcovePoint, l: &CMatrix, word: &[Letter]) -> Result<Complex64> {
    if word.is_empty() {
        return Err(Error::InvalidInput("mixed invariant needs a nonempty word".into()));
    }
    let b = conjugated_lax(q, l);
    let mut product = identity(l.nrows());
    for letter in word {
        product = match letter {
            Letter::A => product * l,
            Letter::B => product * &b,
        };
    }
    Ok(trace(&product))
}

pub fn mixed_invariant(state: &ReducedState, word: &[Letter]) -> Result<Complex64> {
    mixed_trace(state.q(), lax(state)?.as_matrix(), word)
}

/// `𝓛(λ) = L + λ Q⁻¹ L Q`.
pub fn spectral_lax(state: &ReducedState, lambda: Complex64) -> Result<CMatrix> {
    let l = lax(state)?.into_matrix();
    let b = conjugated_lax(state.q(), &l);
    Ok(l + b * lambda)
}

/// Conserved quantities recorded along a flow.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantLedger {
    /// `tr(L^k)` for `k = 2..=max(n, 3)`.
    pub power_traces: Vec<f64>,
    /// `tr(L Q⁻¹ L Q)`.
    pub mixed: f64,
    /// Ascending spectrum of `S₊ S₊†`.
    pub spin_spectrum: Vec<f64>,
    pub h_red: f64,
}

impl InvariantLedger {
    pub fn from_parts(q: &AlcovePoint, l: &CMatrix, s_plus: &UpperUnipotent) -> Result<Self> {
        let n = l.nrows();
        let traces = LaxMatrix::from_raw(l.clone()).power_traces(n.max(3));
        let mixed = mixed_trace(q, l, &[Letter::A, Letter::B])?.re;
        let gram = s_plus.as_matrix() * s_plus.as_matrix().adjoint();
        let (spin_spectrum, _) = hermitian_eig(&gram)?;
        Ok(InvariantLedger {
            h_red: traces[0],
            power_traces: traces[1..].to_vec(),
            mixed,
            spin_spectrum,
        })
    }

    pub fn of_state(state: &ReducedState) -> Result<Self> {
        Self::from_parts(state.q(), lax(state)?.as_matrix(), &state.s_plus())
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = vec!["h_red".to_string()];
        out.extend((0..self.power_traces.len()).map(|k| format!("tr_L{}", k + 2)));
        out.push("tr_L_QinvLQ".into());
        out.extend((0..self.spin_spectrum.len()).map(|k| format!("spin_eig_{}", k + 1)));
        out
    }

    /// Flattened in the order of [`InvariantLedger::labels`].
    pub fn values(&self) -> Vec<f64> {
        let mut out = vec![self.h_red];
        out.extend_from_slice(&self.power_traces);
        out.push(self.mixed);
        out.extend_from_slice(&self.spin_spectrum);
        out
    }
}

/// Torus-invariant observables with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

/// Observables unchanged by `σ ↦ T σ T⁻¹`, `L ↦ T L T⁻¹`:
/// `|σ_jk|²`, `Re/Im σ_ab σ_bc σ*_ac` for `a < b < c`, `|L_jk|` for `j < k`, and `L_jj`.
pub fn invariant_observables(sigma: &CMatrix, l: &CMatrix) -> Observables {
    let n = sigma.nrows();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            labels.push(format!("abs2_sigma_{}_{}", j + 1, k + 1));
            values.push(sigma[(j, k)].norm_sqr());
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let z = sigma[(a, b)] * sigma[(b, c)] * sigma[(a, c)].conj();
                labels.push(format!("re_triple_{}_{}_{}", a + 1, b + 1, c + 1));
                values.push(z.re);
                labels.push(format!("im_triple_{}_{}_{}", a + 1, b + 1, c + 1));
                values.push(z.im);
            }
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            labels.push(format!("abs_L_{}_{}", j + 1, k + 1));
            values.push(l[(j, k)].norm());
        }
    }
    for j in 0..n {
        labels.push(format!("L_{}_{}", j + 1, j + 1));
        values.push(l[(j, j)].re);
    }
    Observables { labels, values }
}

pub fn gauge_invariant_observables(state: &ReducedState) -> Result<Observables> {
    Ok(invariant_observables(state.sigma(), lax(state)?.as_matrix()))
}

/// Largest `|log det L|` accepted by [`recover_state`]. Integrators conserve
/// `det L` only to their own order, so the determinant is normalized away.
pub const RECOVERY_DET_TOLERANCE: f64 = 1e-6;

/// Inverts [`lax`] up to the torus gauge: `p` from `L = n₊ e^{2p} n₊†`,
/// `b_R = n₊ e^p`, and `S₊ = b_R⁻¹ Q⁻¹ b_R Q`.
pub fn recover_state(q: &AlcovePoint, l: &CMatrix) -> Result<ReducedState> {
    let (n_plus, d) = udu_decompose(l)?;
    let log_det: f64 = d.iter().map(|x| x.ln()).sum();
    if log_det.abs() > RECOVERY_DET_TOLERANCE {
        return Err(Error::ToleranceExceeded {
            what: "|log det L|".into(),
            value: log_det.abs(),
            bound: RECOVERY_DET_TOLERANCE,
        });
    }
    let n_plus = UpperUnipotent::from_raw(n_plus);
    let mut p: Vec<f64> = d.iter().map(|x| 0.5 * x.ln()).collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    p.iter_mut().for_each(|x| *x -= mean);
    let e_p: Vec<f64> = p.iter().map(|x| x.exp()).collect();
    let b_r = BorelElement::new(n_plus.as_matrix() * diag_real(&e_p))?;
    let s_plus = reconstruct_spin(q, &b_r)?;
    ReducedState::new(q.clone(), p, nilpotent_log(&s_plus))
}

/// `‖lax(state) − L‖ / ‖L‖`.
pub fn lax_mismatch(state: &ReducedState, l: &CMatrix) -> Result<f64> {
    Ok(fro(&(lax(state)?.into_matrix() - l)) / fro(l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::moment_map_residual;
    use crate::matrix::{c, unipotent_exp};
    use crate::sample::{random_state, Rng64, StateCaps};

    fn state(q: &[f64], p: &[f64], sigma: CMatrix) -> ReducedState {
        ReducedState::new(AlcovePoint::new(q.to_vec(), 1e-9).unwrap(), p.to_vec(), sigma).unwrap()
    }

    #[test]
    fn zero_spin_gives_diagonal_lax() {
        let s = state(&[1.0, 0.0, -1.0], &[0.3, -0.1, -0.2], CMatrix::zeros(3, 3));
        let l = lax(&s).unwrap();
        let expected = diag_real(&[0.6f64.exp(), (-0.2f64).exp(), (-0.4f64).exp()]);
        assert!(fro(&(l.as_matrix() - expected)) < 1e-15);
        let s0 = state(&[1.0, 0.0, -1.0], &[0.0, 0.0, 0.0], CMatrix::zeros(3, 3));
        assert_eq!(h_red(&s0).unwrap(), 3.0);
    }

    #[test]
    fn two_particle_lax_by_hand() {
        let mut sigma = CMatrix::zeros(2, 2);
        sigma[(0, 1)] = c(0.4, -0.3);
        let s = state(&[0.8, -0.8], &[0.0, 0.0], sigma);
        let l = lax(&s).unwrap();
        let factor = 1.0 / (Complex64::from_polar(1.0, -1.6) - 1.0);
        let b12 = factor * c(0.4, -0.3);
        assert!((l.as_matrix()[(0, 1)] - b12).norm() < 1e-15);
        assert!((l.as_matrix()[(0, 0)].re - (1.0 + b12.norm_sqr())).abs() < 1e-15);
        assert!((l.as_matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moment_map_vanishes_on_the_slice() {
        let mut rng = Rng64::seeded(51);
        for n in 2..=6 {
            let s = random_state(&mut rng, n, StateCaps::default());
            let point = gauge_slice_point(&s).unwrap();
            assert!(moment_map_residual(&point).unwrap() < 1e-11);
        }
    }

    #[test]
    fn accurate_forms_agree_with_direct_ones() {
        let mut rng = Rng64::seeded(52);
        for n in 2..=5 {
            let s = random_state(&mut rng, n, StateCaps::default());
            let l = lax(&s).unwrap();
            let direct = l.trace() - n as f64;
            assert!((h_red_minus_n(&s).unwrap() - direct).abs() < 1e-12 * l.trace());
            let diff = lax_minus_identity(&s).unwrap() - (l.as_matrix() - identity(n));
            assert!(fro(&diff) < 1e-12 * fro(l.as_matrix()));
            assert!(l.trace() >= n as f64);
        }
    }

    #[test]
    fn mixed_words_and_spectral_lax() {
        let mut rng = Rng64::seeded(53);
        let s = random_state(&mut rng, 3, StateCaps::default());
        let tr_l = mixed_invariant(&s, &[Letter::A]).unwrap();
        assert!((tr_l.re - h_red(&s).unwrap()).abs() < 1e-14);
        assert!(mixed_invariant(&s, &[]).is_err());
        let lambda = c(0.3, -0.7);
        let m = spectral_lax(&s, lambda).unwrap();
        let lhs = trace(&(&m * &m));
        let aa = mixed_invariant(&s, &[Letter::A, Letter::A]).unwrap();
        let ab = mixed_invariant(&s, &[Letter::A, Letter::B]).unwrap();
        let rhs = aa + lambda * ab * 2.0 + lambda * lambda * aa;
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
        let zero = spectral_lax(&s, c(0.0, 0.0)).unwrap();
        assert!(fro(&(zero - lax(&s).unwrap().into_matrix())) == 0.0);
    }

    #[test]
    fn observables_are_gauge_invariant_and_round_trip() {
        let mut rng = Rng64::seeded(54);
        for n in 2..=5 {
            let s = random_state(&mut rng, n, StateCaps::default());
            let obs = gauge_invariant_observables(&s).unwrap();
            let theta: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let moved = gauge_invariant_observables(&s.torus_conjugate(&theta)).unwrap();
            for (a, b) in obs.values.iter().zip(&moved.values) {
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            }
            let l = lax(&s).unwrap();
            let back = recover_state(s.q(), l.as_matrix()).unwrap();
            assert!(lax_mismatch(&back, l.as_matrix()).unwrap() < 1e-9);
            let back_obs = gauge_invariant_observables(&back).unwrap();
            for (a, b) in obs.values.iter().zip(&back_obs.values) {
                assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn recover_trivial_cases() {
        let q = AlcovePoint::new(vec![1.0, 0.0, -1.0], 1e-9).unwrap();
        let s = recover_state(&q, &identity(3)).unwrap();
        assert!(s.p().iter().all(|x| x.abs() < 1e-15));
        assert!(fro(s.sigma()) < 1e-15);
        let p = [0.5f64, 0.1, -0.6];
        let l = diag_real(&p.iter().map(|x| (2.0 * x).exp()).collect::<Vec<_>>());
        let s = recover_state(&q, &l).unwrap();
        for (a, b) in s.p().iter().zip(&p) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(fro(s.sigma()) < 1e-15);
    }

    #[test]
    fn ledger_spin_spectrum_matches_orbit() {
        let mut rng = Rng64::seeded(55);
        let s = random_state(&mut rng, 3, StateCaps::default());
        let ledger = InvariantLedger::of_state(&s).unwrap();
        assert_eq!(ledger.labels().len(), ledger.values().len());
        let prod: f64 = ledger.spin_spectrum.iter().product();
        assert!((prod - 1.0).abs() < 1e-12);
        assert!(ledger.spin_spectrum.iter().all(|x| *x > 0.0));
        let u = unipotent_exp(s.sigma()).unwrap();
        assert_eq!(u, s.s_plus());
    }
}
