//! The trigonometric spin Sutherland model and the small-`(p, σ)` limit that
//! connects it to the reduced system.
//!
//! For `A_{n−1}` in the defining representation:
//!
//! ```text
//! H_Suth = ½ Σ p_a² + ¼ Σ_{j<k} |ξ_jk|² / sin²((q_j − q_k)/2),   σ = 2i ξ
//! ```
//!
//! and `(H_red(q, εp, εσ) − n) / (4ε²) → H_Suth` with an `O(ε)` error.

use num_complex::Complex64;

use crate::matrix::{fro, trace, AlcovePoint, CMatrix};
use crate::par::Execution;
use crate::phasespace::{h_red_minus_n, lax_minus_identity, ReducedState};
use crate::{Error, Result};

const TWO_I: Complex64 = Complex64 { re: 0.0, im: 2.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct SutherlandState {
    pub q: AlcovePoint,
    pub p: Vec<f64>,
    /// Strictly upper-triangular spin.
    pub xi: CMatrix,
}

impl SutherlandState {
    /// Same `(q, p)`, spin `ξ = σ / (2i)`.
    pub fn from_reduced(state: &ReducedState) -> Self {
        SutherlandState {
            q: state.q().clone(),
            p: state.p().to_vec(),
            xi: state.sigma() / TWO_I,
        }
    }

    /// The alternative spin variable `ξ̃ = −2i ξ`.
    pub fn xi_tilde(&self) -> CMatrix {
        &self.xi * Complex64::new(0.0, -2.0)
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }
}

fn half_sines(q: &AlcovePoint) -> Result<Vec<Vec<f64>>> {
    let v = q.values();
    let n = v.len();
    let mut s = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in (j + 1)..n {
            let x = (0.5 * (v[j] - v[k])).sin();
            if x == 0.0 {
                return Err(Error::NonRegularTorus {
                    min_gap: (v[j] - v[k]).abs(),
                    tolerance: 0.0,
                });
            }
            s[j][k] = x;
        }
    }
    Ok(s)
}

/// `½ Σ p_a² + ¼ Σ_{j<k} |ξ_jk|² / sin²((q_j − q_k)/2)`.
pub fn h_suth(state: &SutherlandState) -> Result<f64> {
    let s = half_sines(&state.q)?;
    let n = state.dim();
    let mut h = 0.5 * state.p.iter().map(|x| x * x).sum::<f64>();
    for j in 0..n {
        for k in (j + 1)..n {
            h += 0.25 * state.xi[(j, k)].norm_sqr() / (s[j][k] * s[j][k]);
        }
    }
    Ok(h)
}

/// The same Hamiltonian written in `ξ̃`: `½ Σ p² + (1/8) Σ (1/2) |ξ̃_jk|² / sin²(…)`.
pub fn h_suth_tilde(q: &AlcovePoint, p: &[f64], xi_tilde: &CMatrix) -> Result<f64> {
    let s = half_sines(q)?;
    let n = p.len();
    let mut h = 0.5 * p.iter().map(|x| x * x).sum::<f64>();
    for j in 0..n {
        for k in (j + 1)..n {
            h += 0.125 * 0.5 * xi_tilde[(j, k)].norm_sqr() / (s[j][k] * s[j][k]);
        }
    }
    Ok(h)
}

/// Hermitian traceless Lax matrix: diagonal `p`, entry `(j, k)`, `j < k`,
/// equal to `i ξ_jk / (e^{−i(q_j − q_k)} − 1)`.
pub fn lax_suth(state: &SutherlandState) -> Result<CMatrix> {
    half_sines(&state.q)?;
    let v = state.q.values();
    let n = state.dim();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        l[(j, j)] = Complex64::new(state.p[j], 0.0);
        for k in (j + 1)..n {
            let denom = Complex64::from_polar(1.0, -(v[j] - v[k])) - 1.0;
            let z = Complex64::new(0.0, 1.0) * state.xi[(j, k)] / denom;
            l[(j, k)] = z;
            l[(k, j)] = z.conj();
        }
    }
    Ok(l)
}

/// One row of a scaling sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub value: f64,
    pub error: f64,
}

fn check_ladder(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("epsilons must be positive and strictly decreasing".into()));
    }
    Ok(())
}

/// Rows `(ε, (H_red(q, εp, εσ) − n)/(4ε²), |value − H_Suth(q, p, σ/(2i))|)`.
pub fn scaling_limit_sweep(state: &ReducedState, epsilons: &[f64], exec: Execution) -> Result<Vec<SweepRow>> {
    check_ladder(epsilons)?;
    let target = h_suth(&SutherlandState::from_reduced(state))?;
    exec.map(epsilons, |&eps| {
        let value = h_red_minus_n(&state.scaled(eps))? / (4.0 * eps * eps);
        Ok(SweepRow {
            eps,
            value,
            error: (value - target).abs(),
        })
    })
    .into_iter()
    .collect()
}

fn trace_power(m: &CMatrix, k: usize) -> f64 {
    let mut power = m.clone();
    for _ in 1..k {
        power = &power * m;
    }
    trace(&power).re
}

/// Rows `(ε, tr((L(q, εp, εσ) − 1)^k)/(2ε)^k, |value − tr(L_Suth^k)|)`.
pub fn lax_limit_sweep(state: &ReducedState, k: usize, epsilons: &[f64], exec: Execution) -> Result<Vec<SweepRow>> {
    check_ladder(epsilons)?;
    if k < 2 || k > state.dim() {
        return Err(Error::InvalidInput(format!("power k = {k} must satisfy 2 <= k <= n = {}", state.dim())));
    }
    let target = trace_power(&lax_suth(&SutherlandState::from_reduced(state))?, k);
    exec.map(epsilons, |&eps| {
        let shifted = lax_minus_identity(&state.scaled(eps))? / Complex64::new(2.0 * eps, 0.0);
        let value = trace_power(&shifted, k);
        Ok(SweepRow {
            eps,
            value,
            error: (value - target).abs(),
        })
    })
    .into_iter()
    .collect()
}

/// Least-squares slope of `log error` against `log ε`.
pub fn loglog_slope(rows: &[SweepRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps.ln(), r.error.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `‖L_Suth − L_Suth†‖`, zero by construction.
pub fn lax_suth_asymmetry(state: &SutherlandState) -> Result<f64> {
    let l = lax_suth(state)?;
    Ok(fro(&(&l - l.adjoint())))
}
