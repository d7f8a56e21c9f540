//! Reduced equations of motion for `H = tr(b_R b_R†)` on the gauge slice.
//!
//! The flow is integrated on `(q, L)`:
//!
//! ```text
//! q̇_j = 2 L_jj − (2/n) tr L,        L̇ = [Y, L],
//! Y_jk = (cot((q_j − q_k)/2) − i) L_jk  (j ≠ k),   Y_jj = −i (L_jj − tr L / n)
//! ```
//!
//! and `(p, σ)` are recovered at sample points. The same flow is available in
//! closed form by diagonalizing `exp(t 𝒱(L₀)) Q₀` (the projection solver).

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::matrix::{alcove_gaps, commutator, hermitian_eig, unitary_diag, AlcovePoint, CMatrix, UnitaryMatrix};
use crate::par::Execution;
use crate::phasespace::{invariant_observables, lax, recover_state, InvariantLedger, ReducedState};
use crate::{Error, Result};

const MINUS_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };

fn trace_re(l: &CMatrix) -> f64 {
    (0..l.nrows()).map(|i| l[(i, i)].re).sum()
}

fn check_regular(q: &[f64], tolerance: f64) -> Result<()> {
    let min_gap = alcove_gaps(q).into_iter().fold(f64::INFINITY, f64::min);
    if !(min_gap > tolerance) {
        return Err(Error::NonRegularTorus { min_gap, tolerance });
    }
    Ok(())
}

/// `𝒱(L) = 2i L − (2i/n) tr(L) 1`.
pub fn velocity(l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let shift = trace_re(l) / n as f64;
    let mut v = l * Complex64::new(0.0, 2.0);
    for i in 0..n {
        v[(i, i)] -= Complex64::new(0.0, 2.0 * shift);
    }
    v
}

fn compensator_raw(q: &[f64], l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mean = trace_re(l) / n as f64;
    CMatrix::from_fn(n, n, |j, k| {
        if j == k {
            MINUS_I * (l[(j, j)].re - mean)
        } else {
            let cot = 1.0 / (0.5 * (q[j] - q[k])).tan();
            Complex64::new(cot, -1.0) * l[(j, k)]
        }
    })
}

/// The anti-Hermitian compensator `Y` in the diagonal gauge `Y_jj = −i (L_jj − tr L / n)`.
pub fn compensator(q: &AlcovePoint, l: &CMatrix) -> Result<CMatrix> {
    check_regular(q.values(), 0.0)?;
    Ok(compensator_raw(q.values(), l))
}

fn rhs_raw(q: &[f64], l: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = l.nrows();
    let mean = trace_re(l) / n as f64;
    let qdot = (0..n).map(|j| 2.0 * (l[(j, j)].re - mean)).collect();
    let y = compensator_raw(q, l);
    (qdot, commutator(&y, l))
}

/// `(q̇, L̇)` with `L̇ = [Y, L]`.
pub fn rhs(q: &AlcovePoint, l: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_regular(q.values(), 0.0)?;
    Ok(rhs_raw(q.values(), l))
}

/// `R(Q)` applied to `X`: zero diagonal, multiplier `−(i/2) cot((q_j − q_k)/2)` on entry `(j, k)`.
pub fn r_matrix(q: &AlcovePoint, x: &CMatrix) -> Result<CMatrix> {
    check_regular(q.values(), 0.0)?;
    let v = q.values();
    let n = x.nrows();
    Ok(CMatrix::from_fn(n, n, |j, k| {
        if j == k {
            Complex64::new(0.0, 0.0)
        } else {
            let cot = 1.0 / (0.5 * (v[j] - v[k])).tan();
            Complex64::new(0.0, -0.5 * cot) * x[(j, k)]
        }
    }))
}

/// `L̇ = [R(Q)(𝒱(L)), L]`.
pub fn rmatrix_rhs(q: &AlcovePoint, l: &CMatrix) -> Result<CMatrix> {
    Ok(commutator(&r_matrix(q, &velocity(l))?, l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Projection,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub t_end: f64,
    pub dt: f64,
    pub method: Method,
    pub sample_stride: usize,
    pub regularity_tolerance: f64,
    /// Halt with `ToleranceExceeded` once any invariant drifts further than this.
    pub drift_bound: Option<f64>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            t_end: 1.0,
            dt: 1e-3,
            method: Method::Rk4,
            sample_stride: 10,
            regularity_tolerance: crate::matrix::DEFAULT_REGULARITY_TOL,
            drift_bound: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            problems.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            problems.push(format!("t_end must be at least dt, got {}", self.t_end));
        }
        if self.sample_stride == 0 {
            problems.push("sample_stride must be positive".into());
        }
        if !(self.regularity_tolerance > 0.0) {
            problems.push("regularity_tolerance must be positive".into());
        }
        if let Some(b) = self.drift_bound {
            if !(b > 0.0) {
                problems.push("drift_bound must be positive".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }

    /// Number of steps; the step is `t_end / steps`, which equals `dt` up to rounding.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.steps() as f64
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let steps = self.steps();
        let h = self.step();
        let mut times: Vec<f64> = (0..=steps).step_by(self.sample_stride).map(|k| k as f64 * h).collect();
        if !steps.is_multiple_of(self.sample_stride) {
            times.push(self.t_end);
        }
        times
    }
}

/// Why a flow stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// The torus point came within the regularity tolerance of a wall.
    NonRegular { last_good_time: f64, min_gap: f64 },
    /// An invariant drifted past the configured bound.
    DriftExceeded { time: f64, label: String, value: f64, bound: f64 },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    pub fn to_error(&self, tolerance: f64) -> Option<Error> {
        match self {
            Termination::Completed => None,
            Termination::NonRegular { min_gap, .. } => Some(Error::NonRegularTorus {
                min_gap: *min_gap,
                tolerance,
            }),
            Termination::DriftExceeded { label, value, bound, .. } => Some(Error::ToleranceExceeded {
                what: format!("drift of {label}"),
                value: *value,
                bound: *bound,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    pub lax: Vec<CMatrix>,
    pub ledgers: Vec<InvariantLedger>,
    pub drift_labels: Vec<String>,
    /// Per-invariant `max_t |value(t) − value(0)|`.
    pub drift: Vec<f64>,
    pub termination: Termination,
}

impl Trajectory {
    fn empty(labels: Vec<String>) -> Self {
        let width = labels.len();
        Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            lax: Vec::new(),
            ledgers: Vec::new(),
            drift_labels: labels,
            drift: vec![0.0; width],
            termination: Termination::Completed,
        }
    }

    fn push(&mut self, t: f64, state: ReducedState, l: CMatrix, ledger: InvariantLedger) {
        if let Some(first) = self.ledgers.first() {
            for ((d, v), v0) in self.drift.iter_mut().zip(ledger.values()).zip(first.values()) {
                *d = d.max((v - v0).abs());
            }
        }
        self.times.push(t);
        self.states.push(state);
        self.lax.push(l);
        self.ledgers.push(ledger);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `q`, then the torus-invariant observables, per sample.
    pub fn comparison_rows(&self) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .zip(&self.lax)
            .map(|(s, l)| comparison_row(s, l))
            .collect()
    }

    pub fn comparison_labels(&self) -> Vec<String> {
        match self.states.first() {
            Some(s) => comparison_labels(s.dim()),
            None => Vec::new(),
        }
    }

    fn check_drift(&mut self, bound: Option<f64>) -> bool {
        let Some(bound) = bound else { return false };
        if let Some((k, &value)) = self
            .drift
            .iter()
            .enumerate()
            .find(|(_, d)| **d > bound)
        {
            self.termination = Termination::DriftExceeded {
                time: *self.times.last().unwrap_or(&0.0),
                label: self.drift_labels[k].clone(),
                value,
                bound,
            };
            return true;
        }
        false
    }
}

fn comparison_row(state: &ReducedState, l: &CMatrix) -> Vec<f64> {
    let mut row = state.q().values().to_vec();
    row.extend(invariant_observables(state.sigma(), l).values);
    row
}

fn comparison_labels(n: usize) -> Vec<String> {
    let mut labels: Vec<String> = (1..=n).map(|a| format!("q_{a}")).collect();
    let zero = CMatrix::zeros(n, n);
    labels.extend(invariant_observables(&zero, &zero).labels);
    labels
}

/// `max_t |value(t) − value(0)|` per invariant, with labels.
pub fn drift_report(trajectory: &Trajectory) -> Vec<(String, f64)> {
    trajectory
        .drift_labels
        .iter()
        .cloned()
        .zip(trajectory.drift.iter().copied())
        .collect()
}

fn sample(q: &[f64], l: &CMatrix, tolerance: f64) -> Result<(ReducedState, InvariantLedger)> {
    let alcove = AlcovePoint::new(q.to_vec(), tolerance)?;
    let state = recover_state(&alcove, l)?;
    let ledger = InvariantLedger::from_parts(&alcove, l, &state.s_plus())?;
    Ok((state, ledger))
}

fn axpy(q: &[f64], l: &CMatrix, h: f64, dq: &[f64], dl: &CMatrix) -> (Vec<f64>, CMatrix) {
    let q2 = q.iter().zip(dq).map(|(a, b)| a + h * b).collect();
    (q2, l + dl * Complex64::new(h, 0.0))
}

/// One classical fourth-order Runge–Kutta step on `(q, L)`.
pub fn rk4_step(q: &[f64], l: &CMatrix, h: f64) -> (Vec<f64>, CMatrix) {
    let (k1q, k1l) = rhs_raw(q, l);
    let (q2, l2) = axpy(q, l, 0.5 * h, &k1q, &k1l);
    let (k2q, k2l) = rhs_raw(&q2, &l2);
    let (q3, l3) = axpy(q, l, 0.5 * h, &k2q, &k2l);
    let (k3q, k3l) = rhs_raw(&q3, &l3);
    let (q4, l4) = axpy(q, l, h, &k3q, &k3l);
    let (k4q, k4l) = rhs_raw(&q4, &l4);
    let w = h / 6.0;
    let q_next = (0..q.len())
        .map(|j| q[j] + w * (k1q[j] + 2.0 * k2q[j] + 2.0 * k3q[j] + k4q[j]))
        .collect();
    let dl = k1l + (k2l + k3l) * Complex64::new(2.0, 0.0) + k4l;
    let l_next = l + dl * Complex64::new(w, 0.0);
    let l_next = (&l_next + l_next.adjoint()) * Complex64::new(0.5, 0.0);
    (q_next, l_next)
}

fn ledger_labels(state: &ReducedState) -> Result<Vec<String>> {
    Ok(InvariantLedger::of_state(state)?.labels())
}

/// Integrates the flow with fixed-step RK4, sampling every `sample_stride` steps.
///
/// The run ends early when `q` leaves the regular set or when an invariant
/// (including `log det L`) drifts past its bound; the partial trajectory is returned with the reason in `termination`.
pub fn integrate(state0: &ReducedState, config: &FlowConfig) -> Result<Trajectory> {
    config.validate()?;
    check_regular(state0.q().values(), config.regularity_tolerance)?;
    let steps = config.steps();
    let h = config.step();
    let mut q = state0.q().values().to_vec();
    let mut l = lax(state0)?.into_matrix();
    let mut traj = Trajectory::empty(ledger_labels(state0)?);
    let (s, ledger) = sample(&q, &l, config.regularity_tolerance)?;
    traj.push(0.0, s, l.clone(), ledger);

    let mut last_sampled = 0;
    for k in 1..=steps {
        let (q_next, l_next) = rk4_step(&q, &l, h);
        let min_gap = alcove_gaps(&q_next).into_iter().fold(f64::INFINITY, f64::min);
        if !(min_gap > config.regularity_tolerance) || q_next.iter().any(|x| !x.is_finite()) {
            if last_sampled != k - 1 {
                let (s, ledger) = sample(&q, &l, config.regularity_tolerance)?;
                traj.push((k - 1) as f64 * h, s, l.clone(), ledger);
            }
            traj.termination = Termination::NonRegular {
                last_good_time: (k - 1) as f64 * h,
                min_gap,
            };
            return Ok(traj);
        }
        q = q_next;
        l = l_next;
        if k % config.sample_stride == 0 || k == steps {
            let (s, ledger) = match sample(&q, &l, config.regularity_tolerance) {
                Ok(x) => x,
                // The step has lost `det L = 1` beyond what recovery accepts.
                Err(Error::ToleranceExceeded { value, bound, .. }) => {
                    traj.termination = Termination::DriftExceeded {
                        time: k as f64 * h,
                        label: "log_det_L".into(),
                        value,
                        bound,
                    };
                    return Ok(traj);
                }
                Err(e) => return Err(e),
            };
            traj.push(k as f64 * h, s, l.clone(), ledger);
            last_sampled = k;
            if traj.check_drift(config.drift_bound) {
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}

/// Precomputed unreduced flow `t ↦ exp(t 𝒱(L₀)) Q₀`, evaluated through the
/// eigen-decomposition of `L₀` so that large `t` costs no more than small `t`.
#[derive(Debug, Clone)]
pub struct FreeFlow {
    q0: AlcovePoint,
    l0: CMatrix,
    frequencies: Vec<f64>,
    frame: UnitaryMatrix,
}

impl FreeFlow {
    pub fn new(state0: &ReducedState) -> Result<Self> {
        let l0 = lax(state0)?.into_matrix();
        let (eigs, frame) = hermitian_eig(&l0)?;
        let mean = eigs.iter().sum::<f64>() / eigs.len() as f64;
        let frequencies = eigs.iter().map(|x| 2.0 * (x - mean)).collect();
        Ok(FreeFlow {
            q0: state0.q().clone(),
            l0,
            frequencies,
            frame,
        })
    }

    /// `exp(t 𝒱(L₀)) Q₀`.
    pub fn unreduced(&self, t: f64) -> CMatrix {
        let u = self.frame.as_matrix();
        let n = u.nrows();
        let phases: Vec<Complex64> = self.frequencies.iter().map(|w| Complex64::from_polar(1.0, w * t)).collect();
        let scaled = CMatrix::from_fn(n, n, |i, j| u[(i, j)] * phases[j]);
        let q0 = self.q0.torus_entries();
        let e = scaled * u.adjoint();
        CMatrix::from_fn(n, n, |i, j| e[(i, j)] * q0[j])
    }

    /// `(Q(t), η)` with `η⁻¹ W(t) η = Q(t)`.
    pub fn diagonalize(&self, t: f64, tolerance: f64) -> Result<(AlcovePoint, UnitaryMatrix)> {
        unitary_diag(&self.unreduced(t), None, tolerance)
    }

    /// `L(t) = η⁻¹ L₀ η`.
    pub fn lax_at(&self, eta: &UnitaryMatrix) -> CMatrix {
        let u = eta.as_matrix();
        let l = u.adjoint() * &self.l0 * u;
        (&l + l.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

/// The reduced state at time `t` by diagonalizing `exp(t 𝒱(L₀)) Q₀`.
pub fn project_solve(state0: &ReducedState, t: f64, tolerance: f64) -> Result<ReducedState> {
    let flow = FreeFlow::new(state0)?;
    let (q, eta) = flow.diagonalize(t, tolerance)?;
    recover_state(&q, &flow.lax_at(&eta))
}

/// Columns of consecutive frames below this overlap indicate that eigenvalues
/// swapped order between samples, i.e. the flow crossed a wall.
const MIN_FRAME_OVERLAP: f64 = 0.5;

/// Rephases the columns of `eta` to have real positive overlap with `previous`.
/// Returns the smallest overlap modulus.
fn align_frame(previous: &UnitaryMatrix, eta: &UnitaryMatrix) -> (UnitaryMatrix, f64) {
    let p = previous.as_matrix();
    let mut m = eta.as_matrix().clone();
    let n = m.nrows();
    let mut min_overlap = f64::INFINITY;
    for j in 0..n {
        let overlap: Complex64 = (0..n).map(|i| p[(i, j)].conj() * m[(i, j)]).sum();
        min_overlap = min_overlap.min(overlap.norm());
        if overlap.norm() > 0.0 {
            let fix = overlap.conj() / overlap.norm();
            for i in 0..n {
                m[(i, j)] *= fix;
            }
        }
    }
    (UnitaryMatrix::from_raw(m), min_overlap)
}

/// Projection solution at increasing `times`.
///
/// Diagonalizations run as an independent batch; frames are then aligned
/// sequentially by overlap. The run stops at the first time that is not
/// regular or where consecutive frames lose overlap.
pub fn project_trajectory(
    state0: &ReducedState,
    times: &[f64],
    tolerance: f64,
    exec: Execution,
) -> Result<Trajectory> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
    }
    let flow = FreeFlow::new(state0)?;
    let frames = exec.map(times, |&t| flow.diagonalize(t, tolerance));

    let mut traj = Trajectory::empty(ledger_labels(state0)?);
    let mut aligned: Vec<(AlcovePoint, UnitaryMatrix)> = Vec::with_capacity(times.len());
    for (k, frame) in frames.into_iter().enumerate() {
        let last_good_time = if k == 0 { times[0] } else { times[k - 1] };
        let (q, eta) = match frame {
            Ok(x) => x,
            Err(Error::NonRegularTorus { min_gap, .. }) => {
                traj.termination = Termination::NonRegular { last_good_time, min_gap };
                break;
            }
            Err(e) => return Err(e),
        };
        let eta = match aligned.last() {
            None => eta,
            Some((_, prev)) => {
                let (eta, overlap) = align_frame(prev, &eta);
                if overlap < MIN_FRAME_OVERLAP {
                    traj.termination = Termination::NonRegular {
                        last_good_time,
                        min_gap: 0.0,
                    };
                    break;
                }
                eta
            }
        };
        aligned.push((q, eta));
    }

    let samples = exec.map(&aligned, |(q, eta)| -> Result<(ReducedState, CMatrix, InvariantLedger)> {
        let l = flow.lax_at(eta);
        let state = recover_state(q, &l)?;
        let ledger = InvariantLedger::from_parts(q, &l, &state.s_plus())?;
        Ok((state, l, ledger))
    });
    for (t, s) in times.iter().zip(samples) {
        let (state, l, ledger) = s?;
        traj.push(*t, state, l, ledger);
    }
    Ok(traj)
}

/// Sup-norm discrepancy between two trajectories sampled at the same times.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub labels: Vec<String>,
    /// Per observable, `max_t |a(t) − b(t)|`.
    pub per_observable: Vec<f64>,
    pub max_discrepancy: f64,
    pub samples: usize,
}

pub fn compare_trajectories(a: &Trajectory, b: &Trajectory) -> Result<Comparison> {
    let samples = a.len().min(b.len());
    for k in 0..samples {
        if (a.times[k] - b.times[k]).abs() > 1e-9 * a.times[k].abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "sample {k} is at t = {} in one trajectory and t = {} in the other",
                a.times[k], b.times[k]
            )));
        }
    }
    let labels = a.comparison_labels();
    let mut per_observable = vec![0.0f64; labels.len()];
    for (ra, rb) in a.comparison_rows().iter().zip(b.comparison_rows()).take(samples) {
        for (d, (x, y)) in per_observable.iter_mut().zip(ra.iter().zip(&rb)) {
            *d = d.max((x - y).abs());
        }
    }
    let max_discrepancy = per_observable.iter().copied().fold(0.0, f64::max);
    Ok(Comparison {
        labels,
        per_observable,
        max_discrepancy,
        samples,
    })
}

/// Runs RK4 and the projection solver on the same sample grid and compares them.
pub fn compare(state0: &ReducedState, config: &FlowConfig, exec: Execution) -> Result<(Trajectory, Trajectory, Comparison)> {
    let rk = integrate(state0, config)?;
    let proj = project_trajectory(state0, &rk.times, config.regularity_tolerance, exec)?;
    let cmp = compare_trajectories(&rk, &proj)?;
    Ok((rk, proj, cmp))
}

/// Free motion (`σ = 0`): the velocities `q̇_j = 2 e^{2p_j} − (2/n) Σ e^{2p_a}`
/// and the first time a gap closes (`∞` if none does).
pub fn free_motion(state0: &ReducedState) -> (Vec<f64>, f64) {
    let n = state0.dim();
    let e: Vec<f64> = state0.p().iter().map(|x| (2.0 * x).exp()).collect();
    let mean = e.iter().sum::<f64>() / n as f64;
    let v: Vec<f64> = e.iter().map(|x| 2.0 * (x - mean)).collect();
    let gaps = alcove_gaps(state0.q().values());
    let mut rates: Vec<f64> = (0..n - 1).map(|a| v[a] - v[a + 1]).collect();
    rates.push(-(v[0] - v[n - 1]));
    let mut wall = f64::INFINITY;
    for (g, r) in gaps.iter().zip(rates) {
        if r < 0.0 {
            wall = wall.min(-g / r);
        }
    }
    debug_assert!(gaps.iter().sum::<f64>() - TAU < 1e-9);
    (v, wall)
}
