//! Seeded random generation of matrices and reduced states.
//!
//! Distributions (documented so runs are reproducible in distribution across
//! implementations, bitwise only within this crate):
//! - alcove points: the `n` gaps (including the affine gap) are
//!   `min_gap + (2π − n·min_gap)·Dirichlet(1,…,1)`, then `q` is centered;
//! - momenta: uniform on `[−p_max, p_max]`, centered, rescaled to stay within the cap;
//! - spin entries: uniform on the complex disk of radius `sigma_max`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{qr_positive, AlcovePoint, BorelElement, CMatrix, UnitaryMatrix};
use crate::phasespace::ReducedState;

/// Deterministic generator used throughout tests, sweeps and the CLI.
#[derive(Debug, Clone)]
pub struct Rng64(ChaCha8Rng);

impl Rng64 {
    pub fn seeded(seed: u64) -> Self {
        Rng64(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.gen_range(lo..hi)
    }

    pub fn normal(&mut self) -> f64 {
        // Box-Muller
        let u1: f64 = 1.0 - self.0.gen::<f64>();
        let u2: f64 = self.0.gen();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal()) / 2f64.sqrt()
    }

    /// Uniform on the disk `|z| ≤ radius`.
    pub fn disk(&mut self, radius: f64) -> Complex64 {
        let r = radius * self.0.gen::<f64>().sqrt();
        Complex64::from_polar(r, self.uniform(0.0, TAU))
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }
}

pub fn random_complex_matrix(rng: &mut Rng64, n: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| rng.complex_normal() * scale)
}

pub fn random_hermitian(rng: &mut Rng64, n: usize, scale: f64) -> CMatrix {
    let a = random_complex_matrix(rng, n, scale);
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn random_strict_upper(rng: &mut Rng64, n: usize, radius: f64) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = rng.disk(radius);
        }
    }
    m
}

/// Centered uniform vector with entries bounded by `cap`.
pub fn random_traceless(rng: &mut Rng64, n: usize, cap: f64) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| rng.uniform(-cap, cap)).collect();
    let mean = p.iter().sum::<f64>() / n as f64;
    p.iter_mut().for_each(|x| *x -= mean);
    let max = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max > cap {
        p.iter_mut().for_each(|x| *x *= cap / max);
    }
    p
}

/// `diag(e^{p}) + strictly upper` with centered `p`.
pub fn random_borel(rng: &mut Rng64, n: usize, p_cap: f64, off_radius: f64) -> BorelElement {
    let p = random_traceless(rng, n, p_cap);
    let mut m = random_strict_upper(rng, n, off_radius);
    for (i, x) in p.iter().enumerate() {
        m[(i, i)] = Complex64::new(x.exp(), 0.0);
    }
    BorelElement::new(m).expect("constructed Borel element is valid")
}

/// Haar-distributed unitary with determinant 1.
pub fn random_special_unitary(rng: &mut Rng64, n: usize) -> UnitaryMatrix {
    let a = random_complex_matrix(rng, n, 1.0);
    let (q, _) = qr_positive(&a).expect("Ginibre matrices are almost surely regular");
    let det = q.determinant();
    let fix = Complex64::from_polar(1.0, -det.arg() / n as f64);
    UnitaryMatrix::new_special(q * fix).expect("normalized unitary")
}

pub fn random_alcove(rng: &mut Rng64, n: usize, min_gap: f64) -> AlcovePoint {
    assert!(min_gap * (n as f64) < TAU, "min_gap too large for n = {n}");
    let weights: Vec<f64> = (0..n).map(|_| -(1.0 - rng.uniform(0.0, 1.0)).ln()).collect();
    let total: f64 = weights.iter().sum();
    let spare = TAU - n as f64 * min_gap;
    let gaps: Vec<f64> = weights.iter().map(|w| min_gap + spare * w / total).collect();
    let mut q = vec![0.0; n];
    for a in 1..n {
        q[a] = q[a - 1] - gaps[a - 1];
    }
    let mean = q.iter().sum::<f64>() / n as f64;
    q.iter_mut().for_each(|x| *x -= mean);
    AlcovePoint::new(q, 0.0).expect("sampled alcove point is regular")
}

/// Magnitude caps for random initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCaps {
    pub min_gap: f64,
    pub p_max: f64,
    pub sigma_max: f64,
}

impl Default for StateCaps {
    fn default() -> Self {
        StateCaps {
            min_gap: 0.1,
            p_max: 1.0,
            sigma_max: 1.0,
        }
    }
}

pub fn random_state(rng: &mut Rng64, n: usize, caps: StateCaps) -> ReducedState {
    let q = random_alcove(rng, n, caps.min_gap);
    let p = random_traceless(rng, n, caps.p_max);
    let sigma = random_strict_upper(rng, n, caps.sigma_max);
    ReducedState::new(q, p, sigma).expect("sampled state is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_streams_are_reproducible() {
        let a = random_state(&mut Rng64::seeded(9), 4, StateCaps::default());
        let b = random_state(&mut Rng64::seeded(9), 4, StateCaps::default());
        assert_eq!(a, b);
    }

    #[test]
    fn caps_are_respected() {
        let mut rng = Rng64::seeded(10);
        for n in 2..=6 {
            let s = random_state(&mut rng, n, StateCaps::default());
            assert!(s.q().min_gap() >= 0.1 - 1e-12);
            assert!(s.p().iter().all(|x| x.abs() <= 1.0 + 1e-12));
            assert!(s.p().iter().sum::<f64>().abs() < 1e-12);
            assert!(s.sigma().iter().all(|z| z.norm() <= 1.0));
        }
    }
}
