//! The Poisson structure of B in matrix entries, lifted to real coordinates,
//! with numerical checks of antisymmetry, Leibniz, Jacobi, the center and the
//! linearization at the identity.
//!
//! Entry brackets (indices `m ≤ j`, `k ≤ l`, `θ(x) = 1` for `x > 0`, else 0):
//!
//! ```text
//! {b_mj, b_kl}  = i b_kj b_ml [δ_mk + 2θ(m−k) − δ_lj − 2θ(l−j)]
//! {b_mj, b*_kl} = i b_mj b*_kl [δ_mk − δ_jl]
//!               + i [δ_mk Σ_{β>m} b_βj b*_βl − δ_jl Σ_{α<j} b_mα b*_kα]
//! ```
//!
//! Taken literally, the second formula does not satisfy the Jacobi identity.
//! Weighting its two Σ terms by 2 reproduces the bracket
//! `{f, g}(b) = −Im tr(b⁻¹ d^L f b · d^R g)` entry by entry; that is the
//! default ([`MixedTerms::Doubled`]), and the literal form is kept for comparison.
//!
//! Real coordinates: the `n` diagonal entries, then `(Re, Im)` of each
//! `b_ij`, `i < j`, row-major. All diagonal entries are kept (the bracket is
//! defined on the ambient upper-triangular group and `det b` is a Casimir).

mod poly;

pub use poly::{CPoly, Poly};

use num_complex::Complex64;

use crate::matrix::{nilpotent_log, unipotent_exp, CMatrix, UpperUnipotent};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const HALF: Complex64 = Complex64 { re: 0.5, im: 0.0 };
const MINUS_HALF_I: Complex64 = Complex64 { re: 0.0, im: -0.5 };

/// Relative finite-difference step for gradients of non-polynomial observables.
pub const FD_STEP: f64 = 1e-3;

fn theta(x: isize) -> f64 {
    if x > 0 {
        1.0
    } else {
        0.0
    }
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Weight of the Σ terms in `{b_mj, b*_kl}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedTerms {
    /// Weight 1, as in the formula above.
    Literal,
    /// Weight 2: agrees with `−Im tr(b⁻¹ d^L f b · d^R g)` and satisfies Jacobi.
    Doubled,
}

impl MixedTerms {
    fn weight(self) -> f64 {
        match self {
            MixedTerms::Literal => 1.0,
            MixedTerms::Doubled => 2.0,
        }
    }
}

/// Real coordinate `x = a z + conj(a) z̄` of the complex entry `z = b_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Coordinate {
    row: usize,
    col: usize,
    weight: Complex64,
}

/// Evaluator for the coordinate brackets of B and their real lift.
#[derive(Debug, Clone)]
pub struct BracketTable {
    n: usize,
    mixed: MixedTerms,
    coords: Vec<Coordinate>,
    tensor: Vec<Vec<Poly>>,
}

impl BracketTable {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_mixed_terms(n, MixedTerms::Doubled)
    }

    pub fn with_mixed_terms(n: usize, mixed: MixedTerms) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("bracket table needs n >= 2, got {n}")));
        }
        let mut coords: Vec<Coordinate> = (0..n)
            .map(|i| Coordinate {
                row: i,
                col: i,
                weight: HALF,
            })
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                coords.push(Coordinate { row: i, col: j, weight: HALF });
                coords.push(Coordinate {
                    row: i,
                    col: j,
                    weight: MINUS_HALF_I,
                });
            }
        }
        let mut table = BracketTable {
            n,
            mixed,
            coords,
            tensor: Vec::new(),
        };
        table.tensor = table.build_tensor();
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mixed_terms(&self) -> MixedTerms {
        self.mixed
    }

    /// Number of real coordinates, `n²`.
    pub fn vars(&self) -> usize {
        self.coords.len()
    }

    pub fn labels(&self) -> Vec<String> {
        self.coords
            .iter()
            .map(|c| {
                let (i, j) = (c.row + 1, c.col + 1);
                if i == j {
                    format!("b_{i}{j}")
                } else if c.weight == HALF {
                    format!("re_b_{i}{j}")
                } else {
                    format!("im_b_{i}{j}")
                }
            })
            .collect()
    }

    /// Index of the real coordinate for `Re b_ij` (or `b_ii`), `Im b_ij` when `imaginary`.
    pub fn coordinate_index(&self, row: usize, col: usize, imaginary: bool) -> Result<usize> {
        if row > col || col >= self.n || (row == col && imaginary) {
            return Err(Error::IndexOutOfStructure { row, col, n: self.n });
        }
        let target = if imaginary { MINUS_HALF_I } else { HALF };
        Ok(self
            .coords
            .iter()
            .position(|c| c.row == row && c.col == col && c.weight == target)
            .expect("coordinate exists"))
    }

    /// Real coordinates of an upper-triangular matrix with real diagonal.
    pub fn coordinates(&self, b: &CMatrix) -> Vec<f64> {
        self.coords
            .iter()
            .map(|c| {
                let z = b[(c.row, c.col)];
                if c.weight == HALF {
                    z.re
                } else {
                    z.im
                }
            })
            .collect()
    }

    pub fn matrix(&self, x: &[f64]) -> CMatrix {
        let mut b = CMatrix::zeros(self.n, self.n);
        for (c, v) in self.coords.iter().zip(x) {
            if c.weight == HALF {
                b[(c.row, c.col)].re = *v;
            } else {
                b[(c.row, c.col)].im = *v;
            }
        }
        b
    }

    fn check_index(&self, (row, col): (usize, usize)) -> Result<()> {
        if row > col || col >= self.n {
            return Err(Error::IndexOutOfStructure { row, col, n: self.n });
        }
        Ok(())
    }

    /// `{b_mj, b_kl}` (or `{b_mj, b*_kl}` when `conj_second`) at `b`, from the displayed formulas.
    pub fn bracket_coords(
        &self,
        b: &CMatrix,
        first: (usize, usize),
        second: (usize, usize),
        conj_second: bool,
    ) -> Result<Complex64> {
        self.check_index(first)?;
        self.check_index(second)?;
        let entry = |i: usize, j: usize| b[(i, j)];
        Ok(entry_bracket(self.n, self.mixed.weight(), first, second, conj_second, &entry, &|z: &Complex64| z.conj(), &|z, w| z * w, &|a, z| z * a, &|z, w| z + w, Complex64::new(0.0, 0.0)))
    }

    fn build_tensor(&self) -> Vec<Vec<Poly>> {
        let vars = self.vars();
        let n = self.n;
        let mut entries = vec![vec![CPoly::zero(vars); n]; n];
        for (k, c) in self.coords.iter().enumerate() {
            let v = Poly::var(vars, k);
            let e = &mut entries[c.row][c.col];
            if c.weight == HALF {
                e.re = e.re.add(&v);
            } else {
                e.im = e.im.add(&v);
            }
        }
        let entry = |i: usize, j: usize| entries[i][j].clone();
        let zero = CPoly::zero(vars);
        let mut tensor = vec![vec![Poly::zero(vars); vars]; vars];
        for (a, ca) in self.coords.iter().enumerate() {
            for (b_idx, cb) in self.coords.iter().enumerate() {
                let u = (ca.row, ca.col);
                let v = (cb.row, cb.col);
                let plain = entry_bracket(n, self.mixed.weight(), u, v, false, &entry, &|z: &CPoly| z.conj(), &|z, w| z.mul(w), &|s, z: CPoly| z.scale(s), &|z, w: CPoly| z.add(&w), zero.clone());
                let mixed = entry_bracket(n, self.mixed.weight(), u, v, true, &entry, &|z: &CPoly| z.conj(), &|z, w| z.mul(w), &|s, z: CPoly| z.scale(s), &|z, w: CPoly| z.add(&w), zero.clone());
                let total = plain
                    .scale(ca.weight * cb.weight)
                    .add(&mixed.scale(ca.weight * cb.weight.conj()));
                tensor[a][b_idx] = total.re.scale(2.0);
            }
        }
        tensor
    }

    /// Real Poisson tensor `P_αβ = {x_α, x_β}` at `x`.
    pub fn real_tensor(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.tensor.iter().map(|row| row.iter().map(|p| p.eval(x)).collect()).collect()
    }

    /// Real Poisson tensor assembled directly from [`BracketTable::bracket_coords`].
    pub fn real_tensor_from_entries(&self, b: &CMatrix) -> Vec<Vec<f64>> {
        self.coords
            .iter()
            .map(|ca| {
                self.coords
                    .iter()
                    .map(|cb| {
                        let u = (ca.row, ca.col);
                        let v = (cb.row, cb.col);
                        let plain = self.bracket_coords(b, u, v, false).expect("valid index");
                        let mixed = self.bracket_coords(b, u, v, true).expect("valid index");
                        2.0 * (ca.weight * cb.weight * plain + ca.weight * cb.weight.conj() * mixed).re
                    })
                    .collect()
            })
            .collect()
    }

    /// Polynomial Poisson tensor entry `{x_α, x_β}`.
    pub fn tensor_poly(&self, alpha: usize, beta: usize) -> &Poly {
        &self.tensor[alpha][beta]
    }

    /// The coordinate function `x_α` as a polynomial.
    pub fn coordinate_poly(&self, alpha: usize) -> Poly {
        Poly::var(self.vars(), alpha)
    }

    /// `b_ij` as a complex polynomial in the real coordinates.
    pub fn entry_poly(&self, row: usize, col: usize) -> CPoly {
        let vars = self.vars();
        if row > col {
            return CPoly::zero(vars);
        }
        let re = Poly::var(vars, self.coordinate_index(row, col, false).expect("upper index"));
        if row == col {
            CPoly::real(re)
        } else {
            CPoly::new(re, Poly::var(vars, self.coordinate_index(row, col, true).expect("upper index")))
        }
    }

    /// `{f, g}` as a polynomial.
    pub fn bracket_poly(&self, f: &Poly, g: &Poly) -> Poly {
        let vars = self.vars();
        let df: Vec<Poly> = (0..vars).map(|a| f.derivative(a)).collect();
        let dg: Vec<Poly> = (0..vars).map(|b| g.derivative(b)).collect();
        let mut out = Poly::zero(vars);
        for a in 0..vars {
            if df[a].is_zero() {
                continue;
            }
            let mut inner = Poly::zero(vars);
            for b in 0..vars {
                if dg[b].is_zero() || self.tensor[a][b].is_zero() {
                    continue;
                }
                inner = inner.add(&self.tensor[a][b].mul(&dg[b]));
            }
            out = out.add(&df[a].mul(&inner));
        }
        out
    }

    /// `∇f · P(x) · ∇g`.
    pub fn bracket_gradients(&self, x: &[f64], df: &[f64], dg: &[f64]) -> f64 {
        let p = self.real_tensor(x);
        let mut acc = 0.0;
        for (a, row) in p.iter().enumerate() {
            if df[a] == 0.0 {
                continue;
            }
            acc += df[a] * row.iter().zip(dg).map(|(pab, g)| pab * g).sum::<f64>();
        }
        acc
    }
}

/// Shared literal evaluation of the two entry formulas over any coefficient ring.
#[allow(clippy::too_many_arguments)]
fn entry_bracket<T: Clone>(
    n: usize,
    sum_weight: f64,
    (m, j): (usize, usize),
    (k, l): (usize, usize),
    conj_second: bool,
    entry: &dyn Fn(usize, usize) -> T,
    conj: &dyn Fn(&T) -> T,
    mul: &dyn Fn(&T, &T) -> T,
    scale: &dyn Fn(Complex64, T) -> T,
    add: &dyn Fn(T, T) -> T,
    zero: T,
) -> T {
    let get = |r: usize, c: usize| if r <= c { Some(entry(r, c)) } else { None };
    if !conj_second {
        let coeff = delta(m, k) + 2.0 * theta(m as isize - k as isize) - delta(l, j) - 2.0 * theta(l as isize - j as isize);
        if coeff == 0.0 {
            return zero;
        }
        return match (get(k, j), get(m, l)) {
            (Some(a), Some(b)) => scale(I * coeff, mul(&a, &b)),
            _ => zero,
        };
    }
    let mut total = zero.clone();
    let coeff = delta(m, k) - delta(j, l);
    if coeff != 0.0 {
        total = add(total, scale(I * coeff, mul(&entry(m, j), &conj(&entry(k, l)))));
    }
    if m == k {
        for beta in (m + 1)..n {
            if let (Some(a), Some(b)) = (get(beta, j), get(beta, l)) {
                total = add(total, scale(I * sum_weight, mul(&a, &conj(&b))));
            }
        }
    }
    if j == l {
        for alpha in 0..j {
            if let (Some(a), Some(b)) = (get(m, alpha), get(k, alpha)) {
                total = add(total, scale(-I * sum_weight, mul(&a, &conj(&b))));
            }
        }
    }
    total
}

/// A smooth real function of the real coordinates.
pub trait Observable: Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        fd_gradient(&|y: &[f64]| self.value(y), x, FD_STEP)
    }

    /// Whether [`Observable::gradient`] is exact.
    fn is_analytic(&self) -> bool {
        false
    }
}

impl Observable for Poly {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        Poly::gradient(self, x)
    }

    fn is_analytic(&self) -> bool {
        true
    }
}

/// Closure-backed observable with finite-difference gradients.
pub struct FnObservable<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Observable for FnObservable<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// Fourth-order central differences with step `rel_step · max(1, |x_i|)`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], rel_step: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = rel_step * x[i].abs().max(1.0);
            let mut at = |d: f64| {
                y[i] = x[i] + d;
                let v = f(&y);
                y[i] = x[i];
                v
            };
            let (f2, f1, m1, m2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
            (-f2 + 8.0 * f1 - 8.0 * m1 + m2) / (12.0 * h)
        })
        .collect()
}

/// `{f, g}(x)`.
pub fn bracket_fn(table: &BracketTable, x: &[f64], f: &dyn Observable, g: &dyn Observable) -> f64 {
    table.bracket_gradients(x, &f.gradient(x), &g.gradient(x))
}

/// Like [`bracket_fn`], but finite-difference gradients are cross-checked at
/// two step sizes and rejected if they disagree beyond `tolerance`.
pub fn bracket_fn_checked(
    table: &BracketTable,
    x: &[f64],
    f: &dyn Observable,
    g: &dyn Observable,
    tolerance: f64,
) -> Result<f64> {
    for obs in [f, g] {
        if obs.is_analytic() {
            continue;
        }
        let coarse = obs.gradient(x);
        let fine = fd_gradient(&|y: &[f64]| obs.value(y), x, 0.5 * FD_STEP);
        let scale = coarse.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let diff = coarse.iter().zip(&fine).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if diff > tolerance * scale {
            return Err(Error::ToleranceExceeded {
                what: "finite-difference gradient mismatch".into(),
                value: diff,
                bound: tolerance * scale,
            });
        }
    }
    Ok(bracket_fn(table, x, f, g))
}

/// `|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|` with exact polynomial inner brackets.
pub fn jacobi_residual_poly(table: &BracketTable, x: &[f64], f: &Poly, g: &Poly, h: &Poly) -> f64 {
    let gh = table.bracket_poly(g, h);
    let hf = table.bracket_poly(h, f);
    let fg = table.bracket_poly(f, g);
    let total = bracket_fn(table, x, f, &gh) + bracket_fn(table, x, g, &hf) + bracket_fn(table, x, h, &fg);
    total.abs()
}

/// Cyclic Jacobi residual with nested finite-difference gradients.
pub fn jacobi_residual_fd(
    table: &BracketTable,
    x: &[f64],
    f: &dyn Observable,
    g: &dyn Observable,
    h: &dyn Observable,
) -> f64 {
    let outer = |a: &dyn Observable, b: &dyn Observable, c: &dyn Observable| {
        let inner = |y: &[f64]| fd_bracket(table, y, b, c);
        let da = fd_gradient(&|z: &[f64]| a.value(z), x, FD_STEP);
        let di = fd_gradient(&inner, x, FD_STEP);
        table.bracket_gradients(x, &da, &di)
    };
    (outer(f, g, h) + outer(g, h, f) + outer(h, f, g)).abs()
}

fn fd_bracket(table: &BracketTable, y: &[f64], a: &dyn Observable, b: &dyn Observable) -> f64 {
    let da = fd_gradient(&|z: &[f64]| a.value(z), y, FD_STEP);
    let db = fd_gradient(&|z: &[f64]| b.value(z), y, FD_STEP);
    table.bracket_gradients(y, &da, &db)
}

/// `max_α |{f, x_α}(x)|`: vanishes when `f` is central.
pub fn center_check(table: &BracketTable, x: &[f64], f: &dyn Observable) -> f64 {
    let df = f.gradient(x);
    let p = table.real_tensor(x);
    (0..table.vars())
        .map(|b| (0..table.vars()).map(|a| df[a] * p[a][b]).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// `tr((b b†)^k)` as a polynomial in the real coordinates.
pub fn trace_power_poly(table: &BracketTable, k: usize) -> Poly {
    let n = table.dim();
    let vars = table.vars();
    let b: Vec<Vec<CPoly>> = (0..n).map(|i| (0..n).map(|j| table.entry_poly(i, j)).collect()).collect();
    let matmul = |a: &Vec<Vec<CPoly>>, c: &Vec<Vec<CPoly>>| -> Vec<Vec<CPoly>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(CPoly::zero(vars), |acc, m| {
                            if a[i][m].is_zero() || c[m][j].is_zero() {
                                acc
                            } else {
                                acc.add(&a[i][m].mul(&c[m][j]))
                            }
                        })
                    })
                    .collect()
            })
            .collect()
    };
    let b_dag: Vec<Vec<CPoly>> = (0..n).map(|i| (0..n).map(|j| b[j][i].conj()).collect()).collect();
    let gram = matmul(&b, &b_dag);
    let mut power = gram.clone();
    for _ in 1..k.max(1) {
        power = matmul(&power, &gram);
    }
    (0..n).fold(Poly::zero(vars), |acc, i| acc.add(&power[i][i].re))
}

/// Basis elements of su(n) used as linear coordinates `c_Z(b) = Im tr(Z (β₀ + β₊))`
/// with `b = e^{β₀} e^{β₊}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieBasis {
    /// `i (E_aa − E_{a+1,a+1})`.
    pub torus: Vec<CMatrix>,
    /// `E_jk − E_kj` and `i (E_jk + E_kj)` for `j < k`.
    pub off: Vec<CMatrix>,
}

impl LieBasis {
    pub fn new(n: usize) -> Self {
        let unit = |i: usize, j: usize, z: Complex64| {
            let mut m = CMatrix::zeros(n, n);
            m[(i, j)] = z;
            m
        };
        let one = Complex64::new(1.0, 0.0);
        let torus = (0..n - 1).map(|a| unit(a, a, I) - unit(a + 1, a + 1, I)).collect();
        let mut off = Vec::new();
        for j in 0..n {
            for k in (j + 1)..n {
                off.push(unit(j, k, one) - unit(k, j, one));
                off.push(unit(j, k, I) + unit(k, j, I));
            }
        }
        LieBasis { torus, off }
    }
}

/// `β₀ + β₊` for `b = e^{β₀} e^{β₊}`.
pub fn log_coordinates(b: &CMatrix) -> CMatrix {
    let n = b.nrows();
    let mut unipotent = b.clone();
    let mut beta0 = CMatrix::zeros(n, n);
    for i in 0..n {
        let d = b[(i, i)].re;
        beta0[(i, i)] = Complex64::new(d.ln(), 0.0);
        for j in 0..n {
            unipotent[(i, j)] /= d;
        }
    }
    beta0 + nilpotent_log(&UpperUnipotent::from_raw(unipotent))
}

fn pairing(z: &CMatrix, beta: &CMatrix) -> f64 {
    (z * beta).trace().im
}

/// Residuals of the linearized bracket relations at one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationRow {
    pub scale: f64,
    /// `max |{β₀, β₀}|`.
    pub torus_torus: f64,
    /// `max |{c_Y, c_X} − c_{[Y,X]}|`, exact at every scale.
    pub off_torus: f64,
    /// `max |{c_Y, c_Y'} − c_{[Y,Y']}|`, second order in the scale.
    pub off_off: f64,
    /// `max |c_{[Y,Y']}|`, the size of the linear term.
    pub linear_size: f64,
}

/// Compares the brackets of the linear coordinates at `b = e^{s β₀} e^{s β₊}`
/// with the Lie–Poisson bracket of su(n).
pub fn linearization_check(beta0: &[f64], beta_plus: &CMatrix, scale: f64) -> Result<LinearizationRow> {
    let n = beta0.len();
    if beta_plus.nrows() != n || (beta0.iter().sum::<f64>()).abs() > 1e-12 {
        return Err(Error::InvalidInput("beta0 must be centered and match beta_plus in size".into()));
    }
    let table = BracketTable::new(n)?;
    let upper = unipotent_exp(&(beta_plus * Complex64::new(scale, 0.0)))?;
    let e0: Vec<f64> = beta0.iter().map(|x| (scale * x).exp()).collect();
    let b = CMatrix::from_fn(n, n, |i, j| upper.as_matrix()[(i, j)] * e0[i]);
    let x = table.coordinates(&b);
    let basis = LieBasis::new(n);
    let coord = |z: &CMatrix| {
        let z = z.clone();
        let t = table.clone();
        FnObservable(move |y: &[f64]| pairing(&z, &log_coordinates(&t.matrix(y))))
    };
    let beta_total = log_coordinates(&b);
    let bracket = |z: &CMatrix, w: &CMatrix| bracket_fn(&table, &x, &coord(z), &coord(w));
    let expected = |z: &CMatrix, w: &CMatrix| pairing(&(z * w - w * z), &beta_total);

    let mut row = LinearizationRow {
        scale,
        torus_torus: 0.0,
        off_torus: 0.0,
        off_off: 0.0,
        linear_size: 0.0,
    };
    for (a, xa) in basis.torus.iter().enumerate() {
        for xb in basis.torus.iter().skip(a + 1) {
            row.torus_torus = row.torus_torus.max(bracket(xa, xb).abs());
        }
    }
    for y in &basis.off {
        for xg in &basis.torus {
            row.off_torus = row.off_torus.max((bracket(y, xg) - expected(y, xg)).abs());
        }
    }
    for (i, yi) in basis.off.iter().enumerate() {
        for yj in basis.off.iter().skip(i + 1) {
            let e = expected(yi, yj);
            row.linear_size = row.linear_size.max(e.abs());
            row.off_off = row.off_off.max((bracket(yi, yj) - e).abs());
        }
    }
    Ok(row)
}

/// Linearization residuals over a ladder of scales and the log-log slope of
/// the `{β₊, β₊}` residual.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationLadder {
    pub rows: Vec<LinearizationRow>,
    pub slope: f64,
}

impl LinearizationLadder {
    pub fn require_slope(&self, min_slope: f64) -> Result<()> {
        if self.slope < min_slope {
            return Err(Error::ToleranceExceeded {
                what: "linearization residual slope deficit".into(),
                value: min_slope - self.slope,
                bound: 0.0,
            });
        }
        Ok(())
    }
}

pub fn linearization_ladder(beta0: &[f64], beta_plus: &CMatrix, scales: &[f64]) -> Result<LinearizationLadder> {
    let rows = scales
        .iter()
        .map(|&s| linearization_check(beta0, beta_plus, s))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.scale.ln(), r.off_off.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Ok(LinearizationLadder { rows, slope })
}
