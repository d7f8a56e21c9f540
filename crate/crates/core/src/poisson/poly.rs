//! Sparse real polynomials in a fixed number of real variables, and complex
//! polynomials as `(re, im)` pairs. Enough algebra to differentiate and
//! multiply the coordinate brackets exactly.

use std::collections::BTreeMap;

use num_complex::Complex64;

type Exponents = Vec<u8>;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    vars: usize,
    terms: BTreeMap<Exponents, f64>,
}

impl Poly {
    pub fn zero(vars: usize) -> Self {
        Poly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: usize, c: f64) -> Self {
        let mut p = Poly::zero(vars);
        if c != 0.0 {
            p.terms.insert(vec![0; vars], c);
        }
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(vars: usize, i: usize) -> Self {
        let mut e = vec![0; vars];
        e[i] = 1;
        let mut p = Poly::zero(vars);
        p.terms.insert(e, 1.0);
        p
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    /// Number of monomials.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, e: Exponents, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(e.clone()).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        if s == 0.0 {
            return Poly::zero(self.vars);
        }
        Poly {
            vars: self.vars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.vars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, c * e[i] as f64);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.vars];
        for (e, c) in &self.terms {
            for i in 0..self.vars {
                if e[i] == 0 {
                    continue;
                }
                let mut term = c * e[i] as f64;
                for (j, (&k, xj)) in e.iter().zip(x).enumerate() {
                    let power = if j == i { k - 1 } else { k };
                    term *= xj.powi(power as i32);
                }
                g[i] += term;
            }
        }
        g
    }
}

/// Complex-valued polynomial in real variables.
#[derive(Debug, Clone, PartialEq)]
pub struct CPoly {
    pub re: Poly,
    pub im: Poly,
}

impl CPoly {
    pub fn zero(vars: usize) -> Self {
        CPoly {
            re: Poly::zero(vars),
            im: Poly::zero(vars),
        }
    }

    pub fn real(p: Poly) -> Self {
        let vars = p.vars();
        CPoly {
            re: p,
            im: Poly::zero(vars),
        }
    }

    pub fn new(re: Poly, im: Poly) -> Self {
        CPoly { re, im }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, other: &CPoly) -> CPoly {
        CPoly::new(self.re.add(&other.re), self.im.add(&other.im))
    }

    pub fn sub(&self, other: &CPoly) -> CPoly {
        CPoly::new(self.re.sub(&other.re), self.im.sub(&other.im))
    }

    pub fn mul(&self, other: &CPoly) -> CPoly {
        CPoly::new(
            self.re.mul(&other.re).sub(&self.im.mul(&other.im)),
            self.re.mul(&other.im).add(&self.im.mul(&other.re)),
        )
    }

    pub fn scale(&self, z: Complex64) -> CPoly {
        CPoly::new(
            self.re.scale(z.re).sub(&self.im.scale(z.im)),
            self.re.scale(z.im).add(&self.im.scale(z.re)),
        )
    }

    pub fn conj(&self) -> CPoly {
        CPoly::new(self.re.clone(), self.im.scale(-1.0))
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_calculus() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        // (x + 2y)(x - y) = x² + xy - 2y²
        let p = x.add(&y.scale(2.0)).mul(&x.sub(&y));
        assert_eq!(p.len(), 3);
        assert_eq!(p.degree(), 2);
        let pt = [1.5, -0.5];
        assert!((p.eval(&pt) - (2.25 - 0.75 - 0.5)).abs() < 1e-15);
        let g = p.gradient(&pt);
        assert!((g[0] - (2.0 * 1.5 - 0.5)).abs() < 1e-15);
        assert!((g[1] - (1.5 + 2.0)).abs() < 1e-15);
        assert!((p.derivative(1).eval(&pt) - g[1]).abs() < 1e-15);
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn complex_products() {
        let z = CPoly::new(Poly::var(2, 0), Poly::var(2, 1));
        let modulus = z.mul(&z.conj());
        assert!(modulus.im.is_zero());
        assert!((modulus.eval(&[3.0, 4.0]).re - 25.0).abs() < 1e-14);
        let iz = z.scale(Complex64::new(0.0, 1.0));
        assert_eq!(iz.eval(&[3.0, 4.0]), Complex64::new(-4.0, 3.0));
    }
}
