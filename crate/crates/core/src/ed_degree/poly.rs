//! Sparse multivariate polynomials with complex coefficients.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// `Σ c_α x^α` over a fixed number of variables. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, Complex64::new(1.0, 0.0));
        p
    }

    /// Polynomial from `(coefficient, exponents)` pairs; repeated exponents are summed.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Complex64, Vec<u32>)>) -> Self {
        let mut p = Self::zero(nvars);
        for (c, e) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == Complex64::new(0.0, 0.0) {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Complex64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Sum of coefficient moduli.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (c * s, e.clone())))
    }

    /// Drops coefficients with modulus below `tol` times the largest one.
    pub fn prune(&self, tol: f64) -> Self {
        let max = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        let mut p = self.clone();
        p.terms.retain(|_, c| c.norm() > tol * max);
        p
    }

    pub fn derivative(&self, i: usize) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms.iter().filter(|(e, _)| e[i] > 0).map(|(e, c)| {
                let mut d = e.clone();
                d[i] -= 1;
                (c * e[i] as f64, d)
            }),
        )
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    pub fn evaluate(&self, x: &[Complex64]) -> Complex64 {
        assert_eq!(x.len(), self.nvars, "point dimension");
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(x).fold(*c, |acc, (&k, xi)| if k == 0 { acc } else { acc * xi.powu(k) }))
            .sum()
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self + &(-rhs)
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut p = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(e, ca * cb);
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn arithmetic_and_cancellation() {
        let x = MultiPoly::var(2, 0);
        let y = MultiPoly::var(2, 1);
        let s = &x + &y;
        let d = &x - &y;
        let prod = &s * &d; // x² − y²
        assert_eq!(prod.num_terms(), 2);
        assert_eq!(prod.total_degree(), 2);
        assert_eq!(prod.evaluate(&[c(3.0), c(2.0)]), c(5.0));
        assert!((&prod - &prod).is_zero());
    }

    #[test]
    fn derivative_of_monomial() {
        let p = MultiPoly::from_terms(2, [(c(2.0), vec![3, 1]), (c(1.0), vec![0, 0])]);
        let dx = p.derivative(0);
        assert_eq!(dx, MultiPoly::from_terms(2, [(c(6.0), vec![2, 1])]));
        assert!(p.derivative(1).derivative(1).is_zero());
        assert_eq!(p.coefficient_norm(), 3.0);
    }
}
