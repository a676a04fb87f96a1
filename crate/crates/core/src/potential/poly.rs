//! Multivariate polynomials with exact derivatives.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub alpha: Vec<u32>,
    pub c: f64,
}

/// A polynomial Σ c_α x^α in `dim` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialFn {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl PolynomialFn {
    pub fn zero(dim: usize) -> Self {
        PolynomialFn {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate function x_i.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut a = vec![0; dim];
        a[i] = 1;
        let mut p = Self::zero(dim);
        p.add_term(a, 1.0);
        p
    }

    /// ½‖x‖².
    pub fn half_norm_sq(dim: usize) -> Self {
        Self::quadratic_form(&nalgebra::DMatrix::identity(dim, dim))
    }

    /// ½ xᵀ A x for symmetric A.
    pub fn quadratic_form(a: &nalgebra::DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut p = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut al = vec![0; n];
                al[i] += 1;
                al[j] += 1;
                p.add_term(al, 0.5 * a[(i, j)]);
            }
        }
        p
    }

    pub fn from_terms(dim: usize, terms: &[Term]) -> Result<Self, String> {
        let mut p = Self::zero(dim);
        for t in terms {
            if t.alpha.len() != dim {
                return Err(format!("multi-index {:?} has wrong length for dimension {dim}", t.alpha));
            }
            p.add_term(t.alpha.clone(), t.c);
        }
        Ok(p)
    }

    pub fn to_terms(&self) -> Vec<Term> {
        self.terms
            .iter()
            .map(|(a, &c)| Term { alpha: a.clone(), c })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.iter().sum()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, alpha: Vec<u32>, c: f64) {
        assert_eq!(alpha.len(), self.dim);
        let e = self.terms.entry(alpha).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (a, &c) in &other.terms {
            p.add_term(a.clone(), c);
        }
        p
    }

    pub fn scale(&self, f: f64) -> Self {
        let mut p = Self::zero(self.dim);
        for (a, &c) in &self.terms {
            p.add_term(a.clone(), c * f);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero(self.dim);
        for (a, &c) in &self.terms {
            for (b, &d) in &other.terms {
                let ab: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                p.add_term(ab, c * d);
            }
        }
        p
    }

    /// Polynomial in new variables y obtained by substituting x = B y + d.
    pub fn compose_affine(&self, b: &nalgebra::DMatrix<f64>, d: &[f64]) -> Self {
        let n = self.dim;
        let lin: Vec<PolynomialFn> = (0..n)
            .map(|i| {
                let mut l = Self::constant(n, d[i]);
                for j in 0..n {
                    l = l.add(&Self::coordinate(n, j).scale(b[(i, j)]));
                }
                l
            })
            .collect();
        let mut out = Self::zero(n);
        for (a, &c) in &self.terms {
            let mut t = Self::constant(n, c);
            for (i, &e) in a.iter().enumerate() {
                for _ in 0..e {
                    t = t.mul(&lin[i]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// ∂^β p evaluated at x.
    pub fn derivative(&self, beta: &[u32], x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (a, &c) in &self.terms {
            if a.iter().zip(beta).any(|(ai, bi)| bi > ai) {
                continue;
            }
            let mut v = c;
            for i in 0..self.dim {
                let (ai, bi) = (a[i], beta[i]);
                for j in 0..bi {
                    v *= (ai - j) as f64;
                }
                v *= x[i].powi((ai - bi) as i32);
            }
            total += v;
        }
        total
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.derivative(&vec![0; self.dim], x)
    }

    /// Derivative with respect to the listed coordinate indices (with repetition).
    pub fn partial(&self, idx: &[usize], x: &[f64]) -> f64 {
        let mut beta = vec![0u32; self.dim];
        for &i in idx {
            beta[i] += 1;
        }
        self.derivative(&beta, x)
    }
}

impl Serialize for PolynomialFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_terms().serialize(s)
    }
}
