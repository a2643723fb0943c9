//! Real polynomials in several variables, scalar and matrix valued.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn monomial(exps: &[u32], x: &[f64]) -> f64 {
    exps.iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product()
}

/// d/dx_i of the monomial.
fn monomial_partial(exps: &[u32], x: &[f64], i: usize) -> f64 {
    if exps[i] == 0 {
        return 0.0;
    }
    let mut p = exps[i] as f64;
    for (k, (&e, &v)) in exps.iter().zip(x).enumerate() {
        let e = if k == i { e - 1 } else { e };
        p *= v.powi(e as i32);
    }
    p
}

fn monomial_second(exps: &[u32], x: &[f64], i: usize, j: usize) -> f64 {
    let mut e: Vec<u32> = exps.to_vec();
    if e[i] == 0 {
        return 0.0;
    }
    let mut c = e[i] as f64;
    e[i] -= 1;
    if e[j] == 0 {
        return 0.0;
    }
    c *= e[j] as f64;
    e[j] -= 1;
    c * monomial(&e, x)
}

/// Scalar polynomial sum_k c_k x^{a_k}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub nvars: usize,
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl Polynomial {
    pub fn new(nvars: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if let Some((e, _)) = terms.iter().find(|(e, _)| e.len() != nvars) {
            return Err(Error::Dimension(format!(
                "monomial {e:?} has {} exponents, expected {nvars}",
                e.len()
            )));
        }
        Ok(Self { nvars, terms })
    }

    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: vec![] }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * monomial(e, x)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nvars)
            .map(|i| self.terms.iter().map(|(e, c)| c * monomial_partial(e, x, i)).sum())
            .collect()
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.nvars, self.nvars, |i, j| {
            self.terms.iter().map(|(e, c)| c * monomial_second(e, x, i, j)).sum()
        })
    }

    /// Total degree of the lowest-order term (None for the zero polynomial).
    pub fn min_degree(&self) -> Option<u32> {
        self.terms
            .iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, _)| e.iter().sum())
            .min()
    }
}

/// Matrix-valued polynomial sum_k M_k x^{a_k}.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    pub nvars: usize,
    pub rows: usize,
    pub cols: usize,
    pub terms: Vec<(Vec<u32>, DMatrix<f64>)>,
}

impl MatrixPolynomial {
    pub fn new(nvars: usize, rows: usize, cols: usize, terms: Vec<(Vec<u32>, DMatrix<f64>)>) -> Result<Self> {
        for (e, m) in &terms {
            if e.len() != nvars {
                return Err(Error::Dimension(format!("monomial {e:?} expects {nvars} exponents")));
            }
            if m.shape() != (rows, cols) {
                return Err(Error::Dimension(format!(
                    "coefficient matrix is {:?}, expected {:?}",
                    m.shape(),
                    (rows, cols)
                )));
            }
        }
        Ok(Self { nvars, rows, cols, terms })
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (e, m) in &self.terms {
            let v = monomial(e, x);
            if v != 0.0 {
                out += m * v;
            }
        }
        out
    }

    pub fn partial(&self, x: &[f64], i: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (e, m) in &self.terms {
            let v = monomial_partial(e, x, i);
            if v != 0.0 {
                out += m * v;
            }
        }
        out
    }

    /// Linear terms x_i M_i, one matrix per variable.
    pub fn linear(nvars: usize, mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let (rows, cols) = mats.first().map(|m| m.shape()).unwrap_or((0, 0));
        let terms = mats
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                let mut e = vec![0; nvars];
                e[i] = 1;
                (e, m)
            })
            .collect();
        Self::new(nvars, rows, cols, terms)
    }
}
