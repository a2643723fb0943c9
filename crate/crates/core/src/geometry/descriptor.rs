//! JSON descriptions of structures and submanifolds.
//!
//! Matrices are written as arrays of rows. Exponent vectors index the real
//! coordinates (x_1, y_1, ..., x_n, y_n) for structures and the graph
//! variables (Im z_1, .., Im z_m, Re w_1, Im w_1, ..) for submanifolds.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::manifold::GenericSubmanifold;
use super::structure::{
    ConjugatedStructure, PolynomialStructure, PushforwardStructure, ShearMap, StandardStructure, Structure,
};
use crate::error::{Error, Result};
use crate::polynomial::{MatrixPolynomial, Polynomial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixTerm {
    pub exponents: Vec<u32>,
    pub matrix: Vec<Vec<f64>>,
}

impl MatrixTerm {
    pub fn new(exponents: Vec<u32>, m: &DMatrix<f64>) -> Self {
        Self {
            exponents,
            matrix: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    fn to_matrix(&self, dim: usize) -> Result<DMatrix<f64>> {
        if self.matrix.len() != dim || self.matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::Config(format!("coefficient of {:?} is not {dim}x{dim}", self.exponents)));
        }
        Ok(DMatrix::from_fn(dim, dim, |r, c| self.matrix[r][c]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureDescriptor {
    Standard {
        n: usize,
    },
    /// J(Z) = sum of the terms.
    Polynomial {
        n: usize,
        #[serde(default)]
        retract: bool,
        terms: Vec<MatrixTerm>,
    },
    /// J(Z) = J_st + sum of the terms.
    Perturbation {
        n: usize,
        #[serde(default)]
        retract: bool,
        terms: Vec<MatrixTerm>,
    },
    /// J = P J_st P^{-1} with P = Id + sum of the terms.
    Conjugated {
        n: usize,
        terms: Vec<MatrixTerm>,
    },
    /// Direct image of J_st by Z -> Z - a |w|^2 e_z.
    ShearPushforward {
        n: usize,
        z_index: usize,
        w_index: usize,
        coefficient: f64,
    },
}

fn matrix_poly(n: usize, terms: &[MatrixTerm]) -> Result<MatrixPolynomial> {
    let t = terms
        .iter()
        .map(|t| Ok((t.exponents.clone(), t.to_matrix(2 * n)?)))
        .collect::<Result<Vec<_>>>()?;
    MatrixPolynomial::new(2 * n, 2 * n, 2 * n, t)
}

impl StructureDescriptor {
    pub fn dim_complex(&self) -> usize {
        match self {
            Self::Standard { n }
            | Self::Polynomial { n, .. }
            | Self::Perturbation { n, .. }
            | Self::Conjugated { n, .. }
            | Self::ShearPushforward { n, .. } => *n,
        }
    }

    pub fn build(&self) -> Result<Structure> {
        Ok(match self {
            Self::Standard { n } => Arc::new(StandardStructure { n: *n }),
            Self::Polynomial { n, retract, terms } => Arc::new(PolynomialStructure::new(*n, matrix_poly(*n, terms)?, *retract)?),
            Self::Perturbation { n, retract, terms } => {
                let t = matrix_poly(*n, terms)?.terms;
                Arc::new(PolynomialStructure::perturbation(*n, t, *retract)?)
            }
            Self::Conjugated { n, terms } => Arc::new(ConjugatedStructure::new(*n, matrix_poly(*n, terms)?)?),
            Self::ShearPushforward { n, z_index, w_index, coefficient } => {
                if z_index >= n || w_index >= n || z_index == w_index {
                    return Err(Error::Config(format!("shear indices ({z_index}, {w_index}) invalid in C^{n}")));
                }
                Arc::new(PushforwardStructure::new(
                    *n,
                    Arc::new(ShearMap { n: *n, z_index: *z_index, w_index: *w_index, coefficient: *coefficient }),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTerm {
    pub exponents: Vec<u32>,
    /// One coefficient per component of h.
    pub coefficients: Vec<f64>,
}

/// E = {Re z = h(Im z, w)} with polynomial h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldDescriptor {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub terms: Vec<GraphTerm>,
}

impl ManifoldDescriptor {
    pub fn build(&self) -> Result<GenericSubmanifold> {
        let nvars = self.m + 2 * (self.n - self.m.min(self.n));
        let mut comps = vec![Vec::new(); self.m];
        for t in &self.terms {
            if t.coefficients.len() != self.m {
                return Err(Error::Config(format!(
                    "term {:?} has {} coefficients for codimension {}",
                    t.exponents,
                    t.coefficients.len(),
                    self.m
                )));
            }
            for (j, c) in t.coefficients.iter().enumerate() {
                if *c != 0.0 {
                    comps[j].push((t.exponents.clone(), *c));
                }
            }
        }
        let polys = comps
            .into_iter()
            .map(|terms| Polynomial::new(nvars, terms))
            .collect::<Result<Vec<_>>>()?;
        GenericSubmanifold::polynomial(self.n, polys)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::structure::validate_structure;

    #[test]
    fn descriptors_build() {
        let s: StructureDescriptor = serde_json::from_str(
            r#"{"kind":"shear_pushforward","n":2,"z_index":0,"w_index":1,"coefficient":1.0}"#,
        )
        .unwrap();
        let j = s.build().unwrap();
        assert!(validate_structure(j.as_ref(), &[vec![0.1, 0.2, 0.3, 0.4]]).unwrap().passed);
        let m: ManifoldDescriptor = serde_json::from_str(
            r#"{"n":2,"m":1,"terms":[{"exponents":[0,2,0],"coefficients":[-1.0]},{"exponents":[0,0,2],"coefficients":[-1.0]}]}"#,
        )
        .unwrap();
        let e = m.build().unwrap();
        assert!((e.defining(&[-0.25, 0.0, 0.5, 0.0])[0]).abs() < 1e-15);
        let bad: StructureDescriptor = serde_json::from_str(r#"{"kind":"perturbation","n":1,"terms":[{"exponents":[0,0],"matrix":[[1.0]]}]}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
