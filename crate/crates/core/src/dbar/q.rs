//! The complex matrix Q_J of the J-holomorphy equation.
//!
//! A map f is J-holomorphic (f_y = J f_x) iff f_ζ̄ + Q(f) conj(f_ζ) = 0, where
//! Q(Z) conj(v) is the action of the anti-linear endomorphism
//! A(Z) = -(J_st + J(Z))^{-1} (J_st - J(Z)).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::structure::AlmostComplexStructure;
use crate::integral::{dbar, dzeta, DiscFunction, DiscMap};
use crate::linalg::{antilinear_to_complex, antilinearity_defect, j_st, max_abs, C64};

/// Tolerance of the anti-linearity self-check on A.
pub const ANTILINEAR_TOLERANCE: f64 = 1e-9;

/// Real anti-linear endomorphism A(Z).
pub fn q_endomorphism(j: &dyn AlmostComplexStructure, z: &[f64]) -> Result<DMatrix<f64>> {
    let n = j.dim_complex();
    let jz = j.eval(z);
    let js = j_st(n);
    let lu = (&js + &jz).lu();
    let rhs = -(&js - &jz);
    let a = lu.solve(&rhs).ok_or_else(|| Error::SingularSum { point: z.to_vec() })?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSum { point: z.to_vec() });
    }
    let defect = antilinearity_defect(&a);
    if defect > ANTILINEAR_TOLERANCE {
        return Err(Error::NotAntiLinear { defect, tolerance: ANTILINEAR_TOLERANCE });
    }
    Ok(a)
}

/// Complex n x n matrix Q_J(Z).
pub fn q_matrix(j: &dyn AlmostComplexStructure, z: &[f64]) -> Result<DMatrix<C64>> {
    Ok(antilinear_to_complex(&q_endomorphism(j, z)?))
}

/// Z -> Q_J(Z) for a fixed structure.
#[derive(Debug, Clone, Copy)]
pub struct QField<'a> {
    pub structure: &'a dyn AlmostComplexStructure,
}

impl<'a> QField<'a> {
    pub fn new(structure: &'a dyn AlmostComplexStructure) -> Self {
        Self { structure }
    }

    pub fn eval(&self, z: &[f64]) -> Result<DMatrix<C64>> {
        q_matrix(self.structure, z)
    }

    /// Q at every node of a disc, after checking the disc stays in the domain.
    pub fn along(&self, f: &DiscMap) -> Result<Vec<DMatrix<C64>>> {
        check_range(self.structure, f)?;
        (0..f.grid().len())
            .into_par_iter()
            .map(|idx| self.eval(&f.real_at(idx)))
            .collect()
    }

    /// Smallest C with |Q(Z)| <= C |J(Z) - J_st| over the sample points.
    pub fn fit_bound(&self, points: &[Vec<f64>]) -> Result<f64> {
        let js = j_st(self.structure.dim_complex());
        let mut c = 0.0_f64;
        for p in points {
            let dist = max_abs(&(self.structure.eval(p) - &js));
            let q = self.eval(p)?.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
            if dist > 0.0 {
                c = c.max(q / dist);
            } else if q > 0.0 {
                return Ok(f64::INFINITY);
            }
        }
        Ok(c)
    }
}

pub(crate) fn check_range(j: &dyn AlmostComplexStructure, f: &DiscMap) -> Result<()> {
    let radius = j.domain_radius();
    if radius.is_finite() {
        let norm = f.sup_norm();
        if norm > radius {
            return Err(Error::RangeExcursion { norm, radius });
        }
    }
    if f.dim() != j.dim_complex() {
        return Err(Error::Dimension(format!(
            "disc in C^{} for a structure on C^{}",
            f.dim(),
            j.dim_complex()
        )));
    }
    Ok(())
}

/// Components of Q(f) conj(f_ζ) on the grid.
pub(crate) fn q_term(f: &DiscMap, q: &[DMatrix<C64>]) -> Vec<DiscFunction> {
    let grid = f.grid();
    let dz: Vec<DiscFunction> = f.components.iter().map(dzeta).collect();
    let n = f.dim();
    let mut out = vec![vec![C64::new(0.0, 0.0); grid.len()]; n];
    for (idx, qm) in q.iter().enumerate() {
        for a in 0..n {
            out[a][idx] = (0..n).map(|b| qm[(a, b)] * dz[b].values()[idx].conj()).sum();
        }
    }
    out.into_iter()
        .map(|v| DiscFunction::from_values(grid, v).expect("grid-sized values"))
        .collect()
}

/// f_ζ̄ + Q(f) conj(f_ζ) on the grid; zero iff f is J-holomorphic.
pub fn jholo_residual(f: &DiscMap, j: &dyn AlmostComplexStructure) -> Result<DiscMap> {
    let q = QField::new(j).along(f)?;
    let term = q_term(f, &q);
    let comps = f
        .components
        .iter()
        .zip(&term)
        .map(|(fc, t)| dbar(fc).add(t))
        .collect();
    DiscMap::new(comps)
}

/// Largest modulus of the residual over the interior rings.
///
/// The boundary ring is excluded: one-sided radial differentiation there is
/// the least accurate and the equation is posed on the open disc.
pub fn jholo_residual_sup(f: &DiscMap, j: &dyn AlmostComplexStructure) -> Result<f64> {
    let res = jholo_residual(f, j)?;
    Ok(res
        .components
        .iter()
        .map(|c| c.interior_values().iter().fold(0.0_f64, |a, z| a.max(z.norm())))
        .fold(0.0, f64::max))
}
