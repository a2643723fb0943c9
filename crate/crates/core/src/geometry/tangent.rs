//! Holomorphic tangent spaces H_p^J(E) = T_p(E) ∩ J(p) T_p(E).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::manifold::GenericSubmanifold;
use super::structure::AlmostComplexStructure;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, null_space, to_complex, C64};

/// Tolerance on |r(p)| for a base point.
pub const ON_MANIFOLD_TOLERANCE: f64 = 1e-9;
/// Relative singular value threshold of the kernel computations.
pub const KERNEL_THRESHOLD: f64 = 1e-9;

/// Bases of H_p^J(E) and T_p(E) at a point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TangentFrame {
    pub point: Vec<f64>,
    /// J(p)-adapted basis e_1, .., e_{n-m} of H as complex n-vectors; the real
    /// span of {e_k, J(p) e_k} is H.
    pub holomorphic: Vec<Vec<C64>>,
    /// Orthonormal real basis of H (2(n-m) vectors).
    pub holomorphic_real: Vec<Vec<f64>>,
    /// Orthonormal real basis of T_p(E) (2n-m vectors).
    pub tangent: Vec<Vec<f64>>,
    /// max distance of J(p) applied to H from H.
    pub stability_defect: f64,
}

/// Orthonormal basis of {v : D v = 0, D J v = 0} for a k x 2n differential D.
pub fn holomorphic_kernel(d: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    let stacked = {
        let dj = d * j;
        let mut s = DMatrix::zeros(2 * d.nrows(), d.ncols());
        s.rows_mut(0, d.nrows()).copy_from(d);
        s.rows_mut(d.nrows(), d.nrows()).copy_from(&dj);
        s
    };
    null_space(&stacked, KERNEL_THRESHOLD).1
}

/// Split an orthonormal basis of a J-stable space into a J-adapted system
/// e_1, J e_1, e_2, J e_2, ...; returns the e_k.
pub fn adapted_basis(basis: &DMatrix<f64>, j: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let mut span: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    let project_out = |v: &DVector<f64>, span: &[DVector<f64>]| {
        let mut w = v.clone();
        for s in span {
            w -= s * s.dot(&w);
        }
        w
    };
    for col in basis.column_iter() {
        let c = project_out(&col.into_owned(), &span);
        if c.norm() < 1e-8 {
            continue;
        }
        let e = c.normalize();
        let je = j * &e;
        span.push(e.clone());
        let jc = project_out(&je, &span);
        if jc.norm() > 1e-8 {
            span.push(jc.normalize());
        }
        out.push(e);
    }
    out
}

/// H_p^J(E) and T_p(E) at p.
pub fn holomorphic_tangent(e: &GenericSubmanifold, j: &dyn AlmostComplexStructure, p: &[f64]) -> Result<TangentFrame> {
    let residual = e.defining(p).iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if residual > ON_MANIFOLD_TOLERANCE {
        return Err(Error::OffManifold { residual, tolerance: ON_MANIFOLD_TOLERANCE });
    }
    let jp = j.eval(p);
    let d = e.defining_jacobian(p);
    let h = holomorphic_kernel(&d, &jp);
    let expected = e.n() - e.m();
    if h.ncols() != 2 * expected {
        return Err(Error::NonGenerating { expected, found: h.ncols() / 2 });
    }
    let jh = &jp * &h;
    let stability_defect = max_abs(&(&jh - &h * (h.transpose() * &jh)));
    let adapted = adapted_basis(&h, &jp);
    let tangent = null_space(&d, KERNEL_THRESHOLD).1;
    Ok(TangentFrame {
        point: p.to_vec(),
        holomorphic: adapted.iter().map(|v| to_complex(v.as_slice())).collect(),
        holomorphic_real: h.column_iter().map(|c| c.iter().copied().collect()).collect(),
        tangent: tangent.column_iter().map(|c| c.iter().copied().collect()).collect(),
        stability_defect,
    })
}
