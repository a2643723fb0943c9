//! Scalar fields and generating submanifolds in graph form.
//!
//! A submanifold of codimension m is E = {Re z = h(Im z, w)} with Z = (z, w),
//! z in C^m first. The graph variables are (Im z_1, .., Im z_m, Re w_1,
//! Im w_1, ..); the defining functions are r^j(Z) = Re z_j - h_j(Im z, w).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::polynomial::Polynomial;

/// Step of the central differences for gradients.
pub const GRADIENT_STEP: f64 = 1e-5;
/// Step of the central differences for Hessians built from values.
pub const HESSIAN_STEP: f64 = 1e-4;

/// A real function on R^d with first and second derivatives.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn nvars(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                y[i] = x[i] + GRADIENT_STEP;
                let p = self.value(&y);
                y[i] = x[i] - GRADIENT_STEP;
                let m = self.value(&y);
                y[i] = x[i];
                (p - m) / (2.0 * GRADIENT_STEP)
            })
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        fd_hessian(|y| self.value(y), x)
    }
}

/// Symmetric central-difference Hessian from values.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let h = HESSIAN_STEP;
    let mut y = x.to_vec();
    let f0 = f(x);
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        y[i] = x[i] + h;
        let p = f(&y);
        y[i] = x[i] - h;
        let m = f(&y);
        y[i] = x[i];
        out[(i, i)] = (p - 2.0 * f0 + m) / (h * h);
        for j in 0..i {
            let mut e = |si: f64, sj: f64| {
                y[i] = x[i] + si * h;
                y[j] = x[j] + sj * h;
                let v = f(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

pub type Field = Arc<dyn ScalarField>;

impl ScalarField for Polynomial {
    fn nvars(&self) -> usize {
        self.nvars
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        Polynomial::gradient(self, x)
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        Polynomial::hessian(self, x)
    }
}

/// A scalar field given by a closure; derivatives by differences.
pub struct FnField<F> {
    nvars: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnField<F> {
    pub fn new(nvars: usize, f: F) -> Self {
        Self { nvars, f }
    }
}

impl<F> fmt::Debug for FnField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnField({} vars)", self.nvars)
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> ScalarField for FnField<F> {
    fn nvars(&self) -> usize {
        self.nvars
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// The map h: R^m x C^{n-m} -> R^m of a graph.
pub trait GraphFunction: Send + Sync + fmt::Debug {
    /// Number of components m.
    fn codim(&self) -> usize;

    /// Number of real graph variables m + 2(n - m).
    fn nvars(&self) -> usize;

    fn eval(&self, v: &[f64]) -> Vec<f64>;

    /// m x nvars Jacobian.
    fn jacobian(&self, v: &[f64]) -> DMatrix<f64> {
        let mut y = v.to_vec();
        let mut out = DMatrix::zeros(self.codim(), v.len());
        for i in 0..v.len() {
            y[i] = v[i] + GRADIENT_STEP;
            let p = self.eval(&y);
            y[i] = v[i] - GRADIENT_STEP;
            let m = self.eval(&y);
            y[i] = v[i];
            for j in 0..self.codim() {
                out[(j, i)] = (p[j] - m[j]) / (2.0 * GRADIENT_STEP);
            }
        }
        out
    }

    /// Hessian of component j.
    fn hessian(&self, j: usize, v: &[f64]) -> DMatrix<f64> {
        fd_hessian(|y| self.eval(y)[j], v)
    }
}

/// h with polynomial components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialGraph {
    pub components: Vec<Polynomial>,
}

impl PolynomialGraph {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Dimension("graph needs at least one component".into()));
        };
        if components.iter().any(|p| p.nvars != first.nvars) {
            return Err(Error::Dimension("graph components have different arity".into()));
        }
        Ok(Self { components })
    }
}

impl GraphFunction for PolynomialGraph {
    fn codim(&self) -> usize {
        self.components.len()
    }
    fn nvars(&self) -> usize {
        self.components[0].nvars
    }
    fn eval(&self, v: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(v)).collect()
    }
    fn jacobian(&self, v: &[f64]) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = self.components.iter().map(|p| p.gradient(v)).collect();
        DMatrix::from_fn(rows.len(), v.len(), |j, i| rows[j][i])
    }
    fn hessian(&self, j: usize, v: &[f64]) -> DMatrix<f64> {
        self.components[j].hessian(v)
    }
}

/// h_s(y, w) = out * h(y_scale y, w_scale w): the graph of a dilated manifold.
#[derive(Debug, Clone)]
pub struct ScaledGraph {
    pub inner: Arc<dyn GraphFunction>,
    pub y_scale: f64,
    pub w_scale: f64,
    pub out_scale: f64,
}

impl ScaledGraph {
    fn scales(&self) -> Vec<f64> {
        let m = self.inner.codim();
        (0..self.inner.nvars())
            .map(|i| if i < m { self.y_scale } else { self.w_scale })
            .collect()
    }

    fn pull(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(self.scales()).map(|(x, s)| x * s).collect()
    }
}

impl GraphFunction for ScaledGraph {
    fn codim(&self) -> usize {
        self.inner.codim()
    }
    fn nvars(&self) -> usize {
        self.inner.nvars()
    }
    fn eval(&self, v: &[f64]) -> Vec<f64> {
        self.inner.eval(&self.pull(v)).into_iter().map(|x| x * self.out_scale).collect()
    }
    fn jacobian(&self, v: &[f64]) -> DMatrix<f64> {
        let s = self.scales();
        let mut jac = self.inner.jacobian(&self.pull(v)) * self.out_scale;
        for (i, si) in s.iter().enumerate() {
            jac.column_mut(i).scale_mut(*si);
        }
        jac
    }
    fn hessian(&self, j: usize, v: &[f64]) -> DMatrix<f64> {
        let s = self.scales();
        let h = self.inner.hessian(j, &self.pull(v));
        DMatrix::from_fn(h.nrows(), h.ncols(), |a, b| h[(a, b)] * s[a] * s[b] * self.out_scale)
    }
}

/// Second-order Taylor data r^j = z_j + conj(z_j) + 2 Re Q_j(z, w) + H_j(z, w) + ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticData {
    /// Complex symmetric n x n matrices of the forms Q_j.
    pub q_forms: Vec<DMatrix<C64>>,
    /// Hermitian n x n matrices of the forms H_j.
    pub h_forms: Vec<DMatrix<C64>>,
}

/// Tolerance on |h(0)| and |grad h(0)|.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// E = {Re z = h(Im z, w)} in C^n, codimension m.
#[derive(Debug, Clone)]
pub struct GenericSubmanifold {
    n: usize,
    m: usize,
    h: Arc<dyn GraphFunction>,
    pub quadratic: Option<QuadraticData>,
}

impl GenericSubmanifold {
    pub fn new(n: usize, h: Arc<dyn GraphFunction>) -> Result<Self> {
        let m = h.codim();
        if m == 0 || m > n {
            return Err(Error::Dimension(format!("codimension {m} in C^{n}")));
        }
        if h.nvars() != m + 2 * (n - m) {
            return Err(Error::Dimension(format!(
                "graph function of {} variables for codimension {m} in C^{n}",
                h.nvars()
            )));
        }
        let s = Self { n, m, h, quadratic: None };
        let dev = s.normalization_defect();
        if dev > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "graph is not normalized at 0: |h(0)| + |grad h(0)| = {dev:.3e}"
            )));
        }
        Ok(s)
    }

    pub fn polynomial(n: usize, components: Vec<Polynomial>) -> Result<Self> {
        Self::new(n, Arc::new(PolynomialGraph::new(components)?))
    }

    /// max(|h(0)|, |grad h(0)|).
    pub fn normalization_defect(&self) -> f64 {
        let zero = vec![0.0; self.h.nvars()];
        let v = self.h.eval(&zero).iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let g = self.h.jacobian(&zero).iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        v.max(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn graph(&self) -> &Arc<dyn GraphFunction> {
        &self.h
    }

    /// Graph variables (Im z, w) of an ambient real point.
    pub fn graph_vars(&self, z: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.m).map(|j| z[2 * j + 1]).collect();
        v.extend_from_slice(&z[2 * self.m..]);
        v
    }

    /// r(Z) in R^m.
    pub fn defining(&self, z: &[f64]) -> Vec<f64> {
        let h = self.h.eval(&self.graph_vars(z));
        (0..self.m).map(|j| z[2 * j] - h[j]).collect()
    }

    /// m x 2n Jacobian of r.
    pub fn defining_jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        let gj = self.h.jacobian(&self.graph_vars(z));
        let mut out = DMatrix::zeros(self.m, 2 * self.n);
        for j in 0..self.m {
            out[(j, 2 * j)] = 1.0;
            for k in 0..self.m {
                out[(j, 2 * k + 1)] = -gj[(j, k)];
            }
            for i in 0..2 * (self.n - self.m) {
                out[(j, 2 * self.m + i)] = -gj[(j, self.m + i)];
            }
        }
        out
    }

    /// Component r^j as a scalar field on R^{2n}.
    pub fn component(&self, j: usize) -> DefiningComponent {
        DefiningComponent { manifold: self.clone(), j }
    }

    /// Point of E over graph variables (Im z, w).
    pub fn lift(&self, graph_vars: &[f64]) -> Vec<f64> {
        let h = self.h.eval(graph_vars);
        let mut z = Vec::with_capacity(2 * self.n);
        for j in 0..self.m {
            z.push(h[j]);
            z.push(graph_vars[j]);
        }
        z.extend_from_slice(&graph_vars[self.m..]);
        z
    }

    /// Sup over boundary points of |r|, from complex coordinates.
    pub fn residual_at(&self, point: &[C64]) -> f64 {
        let real: Vec<f64> = point.iter().flat_map(|c| [c.re, c.im]).collect();
        self.defining(&real).iter().fold(0.0_f64, |a, x| a.max(x.abs()))
    }
}

/// r^j as a [`ScalarField`] with derivatives from those of h.
#[derive(Debug, Clone)]
pub struct DefiningComponent {
    manifold: GenericSubmanifold,
    j: usize,
}

impl ScalarField for DefiningComponent {
    fn nvars(&self) -> usize {
        2 * self.manifold.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.manifold.defining(x)[self.j]
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.manifold.defining_jacobian(x).row(self.j).iter().copied().collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let e = &self.manifold;
        let hv = e.h.hessian(self.j, &e.graph_vars(x));
        // graph variable index -> ambient index
        let map: Vec<usize> = (0..e.m).map(|k| 2 * k + 1).chain(2 * e.m..2 * e.n).collect();
        let mut out = DMatrix::zeros(2 * e.n, 2 * e.n);
        for (a, &ia) in map.iter().enumerate() {
            for (b, &ib) in map.iter().enumerate() {
                out[(ia, ib)] = -hv[(a, b)];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 2 Re z = |w|^2 in C^2, i.e. h = (u^2 + v^2)/2.
    pub(crate) fn quadric() -> GenericSubmanifold {
        let h = Polynomial::new(3, vec![(vec![0, 2, 0], 0.5), (vec![0, 0, 2], 0.5)]).unwrap();
        GenericSubmanifold::polynomial(2, vec![h]).unwrap()
    }

    #[test]
    fn defining_function_vanishes_on_lifts() {
        let e = quadric();
        for g in [[0.1, 0.3, -0.2], [0.0, 0.0, 0.0], [-0.5, 0.7, 0.1]] {
            let p = e.lift(&g);
            assert!(e.defining(&p)[0].abs() < 1e-15);
        }
        let r = e.component(0);
        let p = [0.2, -0.1, 0.3, 0.4];
        let fd = fd_hessian(|x| r.value(x), &p);
        assert!(crate::linalg::max_abs(&(fd - r.hessian(&p))) < 1e-6);
        let g = ScalarField::gradient(&r, &p);
        assert_eq!(g, vec![1.0, 0.0, -0.3, -0.4]);
    }

    #[test]
    fn unnormalized_graph_is_rejected() {
        let h = Polynomial::new(3, vec![(vec![0, 1, 0], 0.5)]).unwrap();
        assert!(GenericSubmanifold::polynomial(2, vec![h]).is_err());
    }

    #[test]
    fn scaled_graph_chain_rule() {
        let e = quadric();
        let s = ScaledGraph { inner: e.graph().clone(), y_scale: 0.5, w_scale: 0.3, out_scale: 2.0 };
        let v = [0.2, 0.4, -0.1];
        let fd = {
            let mut y = v.to_vec();
            let mut col = vec![];
            for i in 0..3 {
                y[i] += 1e-6;
                let p = s.eval(&y)[0];
                y[i] -= 2e-6;
                let m = s.eval(&y)[0];
                y[i] += 1e-6;
                col.push((p - m) / 2e-6);
            }
            col
        };
        let jac = s.jacobian(&v);
        for i in 0..3 {
            assert!((jac[(0, i)] - fd[i]).abs() < 1e-8);
        }
        assert!((s.hessian(0, &v)[(1, 1)] - 2.0 * 0.09).abs() < 1e-14);
    }
}
