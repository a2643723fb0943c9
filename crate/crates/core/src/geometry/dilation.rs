//! Isotropic and anisotropic dilations, distances between structures and
//! the limit structure J_0 = J_st + L_0(w) of anisotropic dilations.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::manifold::{GenericSubmanifold, ScaledGraph};
use super::structure::{AlmostComplexStructure, PolynomialStructure, Structure};
use crate::error::{Error, Result};
use crate::linalg::{j_st, max_abs};

/// Tolerance on |J(0) - J_st| for normalized structures.
pub const NORMALIZED_TOLERANCE: f64 = 1e-9;

/// Coordinate scaling Z -> (a z, b w) with z in C^m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub n: usize,
    pub m: usize,
    pub z_factor: f64,
    pub w_factor: f64,
}

impl Scaling {
    /// Λ_δ: (z, w) -> (δ^{-1} z, δ^{-1/2} w).
    pub fn anisotropic(n: usize, m: usize, delta: f64) -> Self {
        Self { n, m, z_factor: 1.0 / delta, w_factor: 1.0 / delta.sqrt() }
    }

    /// d_δ: Z -> δ^{-1} Z.
    pub fn isotropic(n: usize, delta: f64) -> Self {
        Self { n, m: n, z_factor: 1.0 / delta, w_factor: 1.0 / delta }
    }

    /// Factor of real coordinate i.
    pub fn factor(&self, i: usize) -> f64 {
        if i < 2 * self.m {
            self.z_factor
        } else {
            self.w_factor
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| v * self.factor(i)).collect()
    }

    pub fn invert(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| v / self.factor(i)).collect()
    }

    pub fn inverse(&self) -> Self {
        Self { n: self.n, m: self.m, z_factor: 1.0 / self.z_factor, w_factor: 1.0 / self.w_factor }
    }
}

/// Direct image of a structure under a diagonal linear scaling:
/// J_s(Z) = D J(D^{-1} Z) D^{-1}.
#[derive(Debug, Clone)]
pub struct ScaledStructure {
    pub inner: Structure,
    pub scaling: Scaling,
}

impl AlmostComplexStructure for ScaledStructure {
    fn dim_complex(&self) -> usize {
        self.inner.dim_complex()
    }
    fn eval(&self, z: &[f64]) -> DMatrix<f64> {
        let j = self.inner.eval(&self.scaling.invert(z));
        let s = &self.scaling;
        DMatrix::from_fn(j.nrows(), j.ncols(), |k, l| j[(k, l)] * s.factor(k) / s.factor(l))
    }
    fn jacobian(&self, z: &[f64]) -> Vec<DMatrix<f64>> {
        let s = &self.scaling;
        self.inner
            .jacobian(&s.invert(z))
            .into_iter()
            .enumerate()
            .map(|(i, d)| DMatrix::from_fn(d.nrows(), d.ncols(), |k, l| d[(k, l)] * s.factor(k) / s.factor(l) / s.factor(i)))
            .collect()
    }
    fn regularity_order(&self) -> f64 {
        self.inner.regularity_order()
    }
    fn domain_radius(&self) -> f64 {
        self.inner.domain_radius() * self.scaling.z_factor.min(self.scaling.w_factor)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dilation parameter must be positive, got {delta}")))
    }
}

/// J_δ(Z) = J(δZ) and h_δ(y, w) = δ^{-1} h(δy, δw).
pub fn dilate_isotropic(j: &Structure, e: &GenericSubmanifold, delta: f64) -> Result<(Structure, GenericSubmanifold)> {
    check_delta(delta)?;
    let n = j.dim_complex();
    let js: Structure = Arc::new(ScaledStructure { inner: j.clone(), scaling: Scaling::isotropic(n, delta) });
    let h = ScaledGraph { inner: e.graph().clone(), y_scale: delta, w_scale: delta, out_scale: 1.0 / delta };
    Ok((js, GenericSubmanifold::new(e.n(), Arc::new(h))?))
}

/// Structure part of [`dilate_anisotropic`].
pub fn dilate_anisotropic_structure(j: &Structure, m: usize, delta: f64) -> Result<Structure> {
    check_delta(delta)?;
    let n = j.dim_complex();
    if m == 0 || m >= n {
        return Err(Error::MissingSplit(format!("need 0 < m < n for the (z, w) split, got m = {m}, n = {n}")));
    }
    Ok(Arc::new(ScaledStructure { inner: j.clone(), scaling: Scaling::anisotropic(n, m, delta) }))
}

/// J_δ = dΛ_δ J(Λ_δ^{-1}) dΛ_δ^{-1} and r_δ(Z) = δ^{-1} r(δz, δ^{1/2} w).
pub fn dilate_anisotropic(j: &Structure, e: &GenericSubmanifold, delta: f64) -> Result<(Structure, GenericSubmanifold)> {
    let jd = dilate_anisotropic_structure(j, e.m(), delta)?;
    let h = ScaledGraph { inner: e.graph().clone(), y_scale: delta, w_scale: delta.sqrt(), out_scale: 1.0 / delta };
    Ok((jd, GenericSubmanifold::new(e.n(), Arc::new(h))?))
}

/// Tensor-product sample of a ball in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallGrid {
    pub dim: usize,
    pub radius: f64,
    pub points: Vec<Vec<f64>>,
}

impl BallGrid {
    pub fn new(dim: usize, radius: f64, per_axis: usize) -> Self {
        let axis: Vec<f64> = (0..per_axis)
            .map(|k| if per_axis == 1 { 0.0 } else { -radius + 2.0 * radius * k as f64 / (per_axis - 1) as f64 })
            .collect();
        let total = per_axis.pow(dim as u32);
        let points = (0..total)
            .map(|mut idx| {
                (0..dim)
                    .map(|_| {
                        let v = axis[idx % per_axis];
                        idx /= per_axis;
                        v
                    })
                    .collect::<Vec<f64>>()
            })
            .filter(|p| p.iter().map(|x| x * x).sum::<f64>() <= radius * radius * (1.0 + 1e-12))
            .collect();
        Self { dim, radius, points }
    }

    /// Unit ball with 9 points per axis in R^4, 5 in R^6 and 3 beyond.
    pub fn unit(dim: usize) -> Self {
        let per_axis = match dim {
            0..=4 => 9,
            5 | 6 => 5,
            _ => 3,
        };
        Self::new(dim, 1.0, per_axis)
    }
}

/// max over the grid of |J_1 - J_2|, plus (order 1) |dJ_1 - dJ_2|.
pub fn structure_distance(a: &dyn AlmostComplexStructure, b: &dyn AlmostComplexStructure, grid: &BallGrid, order: u8) -> f64 {
    grid.points
        .iter()
        .map(|p| {
            let d0 = max_abs(&(a.eval(p) - b.eval(p)));
            if order == 0 {
                d0
            } else {
                a.jacobian(p)
                    .iter()
                    .zip(b.jacobian(p))
                    .fold(d0, |acc, (x, y)| acc.max(max_abs(&(x - y))))
            }
        })
        .fold(0.0, f64::max)
}

/// Sup differences of the four (z, w) blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockDistances {
    pub zz: f64,
    pub zw: f64,
    pub wz: f64,
    pub ww: f64,
}

impl BlockDistances {
    pub fn max(&self) -> f64 {
        self.zz.max(self.zw).max(self.wz).max(self.ww)
    }
}

pub fn block_distances(a: &dyn AlmostComplexStructure, b: &dyn AlmostComplexStructure, m: usize, grid: &BallGrid) -> BlockDistances {
    let mut out = BlockDistances { zz: 0.0, zw: 0.0, wz: 0.0, ww: 0.0 };
    for p in &grid.points {
        let d = a.eval(p) - b.eval(p);
        for k in 0..d.nrows() {
            for l in 0..d.ncols() {
                let v = d[(k, l)].abs();
                let slot = match (k < 2 * m, l < 2 * m) {
                    (true, true) => &mut out.zz,
                    (true, false) => &mut out.zw,
                    (false, true) => &mut out.wz,
                    (false, false) => &mut out.ww,
                };
                *slot = slot.max(v);
            }
        }
    }
    out
}

/// First-order Taylor data of J at 0 and the limit structure J_0.
#[derive(Debug, Clone)]
pub struct LimitStructure {
    pub n: usize,
    pub m: usize,
    /// ∂J/∂x_i at 0, one matrix per real coordinate.
    pub slopes: Vec<DMatrix<f64>>,
    /// Retained slopes: z-rows against w-columns, w-coordinates only, with
    /// the dependence of the last w-column on the last w-coordinate removed.
    pub retained: Vec<DMatrix<f64>>,
    pub j0: Arc<PolynomialStructure>,
    /// Size of the removed dependence of the last w-column on w_{n-m}.
    pub line_defect: f64,
}

impl LimitStructure {
    /// L_0(w) as a real 2n x 2n matrix at a point Z (only w enters).
    pub fn l0(&self, z: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(2 * self.n, 2 * self.n);
        for (i, a) in self.retained.iter().enumerate() {
            out += a * z[i];
        }
        out
    }
}

/// Linear part L of J at 0 and J_0 = J_st + L_0(w).
pub fn linear_part_and_limit(j: &dyn AlmostComplexStructure, m: usize) -> Result<LimitStructure> {
    let n = j.dim_complex();
    if m == 0 || m >= n {
        return Err(Error::MissingSplit(format!("need 0 < m < n, got m = {m}, n = {n}")));
    }
    let zero = vec![0.0; 2 * n];
    let deviation = max_abs(&(j.eval(&zero) - j_st(n)));
    if deviation > NORMALIZED_TOLERANCE {
        return Err(Error::NotNormalized { deviation });
    }
    let slopes = j.jacobian(&zero);
    let last = 2 * (n - 1);
    let mut line_defect = 0.0_f64;
    let retained: Vec<DMatrix<f64>> = slopes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut a = DMatrix::zeros(2 * n, 2 * n);
            if i < 2 * m {
                return a;
            }
            for k in 0..2 * m {
                for l in 2 * m..2 * n {
                    if i >= last && l >= last {
                        line_defect = line_defect.max(s[(k, l)].abs());
                    } else {
                        a[(k, l)] = s[(k, l)];
                    }
                }
            }
            a
        })
        .collect();
    let j0 = Arc::new(PolynomialStructure::linear(n, retained.clone(), false)?);
    Ok(LimitStructure { n, m, slopes, retained, j0, line_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::structure::{validate_structure, StandardStructure};
    use crate::linalg::{complex_to_antilinear, C64};
    use crate::polynomial::Polynomial;

    fn allowed_block_structure() -> Structure {
        // C^3, m = 1: A maps w_2 into z and is multiplied by Re w_1.
        let mut q = DMatrix::from_element(3, 3, C64::new(0.0, 0.0));
        q[(0, 2)] = C64::new(0.3, -0.2);
        let a = complex_to_antilinear(&q);
        let mut slopes = vec![DMatrix::zeros(6, 6); 6];
        slopes[2] = a;
        Arc::new(PolynomialStructure::linear(3, slopes, false).unwrap())
    }

    #[test]
    fn isotropic_examples() {
        let j = allowed_block_structure();
        let e = GenericSubmanifold::polynomial(1, vec![Polynomial::new(1, vec![(vec![2], 1.0)]).unwrap()]).unwrap();
        let (_, e_half) = dilate_isotropic(&crate::geometry::structure::standard(1), &e, 0.5).unwrap();
        assert!((e_half.graph().eval(&[0.8])[0] - 0.5 * 0.64).abs() < 1e-15);
        let flat = GenericSubmanifold::polynomial(3, vec![Polynomial::zero(5)]).unwrap();
        let (jd, _) = dilate_isotropic(&j, &flat, 0.1).unwrap();
        let grid = BallGrid::unit(6);
        let d1 = structure_distance(j.as_ref(), &StandardStructure { n: 3 }, &grid, 0);
        let d2 = structure_distance(jd.as_ref(), &StandardStructure { n: 3 }, &grid, 0);
        assert!((d1 / d2 - 10.0).abs() < 1e-9);
        assert!(structure_distance(jd.as_ref(), &StandardStructure { n: 3 }, &grid, 1) >= d2);
        let (same, _) = dilate_isotropic(&j, &flat, 1.0).unwrap();
        assert_eq!(structure_distance(same.as_ref(), j.as_ref(), &grid, 1), 0.0);
    }

    #[test]
    fn allowed_block_is_its_own_limit() {
        let j = allowed_block_structure();
        let lim = linear_part_and_limit(j.as_ref(), 1).unwrap();
        assert_eq!(lim.line_defect, 0.0);
        let grid = BallGrid::unit(6);
        assert!(structure_distance(lim.j0.as_ref(), j.as_ref(), &grid, 0) < 1e-9);
        assert!(validate_structure(lim.j0.as_ref(), &grid.points).unwrap().passed);
        let jd = dilate_anisotropic_structure(&j, 1, 1e-3).unwrap();
        assert!(structure_distance(jd.as_ref(), lim.j0.as_ref(), &grid, 0) < 1e-9);
        assert!(matches!(dilate_anisotropic_structure(&j, 3, 0.1), Err(Error::MissingSplit(_))));
    }

    #[test]
    fn quadric_is_fixed_by_anisotropic_dilation() {
        let h = Polynomial::new(3, vec![(vec![0, 2, 0], -0.5), (vec![0, 0, 2], -0.5)]).unwrap();
        let e = GenericSubmanifold::polynomial(2, vec![h]).unwrap();
        let (_, ed) = dilate_anisotropic(&crate::geometry::structure::standard(2), &e, 0.01).unwrap();
        for v in [[0.3, 0.2, -0.7], [0.0, 1.0, 0.5]] {
            assert!((ed.graph().eval(&v)[0] - e.graph().eval(&v)[0]).abs() < 1e-14);
        }
    }
}
