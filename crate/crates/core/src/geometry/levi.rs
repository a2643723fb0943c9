//! Levi forms L^J(u)(p)(v) = -d(J^* du)(X, JX)(p), by direct differentiation
//! and by the Laplacian of u along a J-holomorphic disc.
//!
//! Convention: Δ = ∂²/∂x² + ∂²/∂y², so L^{J_st}(|ζ|²)(v) = 4|v|².

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::manifold::{Field, ScalarField};
use super::structure::AlmostComplexStructure;
use super::tangent::holomorphic_kernel;
use crate::dbar::{phi_inverse, PhiConfig};
use crate::error::{Error, Result};
use crate::integral::{DiscFunction, DiscGrid, DiscMap};
use crate::linalg::{to_complex, C64};

/// Ω_ij = ∂_iθ_j - ∂_jθ_i for θ = J^* du, θ_j = Σ_k ∂_k u J_kj.
pub fn dtheta(u: &dyn ScalarField, j: &dyn AlmostComplexStructure, p: &[f64]) -> DMatrix<f64> {
    let grad = DVector::from_vec(u.gradient(p));
    let hess = u.hessian(p);
    let jp = j.eval(p);
    let dj = j.jacobian(p);
    let mut d = &hess * &jp;
    for (i, dji) in dj.iter().enumerate() {
        let row = dji.transpose() * &grad;
        for c in 0..d.ncols() {
            d[(i, c)] += row[c];
        }
    }
    &d - d.transpose()
}

/// Symmetric S with L^J(u)(p)(v) = v^T S v.
pub fn levi_matrix(u: &dyn ScalarField, j: &dyn AlmostComplexStructure, p: &[f64]) -> DMatrix<f64> {
    let m = -(dtheta(u, j, p) * j.eval(p));
    (&m + m.transpose()) * 0.5
}

pub fn levi_direct(u: &dyn ScalarField, j: &dyn AlmostComplexStructure, p: &[f64], v: &[f64]) -> f64 {
    let v = DVector::from_column_slice(v);
    (v.transpose() * levi_matrix(u, j, p) * &v)[(0, 0)]
}

/// Settings of the disc-based evaluation.
#[derive(Debug, Clone)]
pub struct DiscLeviConfig {
    pub grid: Arc<DiscGrid>,
    /// The disc has df(0)(∂/∂Re ζ) = scale * v.
    pub scale: f64,
    pub phi: PhiConfig,
    /// Rings with radius below this enter the fit of the circle means.
    pub fit_radius: f64,
    /// Highest power of r^2 in the fit.
    pub fit_degree: usize,
    pub max_corrections: usize,
    pub tol: f64,
}

impl Default for DiscLeviConfig {
    fn default() -> Self {
        Self {
            grid: DiscGrid::new(64, 32).expect("valid grid"),
            scale: 0.2,
            phi: PhiConfig::default(),
            fit_radius: 0.6,
            fit_degree: 8,
            max_corrections: 60,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeviMethod {
    Direct,
    Disc,
}

/// f(0) of a disc.
pub fn center(f: &DiscFunction) -> C64 {
    let grid = f.grid();
    let basis = grid.interpolator().basis(0.0);
    let modes = f.modes();
    basis.iter().enumerate().map(|(i, b)| modes[(i, 0)] * *b).sum()
}

/// df(0)(∂/∂Re ζ) of a disc.
pub fn x_derivative_at_center(f: &DiscFunction) -> C64 {
    let grid = f.grid();
    let db = grid.interpolator().basis_derivative(0.0);
    let modes = f.modes();
    let plus = grid.slot_of(1).expect("mode 1");
    let minus = grid.slot_of(-1).expect("mode -1");
    db.iter()
        .enumerate()
        .map(|(i, b)| (modes[(i, plus)] + modes[(i, minus)]) * *b)
        .sum()
}

/// J-holomorphic disc with f(0) = p and df(0)(∂/∂Re ζ) = v.
///
/// Holomorphic seeds g = a + bζ are corrected until Φ_J^{-1}(g) has the
/// prescribed 1-jet.
pub fn disc_through(
    j: &dyn AlmostComplexStructure,
    p: &[f64],
    v: &[f64],
    cfg: &DiscLeviConfig,
) -> Result<DiscMap> {
    let target_p = to_complex(p);
    let target_v = to_complex(v);
    let mut a = target_p.clone();
    let mut b = target_v.clone();
    let mut last = f64::INFINITY;
    for _ in 0..cfg.max_corrections {
        let g = DiscMap::new(
            a.iter()
                .zip(&b)
                .map(|(&ai, &bi)| DiscFunction::from_fn(&cfg.grid, |z| ai + bi * z))
                .collect(),
        )?;
        let f = phi_inverse(&g, j, &cfg.phi)?.f;
        let mut err = 0.0_f64;
        for k in 0..a.len() {
            let dp = target_p[k] - center(&f.components[k]);
            let dv = target_v[k] - x_derivative_at_center(&f.components[k]);
            err = err.max(dp.norm()).max(dv.norm());
            a[k] += dp;
            b[k] += dv;
        }
        last = err;
        if err <= cfg.tol {
            return Ok(f);
        }
    }
    Err(Error::MaxIterations { what: "disc through a point", iterations: cfg.max_corrections, residual: last })
}

/// Δ(u∘f)(0) from the circle means of u∘f, fitted by a polynomial in r².
pub fn laplacian_at_center(u: &dyn ScalarField, f: &DiscMap, fit_radius: f64, fit_degree: usize) -> Result<f64> {
    let grid = f.grid();
    let rings: Vec<usize> = (0..grid.n_r()).filter(|&i| grid.radius(i) < fit_radius).collect();
    let degree = fit_degree.min(rings.len().saturating_sub(1));
    if degree < 1 {
        return Err(Error::InvalidParameter("too few rings inside the fit radius".into()));
    }
    let mut a = DMatrix::zeros(rings.len(), degree + 1);
    let mut b = DVector::zeros(rings.len());
    for (row, &i) in rings.iter().enumerate() {
        let r2 = grid.radius(i).powi(2);
        for k in 0..=degree {
            a[(row, k)] = r2.powi(k as i32);
        }
        let mean: f64 = (0..grid.n_theta())
            .map(|t| u.value(&f.real_at(grid.index(i, t))))
            .sum::<f64>()
            / grid.n_theta() as f64;
        b[row] = mean;
    }
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidParameter(format!("least squares failed: {e}")))?;
    Ok(4.0 * coef[1])
}

pub fn levi_disc(u: &dyn ScalarField, j: &dyn AlmostComplexStructure, p: &[f64], v: &[f64], cfg: &DiscLeviConfig) -> Result<f64> {
    let sv: Vec<f64> = v.iter().map(|x| x * cfg.scale).collect();
    let f = disc_through(j, p, &sv, cfg)?;
    Ok(laplacian_at_center(u, &f, cfg.fit_radius, cfg.fit_degree)? / (cfg.scale * cfg.scale))
}

pub fn levi_form(
    u: &dyn ScalarField,
    j: &dyn AlmostComplexStructure,
    p: &[f64],
    v: &[f64],
    method: LeviMethod,
) -> Result<f64> {
    match method {
        LeviMethod::Direct => Ok(levi_direct(u, j, p, v)),
        LeviMethod::Disc => levi_disc(u, j, p, v, &DiscLeviConfig::default()),
    }
}

/// r + C r^2 with derivatives from those of r.
#[derive(Debug, Clone)]
pub struct StrictifiedField {
    pub inner: Field,
    pub c: f64,
}

impl ScalarField for StrictifiedField {
    fn nvars(&self) -> usize {
        self.inner.nvars()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let r = self.inner.value(x);
        r + self.c * r * r
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let f = 1.0 + 2.0 * self.c * self.inner.value(x);
        self.inner.gradient(x).into_iter().map(|g| g * f).collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let r = self.inner.value(x);
        let g = DVector::from_vec(self.inner.gradient(x));
        self.inner.hessian(x) * (1.0 + 2.0 * self.c * r) + &g * g.transpose() * (2.0 * self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrictifyConfig {
    pub cap: f64,
    pub margin: f64,
    pub seed: u64,
}

impl Default for StrictifyConfig {
    fn default() -> Self {
        Self { cap: 2f64.powi(30), margin: 1e-6, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct Strictified {
    pub c: f64,
    pub field: StrictifiedField,
    /// Minimum of L^J(r + C r^2)(p) over the sampled unit directions.
    pub margin: f64,
    pub directions: usize,
}

/// Sampled unit sphere of R^d: 64 (d - 1) seeded random directions and ± axes.
pub fn sample_sphere(d: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<DVector<f64>> = (0..64 * (d - 1)).map(|_| unit_vector(&mut rng, d)).collect();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(d);
            e[i] = s;
            out.push(e);
        }
    }
    out
}

fn min_on(s: &DMatrix<f64>, dirs: &[DVector<f64>]) -> f64 {
    dirs.iter()
        .map(|v| (v.transpose() * s * v)[(0, 0)])
        .fold(f64::INFINITY, f64::min)
}

/// Smallest C in {1, 2, 4, ..} with L^J(r + C r^2)(p) positive on the sampled sphere.
pub fn strictify_defining(r: Field, j: &dyn AlmostComplexStructure, p: &[f64], cfg: &StrictifyConfig) -> Result<Strictified> {
    let jp = j.eval(p);
    let dr = DMatrix::from_row_slice(1, p.len(), &r.gradient(p));
    let h = holomorphic_kernel(&dr, &jp);
    let s = levi_matrix(r.as_ref(), j, p);
    let restricted = h.transpose() * &s * &h;
    let min_h = restricted.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_h > cfg.margin) {
        return Err(Error::NotPseudoconvex { min_value: min_h });
    }
    let dirs = sample_sphere(p.len(), cfg.seed);
    let mut c = 1.0;
    let mut margin = f64::NEG_INFINITY;
    while c <= cfg.cap {
        let field = StrictifiedField { inner: r.clone(), c };
        margin = min_on(&levi_matrix(&field, j, p), &dirs);
        if margin >= cfg.margin {
            return Ok(Strictified { c, field, margin, directions: dirs.len() });
        }
        c *= 2.0;
    }
    Err(Error::StrictifyCap { cap: cfg.cap, margin })
}

/// Uniform direction on the unit sphere of R^d.
pub fn unit_vector(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::structure::{ConjugatedStructure, StandardStructure};
    use crate::polynomial::{MatrixPolynomial, Polynomial};

    fn norm_sq(n: usize) -> Polynomial {
        let terms = (0..2 * n)
            .map(|i| {
                let mut e = vec![0; 2 * n];
                e[i] = 2;
                (e, 1.0)
            })
            .collect();
        Polynomial::new(2 * n, terms).unwrap()
    }

    #[test]
    fn standard_examples() {
        let js = StandardStructure { n: 2 };
        let v = [0.0, 0.0, 1.0, 0.0];
        assert!((levi_direct(&norm_sq(2), &js, &[0.0; 4], &v) - 4.0).abs() < 1e-6);
        let re_z = Polynomial::new(4, vec![(vec![1, 0, 0, 0], 1.0)]).unwrap();
        assert!(levi_direct(&re_z, &js, &[0.1, 0.2, 0.0, 0.3], &[0.3, 1.0, -0.2, 0.5]).abs() < 1e-9);
        // 2 Re z - |w|^2 -> -4
        let u = Polynomial::new(4, vec![(vec![1, 0, 0, 0], 2.0), (vec![0, 0, 2, 0], -1.0), (vec![0, 0, 0, 2], -1.0)]).unwrap();
        assert!((levi_direct(&u, &js, &[0.0; 4], &v) + 4.0).abs() < 1e-6);
        let d = levi_disc(&u, &js, &[0.0; 4], &v, &DiscLeviConfig::default()).unwrap();
        assert!((d + 4.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn direct_and_disc_agree_for_a_perturbed_structure() {
        let frame = MatrixPolynomial::linear(
            4,
            (0..4)
                .map(|i| DMatrix::from_fn(4, 4, |r, c| 0.03 * (((r * 5 + c * 3 + i * 7) as f64) * 0.9).sin()))
                .collect(),
        )
        .unwrap();
        let j = ConjugatedStructure::new(2, frame).unwrap();
        let u = Polynomial::new(
            4,
            vec![(vec![2, 0, 0, 0], 1.0), (vec![0, 1, 1, 0], 0.7), (vec![0, 0, 0, 2], -0.4), (vec![1, 0, 1, 1], 0.5), (vec![0, 0, 3, 0], 0.3)],
        )
        .unwrap();
        let p = [0.1, -0.05, 0.08, 0.02];
        for v in [[1.0, 0.0, 0.0, 0.0], [0.3, -0.4, 0.6, 0.2], [0.0, 0.0, 0.0, 1.0]] {
            let a = levi_direct(&u, &j, &p, &v);
            let b = levi_disc(&u, &j, &p, &v, &DiscLeviConfig::default()).unwrap();
            assert!((a - b).abs() <= 1e-3 * a.abs().max(1e-2), "{a} vs {b}");
        }
    }

    #[test]
    fn strictify_quadric_and_negative_control() {
        let js = StandardStructure { n: 2 };
        let r: Field = Arc::new(Polynomial::new(4, vec![(vec![1, 0, 0, 0], 2.0), (vec![0, 0, 2, 0], 1.0), (vec![0, 0, 0, 2], 1.0)]).unwrap());
        let s = strictify_defining(r, &js, &[0.0; 4], &StrictifyConfig::default()).unwrap();
        assert_eq!(s.c, 1.0);
        assert!(s.margin >= 1e-6);
        let eig = levi_matrix(&s.field, &js, &[0.0; 4]).symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > 3.9), "{eig}");
        let flat: Field = Arc::new(Polynomial::new(4, vec![(vec![1, 0, 0, 0], 1.0)]).unwrap());
        assert!(matches!(
            strictify_defining(flat, &js, &[0.0; 4], &StrictifyConfig::default()),
            Err(Error::NotPseudoconvex { .. })
        ));
    }
}
