//! The generalized Bishop equation r_δ(Φ^{-1}_{J_δ}(g)) = 0 on b𝔻.
//!
//! The unknown is the holomorphic z-part of g = (z, w); w and the constants
//! Im z(0) = c are data. The outer iteration is the flat-model Newton step
//! z ← z - S(r_δ(f)|b𝔻), S the Schwarz integral, so Im z(0) never moves.

pub mod chart;

use std::sync::Arc;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::dbar::{jholo_residual_sup, phi_inverse_from, PhiConfig};
use crate::error::{Error, Result};
use crate::families::polynomial_disc;
use crate::geometry::dilation::{dilate_anisotropic, dilate_isotropic};
use crate::geometry::levi::center;
use crate::geometry::manifold::GenericSubmanifold;
use crate::geometry::structure::Structure;
use crate::integral::{schwarz, BoundarySignal, DiscFunction, DiscGrid, DiscMap};
use crate::linalg::{C64, I};

pub use chart::{disc_chart, AxisTarget, ChartAxis, ChartFailure, ChartRecord, ChartResult, ChartSpec};

/// Which dilation turns (J, E) into the solved pair (J_δ, E_δ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dilation {
    #[default]
    None,
    Isotropic,
    Anisotropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BishopConfig {
    pub max_outer: usize,
    /// Target sup of |r_δ ∘ f| on the boundary.
    pub tol: f64,
    /// Initial step length of the outer update.
    pub damping: f64,
    /// Smallest step length before giving up.
    pub min_damping: f64,
    /// Bound on the interior J-holomorphy residual of accepted solutions.
    pub tol_interior: f64,
    pub phi: PhiConfig,
}

impl Default for BishopConfig {
    fn default() -> Self {
        Self {
            max_outer: 60,
            tol: 1e-10,
            damping: 1.0,
            min_damping: 1e-3,
            tol_interior: 1e-6,
            phi: PhiConfig { max_iter: 200, tol: 1e-12, neighborhood: 0.2 },
        }
    }
}

/// Chart coordinates (w, c) of a Bishop disc, in the dilated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BishopParams {
    /// Taylor coefficients of each w-component.
    pub w: Vec<Vec<C64>>,
    /// Im z(0) of the holomorphic part.
    pub c: Vec<f64>,
}

impl BishopParams {
    /// Real coordinates (c, Re w_k, Im w_k, ..).
    pub fn vector(&self) -> Vec<f64> {
        let mut v = self.c.clone();
        for comp in &self.w {
            for a in comp {
                v.push(a.re);
                v.push(a.im);
            }
        }
        v
    }

    pub fn w_discs(&self, grid: &Arc<DiscGrid>) -> Vec<DiscFunction> {
        self.w.iter().map(|c| polynomial_disc(grid, c)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BishopSolution {
    pub params: BishopParams,
    /// The J_δ-holomorphic disc.
    pub f: DiscMap,
    /// Its holomorphic normalization g = Φ(f).
    pub g: DiscMap,
    pub boundary_residual: f64,
    pub interior_residual: f64,
    /// Outer updates performed.
    pub iterations: usize,
    /// Boundary residual before each update.
    pub history: Vec<f64>,
}

impl BishopSolution {
    pub fn center(&self) -> Vec<C64> {
        self.f.components.iter().map(center).collect()
    }
}

/// The dilated pair (J_δ, E_δ).
#[derive(Debug, Clone)]
pub struct BishopProblem {
    pub structure: Structure,
    pub manifold: GenericSubmanifold,
    pub dilation: Dilation,
    pub delta: f64,
}

impl BishopProblem {
    pub fn new(j: &Structure, e: &GenericSubmanifold, dilation: Dilation, delta: f64) -> Result<Self> {
        if j.dim_complex() != e.n() {
            return Err(Error::Dimension(format!("structure on C^{} and manifold in C^{}", j.dim_complex(), e.n())));
        }
        let (structure, manifold) = match dilation {
            Dilation::None => (j.clone(), e.clone()),
            Dilation::Isotropic => dilate_isotropic(j, e, delta)?,
            Dilation::Anisotropic => dilate_anisotropic(j, e, delta)?,
        };
        Ok(Self { structure, manifold, dilation, delta })
    }

    pub fn n(&self) -> usize {
        self.manifold.n()
    }

    pub fn m(&self) -> usize {
        self.manifold.m()
    }

    fn check(&self, p: &BishopParams) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        if p.c.len() != m || p.w.len() != n - m {
            return Err(Error::Dimension(format!(
                "chart point with {} c-values and {} w-components for C^{n}, m = {m}",
                p.c.len(),
                p.w.len()
            )));
        }
        if !p.vector().iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("chart coordinates must be finite".into()));
        }
        Ok(())
    }

    /// r_δ(f) on the boundary circle, one real signal per component.
    pub fn boundary_defect(&self, f: &DiscMap) -> Result<Vec<BoundarySignal>> {
        let grid = f.grid();
        let ring = grid.rings() - 1;
        let m = self.m();
        let mut cols = vec![Vec::with_capacity(grid.n_theta()); m];
        for t in 0..grid.n_theta() {
            let r = self.manifold.defining(&f.real_at(grid.index(ring, t)));
            for (j, v) in r.into_iter().enumerate() {
                cols[j].push(v);
            }
        }
        cols.iter().map(|c| BoundarySignal::from_real(grid, c)).collect()
    }

    /// Solve from the holomorphic z-part `seed` (default i c).
    pub fn solve_from(
        &self,
        params: &BishopParams,
        grid: &Arc<DiscGrid>,
        cfg: &BishopConfig,
        seed: Option<&[DiscFunction]>,
    ) -> Result<BishopSolution> {
        self.check(params)?;
        let m = self.m();
        let w = params.w_discs(grid);
        let mut z: Vec<DiscFunction> = match seed {
            Some(s) if s.len() == m => s
                .iter()
                .zip(&params.c)
                .map(|(sj, &c)| {
                    // re-impose Im z(0) = c on the seed
                    let shift = c - center(sj).im;
                    sj.add(&DiscFunction::constant(grid, I * shift))
                })
                .collect(),
            _ => params.c.iter().map(|&c| DiscFunction::constant(grid, I * c)).collect(),
        };
        let mut alpha = cfg.damping;
        let mut history = Vec::new();
        let mut accepted: Option<(Vec<DiscFunction>, Vec<DiscFunction>, f64)> = None;
        let mut start: Option<DiscMap> = None;
        for it in 0..=cfg.max_outer {
            let g = DiscMap::new(z.iter().chain(&w).cloned().collect())?;
            let inv = phi_inverse_from(&g, self.structure.as_ref(), &cfg.phi, start.as_ref())?;
            let f = inv.f;
            let d = self.boundary_defect(&f)?;
            let res = d.iter().map(BoundarySignal::sup_norm).fold(0.0, f64::max);
            history.push(res);
            if !res.is_finite() {
                return Err(Error::BishopDivergence { iteration: it, residual: res });
            }
            if res <= cfg.tol {
                let interior = jholo_residual_sup(&f, self.structure.as_ref())?;
                debug!("bishop: {it} updates, boundary {res:.3e}, interior {interior:.3e}");
                if interior > cfg.tol_interior {
                    return Err(Error::MaxIterations { what: "interior J-holomorphy", iterations: it, residual: interior });
                }
                return Ok(BishopSolution {
                    params: params.clone(),
                    f,
                    g,
                    boundary_residual: res,
                    interior_residual: interior,
                    iterations: it,
                    history,
                });
            }
            if it == cfg.max_outer {
                break;
            }
            let base = match &accepted {
                Some((_, _, prev)) if res > *prev => {
                    alpha *= 0.5;
                    if alpha < cfg.min_damping {
                        return Err(Error::BishopDivergence { iteration: it, residual: res });
                    }
                    accepted.clone().expect("matched Some")
                }
                _ => {
                    let corr = d.iter().map(schwarz).collect::<Result<Vec<_>>>()?;
                    start = Some(f);
                    (z.clone(), corr, res)
                }
            };
            z = base
                .0
                .iter()
                .zip(&base.1)
                .map(|(zj, cj)| zj.sub(&cj.scale(C64::new(alpha, 0.0))))
                .collect();
            accepted = Some(base);
        }
        Err(Error::MaxIterations {
            what: "Bishop iteration",
            iterations: cfg.max_outer,
            residual: history.last().copied().unwrap_or(f64::NAN),
        })
    }

    pub fn solve(&self, params: &BishopParams, grid: &Arc<DiscGrid>, cfg: &BishopConfig) -> Result<BishopSolution> {
        self.solve_from(params, grid, cfg, None)
    }
}

/// ζ ↦ r_δ(Φ^{-1}(g))(ζ) on b𝔻 for a holomorphic g.
pub fn bishop_residual(g: &DiscMap, problem: &BishopProblem, phi: &PhiConfig) -> Result<Vec<BoundarySignal>> {
    let f = phi_inverse_from(g, problem.structure.as_ref(), phi, None)?.f;
    problem.boundary_defect(&f)
}

/// Bishop disc of (J_δ, E_δ) with chart coordinates `params`.
pub fn solve_bishop(
    j: &Structure,
    e: &GenericSubmanifold,
    dilation: Dilation,
    delta: f64,
    params: &BishopParams,
    grid: &Arc<DiscGrid>,
    cfg: &BishopConfig,
) -> Result<BishopSolution> {
    BishopProblem::new(j, e, dilation, delta)?.solve(params, grid, cfg)
}

/// Chart coordinates of a family member: w from (t, λ, c) and Im z(0)
/// matching the closed-form normalization.
pub fn family_chart_point(p: &crate::families::FamilyParams, m: usize) -> BishopParams {
    let nl = p.c.len() - 1;
    let shift = (p.s() * p.lambda * p.c[nl].conj()).im;
    let c = (0..m).map(|j| p.y[j] + if j + 1 == m { shift } else { 0.0 }).collect();
    BishopParams { w: p.w_coefficients(), c }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{boggess_pitts, FamilyParams, QuadricModel};
    use crate::geometry::structure::{standard, PolynomialStructure};
    use crate::integral::DiscGrid;
    use crate::polynomial::Polynomial;
    use nalgebra::DMatrix;

    fn flat(n: usize) -> GenericSubmanifold {
        GenericSubmanifold::polynomial(n, vec![Polynomial::zero(1 + 2 * (n - 1))]).unwrap()
    }

    fn perturbed(n: usize, size: f64) -> Structure {
        // constant-free anti-linear perturbation along the first two coordinates
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a[(0, 2)] = size;
        a[(0, 3)] = size;
        a[(1, 2)] = size;
        a[(1, 3)] = -size;
        let mut terms = Vec::new();
        for i in 0..2 * n {
            let mut e = vec![0u32; 2 * n];
            e[i] = 1;
            terms.push((e, a.clone() * if i % 2 == 0 { 1.0 } else { -0.5 }));
        }
        Arc::new(PolynomialStructure::perturbation(n, terms, true).unwrap())
    }

    #[test]
    fn residual_examples() {
        let grid = DiscGrid::new(64, 16).unwrap();
        let cfg = BishopConfig::default();
        let p = BishopProblem::new(&standard(2), &flat(2), Dilation::None, 1.0).unwrap();
        let g = crate::families::flat_disc(&grid, &[C64::new(0.1, 0.0)], &[C64::new(0.2, 0.1)], &[0.3]).unwrap();
        assert_eq!(bishop_residual(&g, &p, &cfg.phi).unwrap()[0].sup_norm(), 0.0);
        // quadric 2 Re z = |w|^2 in graph form r = Re z - |w|^2/2; z = 0, w = ζ gives -1/2
        let q = QuadricModel::boggess_pitts(2).unwrap().to_manifold().unwrap();
        let pq = BishopProblem::new(&standard(2), &q, Dilation::None, 1.0).unwrap();
        let g = crate::families::flat_disc(&grid, &[C64::new(0.0, 0.0)], &[C64::new(1.0, 0.0)], &[0.0]).unwrap();
        let d = &bishop_residual(&g, &pq, &cfg.phi).unwrap()[0];
        assert!(d.samples().iter().all(|v| (v.re + 0.5).abs() < 1e-15));
    }

    #[test]
    fn flat_and_quadric_solutions() {
        let grid = DiscGrid::new(64, 16).unwrap();
        let cfg = BishopConfig::default();
        let params = BishopParams { w: vec![vec![C64::new(0.1, 0.2), C64::new(0.3, 0.0)]], c: vec![0.4] };
        let s = solve_bishop(&standard(2), &flat(2), Dilation::None, 1.0, &params, &grid, &cfg).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(s.f.components[0].max_diff(&DiscFunction::constant(&grid, I * 0.4)) == 0.0);

        let q = QuadricModel::boggess_pitts(2).unwrap().to_manifold().unwrap();
        let fp = FamilyParams::new(0.1, 0.5, vec![0.05], vec![C64::new(0.1, -0.05)]);
        let s = solve_bishop(&standard(2), &q, Dilation::None, 1.0, &family_chart_point(&fp, 1), &grid, &cfg).unwrap();
        let bp = boggess_pitts(&grid, &fp, 2).unwrap();
        assert!(s.f.max_diff(&bp) < 1e-12, "{}", s.f.max_diff(&bp));
    }

    #[test]
    fn perturbed_solution_is_unique_and_close() {
        let grid = DiscGrid::new(64, 16).unwrap();
        let cfg = BishopConfig::default();
        let q = QuadricModel::boggess_pitts(2).unwrap().to_manifold().unwrap();
        let fp = FamilyParams::new(0.1, 0.5, vec![0.05], vec![C64::new(0.1, -0.05)]);
        let params = family_chart_point(&fp, 1);
        let j = perturbed(2, 0.05);
        let problem = BishopProblem::new(&j, &q, Dilation::None, 1.0).unwrap();
        let a = problem.solve(&params, &grid, &cfg).unwrap();
        assert!(a.boundary_residual <= 1e-8 && a.interior_residual <= 1e-6);
        let bp = boggess_pitts(&grid, &fp, 2).unwrap();
        let dist = a.f.max_diff(&bp);
        assert!(dist > 0.0 && dist < 0.05, "{dist}");
        let seed = vec![DiscFunction::from_fn(&grid, |z| C64::new(0.02, 0.0) + C64::new(-0.01, 0.03) * z * z)];
        let b = problem.solve_from(&params, &grid, &cfg, Some(&seed)).unwrap();
        assert!(a.f.max_diff(&b.f) <= 10.0 * cfg.tol, "{}", a.f.max_diff(&b.f));
    }

    #[test]
    fn isotropic_dilation_equivariance() {
        let grid = DiscGrid::new(64, 16).unwrap();
        let cfg = BishopConfig::default();
        let q = QuadricModel::boggess_pitts(2).unwrap().to_manifold().unwrap();
        let j = perturbed(2, 0.05);
        let base = BishopParams { w: vec![vec![C64::new(0.02, 0.01), C64::new(0.05, 0.0)]], c: vec![0.01] };
        let delta = 0.25;
        let scaled = BishopParams {
            w: base.w.iter().map(|c| c.iter().map(|a| a / delta).collect()).collect(),
            c: base.c.iter().map(|c| c / delta).collect(),
        };
        let a = solve_bishop(&j, &q, Dilation::None, 1.0, &base, &grid, &cfg).unwrap();
        let b = solve_bishop(&j, &q, Dilation::Isotropic, delta, &scaled, &grid, &cfg).unwrap();
        assert!(a.f.max_diff(&b.f.scale(delta)) <= 10.0 * cfg.tol, "{}", a.f.max_diff(&b.f.scale(delta)));
    }
}
