//! Containment of Bishop discs in a Levi-flat hypersurface.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{symmetric_values, HeatmapRecord, MemberRecord, Real, ScenarioConfig, ScenarioReport, Threshold};
use crate::bishop::{BishopParams, BishopProblem, Dilation};
use crate::error::{Error, Result};
use crate::geometry::levi::{center, levi_direct, x_derivative_at_center};
use crate::geometry::manifold::GenericSubmanifold;
use crate::geometry::structure::AlmostComplexStructure;
use crate::geometry::tangent::holomorphic_tangent;
use crate::linalg::{to_real, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Discs stay in the hypersurface; needs the Levi-flat precondition.
    #[default]
    Contained,
    /// Negative control: discs must leave it.
    Escapes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeviFlatParams {
    pub dilation: Dilation,
    pub delta: f64,
    /// Offsets of Re w_1(0).
    pub p_radius: f64,
    pub p_count: usize,
    /// |w_1'(0)|; its argument runs over `v_count` equispaced angles.
    pub v_scale: f64,
    pub v_count: usize,
    /// Offsets of Im z_1(0).
    pub c_radius: f64,
    pub c_count: usize,
    /// Bound on max |r∘f| over interior nodes; default 1e-4 v_scale^2.
    pub tolerance: Option<f64>,
    pub expect: Expectation,
    pub levi_samples: usize,
    pub levi_tolerance: f64,
    /// Box of graph variables from which the Levi check samples points.
    pub sample_radius: f64,
    /// Bound on the distance of df(0)∂x from the tangent space, relative.
    pub tangency_tolerance: f64,
    /// Required fraction of direction bins reached.
    pub coverage_min: f64,
}

impl Default for LeviFlatParams {
    fn default() -> Self {
        Self {
            dilation: Dilation::Isotropic,
            delta: 0.05,
            p_radius: 0.2,
            p_count: 4,
            v_scale: 1.0,
            v_count: 4,
            c_radius: 0.2,
            c_count: 4,
            tolerance: None,
            expect: Expectation::Contained,
            levi_samples: 20,
            levi_tolerance: 1e-6,
            sample_radius: 0.3,
            tangency_tolerance: 1e-6,
            coverage_min: 1.0,
        }
    }
}

impl LeviFlatParams {
    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(1e-4 * self.v_scale * self.v_scale)
    }
}

/// max |L^J(r_j)(v)| / |v|^2 over j and v in a polarization set of H_p^J(E):
/// e_a, e_a + e_b, e_a + J e_b for a J-adapted basis e.
pub fn max_levi_on_h(e: &GenericSubmanifold, j: &dyn AlmostComplexStructure, p: &[f64]) -> Result<f64> {
    let frame = holomorphic_tangent(e, j, p)?;
    let jp = j.eval(p);
    let basis: Vec<DVector<f64>> = frame.holomorphic.iter().map(|v| DVector::from_vec(to_real(v))).collect();
    let mut vectors = basis.clone();
    for a in 0..basis.len() {
        for b in a + 1..basis.len() {
            vectors.push(&basis[a] + &basis[b]);
            vectors.push(&basis[a] + &jp * &basis[b]);
        }
    }
    let mut worst = 0.0_f64;
    for k in 0..e.m() {
        let r = e.component(k);
        for v in &vectors {
            let l = levi_direct(&r, j, p, v.as_slice()) / v.norm_squared();
            worst = worst.max(l.abs());
        }
    }
    Ok(worst)
}

/// Points of E from uniformly drawn graph variables in [-radius, radius].
pub fn sample_on_manifold(e: &GenericSubmanifold, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nvars = e.m() + 2 * (e.n() - e.m());
    (0..count)
        .map(|_| {
            let vars: Vec<f64> = (0..nvars).map(|_| rng.gen_range(-radius..=radius)).collect();
            e.lift(&vars)
        })
        .collect()
}

struct Measured {
    interior: f64,
    angle: f64,
    tangency: f64,
    boundary: f64,
    interior_holomorphy: f64,
    iterations: usize,
}

pub fn run_levi_flat(cfg: &ScenarioConfig, p: &LeviFlatParams) -> Result<ScenarioReport> {
    if p.p_count == 0 || p.v_count == 0 || p.c_count == 0 {
        return Err(Error::Config("levi_flat chart counts must be positive".into()));
    }
    let j = cfg.structure()?;
    let e = cfg.manifold()?;
    if e.m() != 1 {
        return Err(Error::Config(format!("levi_flat needs a hypersurface, got codimension {}", e.m())));
    }
    let mut report = ScenarioReport::new(cfg);

    let points = sample_on_manifold(&e, p.levi_samples, p.sample_radius, cfg.seed);
    let levi = points
        .par_iter()
        .map(|x| max_levi_on_h(&e, j.as_ref(), x))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    report.stat("levi_max", levi);
    let flat = levi <= p.levi_tolerance;
    report.flags.insert("levi_flat".into(), flat);
    if p.expect == Expectation::Contained {
        if !flat {
            return Err(Error::Precondition(format!(
                "Levi form on H reaches {levi:.3e} > {:.1e}; the hypersurface is not Levi-flat",
                p.levi_tolerance
            )));
        }
        report.verdict("levi_flat_precondition", levi, Threshold::AtMost { value: p.levi_tolerance });
    }

    let problem = BishopProblem::new(&j, &e, p.dilation, p.delta)?;
    let grid = cfg.grid.build()?;
    let (n, m) = (e.n(), e.m());
    let ps = symmetric_values(p.p_radius, p.p_count);
    let cs = symmetric_values(p.c_radius, p.c_count);
    let angles: Vec<f64> = (0..p.v_count).map(|k| 2.0 * PI * k as f64 / p.v_count as f64).collect();
    let mut members = Vec::new();
    for &pv in &ps {
        for &a in &angles {
            for &cv in &cs {
                let mut w = vec![vec![C64::new(0.0, 0.0)]; n - m];
                w[0] = vec![C64::new(pv, 0.0), C64::from_polar(p.v_scale, a)];
                let mut c = vec![0.0; m];
                c[0] = cv;
                members.push((vec![pv, a, cv], BishopParams { w, c }));
            }
        }
    }
    let outcomes: Vec<Result<Measured>> = members
        .par_iter()
        .map(|(_, bp)| {
            let s = problem.solve(bp, &grid, &cfg.solver)?;
            let g = s.f.grid();
            let mut interior = 0.0_f64;
            for ring in 0..g.n_r() {
                for t in 0..g.n_theta() {
                    let r = problem.manifold.defining(&s.f.real_at(g.index(ring, t)));
                    interior = r.iter().fold(interior, |acc, x| acc.max(x.abs()));
                }
            }
            let u: Vec<C64> = s.f.components.iter().map(x_derivative_at_center).collect();
            let f0: Vec<C64> = s.f.components.iter().map(center).collect();
            let d = problem.manifold.defining_jacobian(&to_real(&f0));
            let ur = DVector::from_vec(to_real(&u));
            let tangency = (d * &ur).norm() / ur.norm();
            Ok(Measured {
                interior,
                angle: u[m].arg().rem_euclid(2.0 * PI),
                tangency,
                boundary: s.boundary_residual,
                interior_holomorphy: s.interior_residual,
                iterations: s.iterations,
            })
        })
        .collect();

    let mut worst = 0.0_f64;
    let mut tangency = 0.0_f64;
    let mut hit = vec![false; p.v_count];
    let mut heat = vec![vec![Real(f64::NAN); p.c_count]; p.p_count * p.v_count];
    for (index, ((params, _), o)) in members.iter().zip(&outcomes).enumerate() {
        match o {
            Ok(x) => {
                worst = worst.max(x.interior);
                tangency = tangency.max(x.tangency);
                for (k, &a) in angles.iter().enumerate() {
                    let d = (x.angle - a).rem_euclid(2.0 * PI);
                    if d.min(2.0 * PI - d) <= PI / p.v_count as f64 {
                        hit[k] = true;
                    }
                }
                heat[index / p.c_count][index % p.c_count] = Real(x.interior);
                report.members.push(MemberRecord::ok(
                    index,
                    "disc",
                    params,
                    &[
                        ("interior_defining", x.interior),
                        ("direction_angle", x.angle),
                        ("tangency", x.tangency),
                        ("boundary_residual", x.boundary),
                        ("interior_holomorphy", x.interior_holomorphy),
                        ("iterations", x.iterations as f64),
                    ],
                ))
            }
            Err(err) => report.members.push(MemberRecord::failed(index, "disc", params, err)),
        }
    }
    let failures = report.failures();
    let coverage = hit.iter().filter(|&&h| h).count() as f64 / hit.len() as f64;
    report.stat("max_interior_defining", worst);
    report.stat("max_tangency", tangency);
    report.stat("direction_coverage", coverage);
    report.stat("tolerance", p.tolerance());
    report.flags.insert("contained".into(), worst <= p.tolerance() && failures == 0);
    report.verdict("solver_failures", failures as f64, Threshold::Equals { value: 0.0 });
    match p.expect {
        Expectation::Contained => {
            report.verdict("max_interior_defining", worst, Threshold::AtMost { value: p.tolerance() });
            report.verdict("direction_tangency", tangency, Threshold::AtMost { value: p.tangency_tolerance });
            report.verdict("direction_coverage", coverage, Threshold::AtLeast { value: p.coverage_min });
        }
        Expectation::Escapes => {
            report.verdict("interior_excursion", worst, Threshold::AtLeast { value: p.tolerance() });
        }
    }
    report.heatmaps.push(HeatmapRecord {
        name: "interior_defining".into(),
        title: "max |r o f| on interior nodes (rows: p, arg v; columns: c)".into(),
        values: heat,
    });
    Ok(report.finish())
}
