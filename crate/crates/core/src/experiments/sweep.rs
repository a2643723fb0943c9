//! Perturbed Boggess–Pitts families under the anisotropic dilation: attachment
//! ranks, recovery of the boundary manifold, and convergence to the J_0 discs.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::levi_flat::max_levi_on_h;
use super::{slope_of, symmetric_values, MemberRecord, PlotRecord, ScenarioConfig, ScenarioReport, SeriesRecord, Threshold};
use crate::bishop::{family_chart_point, BishopConfig, BishopProblem, BishopSolution, Dilation};
use crate::error::{Error, Result};
use crate::families::{attachment_limit, central_jacobian, j0_disc, limit_data, transverse_alignment, FamilyParams, QuadricModel};
use crate::geometry::descriptor::ManifoldDescriptor;
use crate::geometry::dilation::{linear_part_and_limit, LimitStructure};
use crate::integral::{DiscFunction, DiscGrid, DiscMap};
use crate::linalg::{decide_rank, to_real, C64};

/// Distances below this count as reproduction of the J_0 discs, with no rate.
pub const EXACT_DISTANCE: f64 = 1e-10;

/// One member of the δ → 0 comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSpec {
    pub lambda: f64,
    pub y: Vec<f64>,
    pub c: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepParams {
    pub t: f64,
    /// δ of the rank and recovery measurements.
    pub rank_delta: f64,
    /// δ list of the convergence fit.
    pub deltas: Vec<f64>,
    /// Members of the convergence fit; default (λ = 1/2, 0, 0) and (λ = 1, 0, 0).
    pub members: Vec<MemberSpec>,
    /// Central-difference step in (λ, y, c); λ is centered at 1 - step.
    pub jacobian_step: f64,
    pub rank_threshold: f64,
    /// Box of (y, Re c, Im c) for the λ = 1 attachment points.
    pub box_radius: f64,
    pub box_count: usize,
    pub coverage_min: f64,
    /// Bound on |r_δ| at the λ = 1 attachment points and on the boundary.
    pub residual_tolerance: f64,
    pub nu_tolerance: f64,
    pub slope_min: f64,
    /// Lower bound on the Levi form at 0 on H.
    pub levi_tolerance: f64,
    /// Compare λ = 1 attachment points with the closed-form limit (E_0' only).
    pub closed_form: bool,
    pub closed_form_tolerance: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            t: 0.1,
            rank_delta: 0.05,
            deltas: (3..=8).map(|k| 2f64.powi(-k)).collect(),
            members: Vec::new(),
            jacobian_step: 1e-3,
            rank_threshold: 1e-6,
            box_radius: 0.2,
            box_count: 3,
            coverage_min: 1.0,
            residual_tolerance: 1e-6,
            nu_tolerance: 0.1,
            slope_min: 0.5,
            levi_tolerance: 1e-6,
            closed_form: false,
            closed_form_tolerance: 1e-8,
        }
    }
}

/// The model quadric E_0 of a polynomial graph: H_j = -2 × (Hermitian part of
/// the w-quadratic terms of h_j). Fails when the graph has pure terms
/// Re Q_j(0, w), which a holomorphic change of z would have to remove first.
pub fn quadric_model_of(desc: &ManifoldDescriptor) -> Result<QuadricModel> {
    let (n, m) = (desc.n, desc.m);
    if m == 0 || m >= n {
        return Err(Error::Config(format!("need 0 < m < n, got m = {m}, n = {n}")));
    }
    let k = n - m;
    let mut hess = vec![DMatrix::<f64>::zeros(2 * k, 2 * k); m];
    for t in &desc.terms {
        if t.exponents[..m].iter().any(|&e| e != 0) || t.exponents.iter().sum::<u32>() != 2 {
            continue;
        }
        let idx: Vec<usize> = t.exponents[m..]
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat(i).take(e as usize))
            .collect();
        for (j, &c) in t.coefficients.iter().enumerate() {
            let (a, b) = (idx[0], idx[1]);
            if a == b {
                hess[j][(a, a)] += 2.0 * c;
            } else {
                hess[j][(a, b)] += c;
                hess[j][(b, a)] += c;
            }
        }
    }
    let mut forms = Vec::with_capacity(m);
    for (j, mm) in hess.iter().enumerate() {
        let x = |a: usize| 2 * a;
        let y = |a: usize| 2 * a + 1;
        let mut h = DMatrix::from_element(k, k, C64::new(0.0, 0.0));
        let mut pure = 0.0_f64;
        for a in 0..k {
            for b in 0..k {
                let herm = C64::new(
                    0.25 * (mm[(x(a), x(b))] + mm[(y(a), y(b))]),
                    0.25 * (mm[(y(a), x(b))] - mm[(x(a), y(b))]),
                );
                let q = C64::new(
                    0.25 * (mm[(x(a), x(b))] - mm[(y(a), y(b))]),
                    -0.25 * (mm[(x(a), y(b))] + mm[(y(a), x(b))]),
                );
                pure = pure.max(q.norm());
                h[(a, b)] = -2.0 * herm;
            }
        }
        if pure > 1e-12 {
            return Err(Error::Precondition(format!(
                "h_{} has a pure quadratic part Re Q(0, w) of size {pure:.3e}; remove it by a holomorphic change of z",
                j + 1
            )));
        }
        forms.push(h);
    }
    QuadricModel::new(n, m, forms)
}

/// Shared data of the family solves.
struct Family<'a> {
    limit: &'a LimitStructure,
    model: &'a QuadricModel,
    grid: &'a Arc<DiscGrid>,
    solver: &'a BishopConfig,
}

impl Family<'_> {
    /// Solve the member seeded by the holomorphic part of its J_0 disc.
    fn solve(&self, problem: &BishopProblem, p: &FamilyParams) -> Result<(BishopSolution, DiscMap)> {
        let j0 = j0_disc(self.grid, self.limit, self.model, p)?;
        let data = limit_data(self.limit, self.model, p)?;
        let seed: Vec<DiscFunction> = (0..self.model.m)
            .map(|j| {
                let a = data.a[j];
                j0.components[j].sub(&DiscFunction::from_fn(self.grid, |z| a * z.conj()))
            })
            .collect();
        let s = problem.solve_from(&family_chart_point(p, self.model.m), self.grid, self.solver, Some(&seed))?;
        Ok((s, j0))
    }

    fn attach(&self, problem: &BishopProblem, p: &FamilyParams) -> Result<Vec<f64>> {
        let (s, _) = self.solve(problem, p)?;
        Ok(to_real(&s.f.eval_at(C64::new(-p.lambda, 0.0))))
    }
}

fn params_from(t: f64, lambda: f64, x: &[f64], m: usize) -> FamilyParams {
    let y = x[..m].to_vec();
    let c = x[m..].chunks(2).map(|p| C64::new(p[0], p[1])).collect();
    FamilyParams::new(t, lambda, y, c)
}

pub fn run_sweep(cfg: &ScenarioConfig, p: &SweepParams) -> Result<ScenarioReport> {
    let j = cfg.structure()?;
    let desc = cfg
        .manifold_descriptor()?
        .ok_or_else(|| Error::Config("sweep needs a manifold".into()))?;
    let e = desc.build()?;
    let (n, m) = (e.n(), e.m());
    if n - m < 1 || p.deltas.len() < 2 || p.box_count == 0 {
        return Err(Error::Config("sweep needs a non-trivial CR dimension, two or more δ values and a non-empty box".into()));
    }
    let mut report = ScenarioReport::new(cfg);

    let levi = max_levi_on_h(&e, j.as_ref(), &vec![0.0; 2 * n])?;
    report.stat("levi_at_origin", levi);
    if levi <= p.levi_tolerance {
        return Err(Error::Precondition(format!("Levi form vanishes on H at 0 (max {levi:.3e})")));
    }
    report.verdict("levi_nondegenerate", levi, Threshold::AtLeast { value: p.levi_tolerance });
    let model = quadric_model_of(&desc)?;
    model
        .validate()
        .map_err(|err| Error::Precondition(format!("model quadric is not normalized: {err}")))?;
    let limit = linear_part_and_limit(j.as_ref(), m)?;
    let grid = cfg.grid.build()?;
    let fam = Family { limit: &limit, model: &model, grid: &grid, solver: &cfg.solver };
    let problem = BishopProblem::new(&j, &e, Dilation::Anisotropic, p.rank_delta)?;
    let h = p.jacobian_step;
    let dim = m + 2 * (n - m);
    let mut index = 0;

    // attachment Jacobian in (λ, y, c) near λ = 1
    let mut x0 = vec![1.0 - h];
    x0.extend(vec![0.0; dim]);
    let jac = central_jacobian(|x| fam.attach(&problem, &params_from(p.t, x[0], &x[1..], m)), &x0, h)?;
    let full = decide_rank(&jac, p.rank_threshold);
    let lambda_col: Vec<f64> = jac.column(0).iter().copied().collect();
    let nu = transverse_alignment(&lambda_col, m, m - 1);
    report.stat("attach_rank", full.rank as f64);
    report.stat("attach_gap", full.gap);
    report.stat("attach_smallest_singular_value", full.singular_values.last().copied().unwrap_or(0.0));
    report.stat("nu_alignment", nu);
    report.verdict("attach_rank", full.rank as f64, Threshold::Equals { value: (2 * n - m + 1) as f64 });
    report.verdict("nu_alignment", nu, Threshold::AtMost { value: p.nu_tolerance });

    // (y, c) ↦ F(δ, 1, y, c)(-1)
    let jac1 = central_jacobian(|x| fam.attach(&problem, &params_from(p.t, 1.0, x, m)), &vec![0.0; dim], h)?;
    let map = decide_rank(&jac1, p.rank_threshold);
    report.stat("map_rank", map.rank as f64);
    report.stat("map_gap", map.gap);
    report.verdict("attachment_map_rank", map.rank as f64, Threshold::Equals { value: (2 * n - m) as f64 });

    // λ = 1 attachment points over the box
    let axis = symmetric_values(p.box_radius, p.box_count);
    let total = p.box_count.pow(dim as u32);
    let boxes: Vec<Vec<f64>> = (0..total)
        .map(|mut i| {
            let mut x = vec![0.0; dim];
            for slot in x.iter_mut().rev() {
                *slot = axis[i % p.box_count];
                i /= p.box_count;
            }
            x
        })
        .collect();
    let solved: Vec<Result<(BishopSolution, Vec<f64>)>> = boxes
        .par_iter()
        .map(|x| {
            let fp = params_from(p.t, 1.0, x, m);
            let (s, _) = fam.solve(&problem, &fp)?;
            let a = to_real(&s.f.eval_at(C64::new(-1.0, 0.0)));
            Ok((s, a))
        })
        .collect();
    let mut attach_residual = 0.0_f64;
    let mut boundary = 0.0_f64;
    let mut closed_form = 0.0_f64;
    let mut graph_points = Vec::new();
    for (x, o) in boxes.iter().zip(&solved) {
        let label = "attachment";
        let mut params = vec![1.0];
        params.extend(x);
        match o {
            Ok((s, a)) => {
                let r = problem.manifold.defining(a).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
                attach_residual = attach_residual.max(r);
                boundary = boundary.max(s.boundary_residual);
                graph_points.push(problem.manifold.graph_vars(a));
                let mut values = vec![
                    ("attachment_defining", r),
                    ("boundary_residual", s.boundary_residual),
                    ("interior_residual", s.interior_residual),
                    ("iterations", s.iterations as f64),
                ];
                if p.closed_form {
                    let fp = params_from(p.t, 1.0, x, m);
                    let expected = to_real(&attachment_limit(&fp.y, fp.c[0]));
                    let err = expected.iter().zip(a).fold(0.0_f64, |acc, (u, v)| acc.max((u - v).abs()));
                    closed_form = closed_form.max(err);
                    values.push(("closed_form_error", err));
                }
                report.members.push(MemberRecord::ok(index, label, &params, &values));
            }
            Err(err) => report.members.push(MemberRecord::failed(index, label, &params, err)),
        }
        index += 1;
    }
    // targets: the box of half radius, same count per axis
    let spacing = if p.box_count > 1 { 2.0 * p.box_radius / (p.box_count - 1) as f64 } else { p.box_radius };
    let inner: Vec<Vec<f64>> = boxes.iter().map(|x| x.iter().map(|v| 0.5 * v).collect()).collect();
    let covered = inner
        .iter()
        .filter(|target| {
            graph_points.iter().any(|g: &Vec<f64>| g.iter().zip(target.iter()).all(|(a, b)| (a - b).abs() <= spacing))
        })
        .count();
    let coverage = covered as f64 / inner.len() as f64;
    report.stat("attachment_max_defining", attach_residual);
    report.stat("max_boundary_residual", boundary);
    report.stat("coverage", coverage);
    report.verdict("attachment_on_manifold", attach_residual, Threshold::AtMost { value: p.residual_tolerance });
    report.verdict("max_boundary_residual", boundary, Threshold::AtMost { value: p.residual_tolerance });
    report.verdict("coverage", coverage, Threshold::AtLeast { value: p.coverage_min });
    if p.closed_form {
        if n - m != 1 || model != QuadricModel::boggess_pitts(n)? {
            return Err(Error::Config("the closed-form comparison needs E_0' with one w-coordinate".into()));
        }
        report.stat("closed_form_error", closed_form);
        report.verdict("closed_form_attachment", closed_form, Threshold::AtMost { value: p.closed_form_tolerance });
    }

    // δ → 0: distance to the J_0 discs
    let members = if p.members.is_empty() {
        [0.5, 1.0]
            .iter()
            .map(|&lambda| MemberSpec { lambda, y: vec![0.0; m], c: vec![C64::new(0.0, 0.0); n - m] })
            .collect()
    } else {
        p.members.clone()
    };
    let jobs: Vec<(usize, f64)> = (0..members.len()).flat_map(|k| p.deltas.iter().map(move |&d| (k, d))).collect();
    let distances: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(k, delta)| {
            let spec = &members[k];
            let fp = FamilyParams::new(p.t, spec.lambda, spec.y.clone(), spec.c.clone());
            let problem = BishopProblem::new(&j, &e, Dilation::Anisotropic, delta)?;
            let (s, j0) = fam.solve(&problem, &fp)?;
            Ok((s.f.max_diff(&j0), s.boundary_residual))
        })
        .collect();
    let mut series = Vec::new();
    let mut family = vec![0.0_f64; p.deltas.len()];
    let mut complete = true;
    for (k, spec) in members.iter().enumerate() {
        let mut pts = Vec::new();
        for ((kk, delta), o) in jobs.iter().zip(&distances) {
            if *kk != k {
                continue;
            }
            let mut params = vec![spec.lambda, *delta];
            params.extend(&spec.y);
            params.extend(spec.c.iter().flat_map(|c| [c.re, c.im]));
            let label = format!("consistency_{k}");
            match o {
                Ok((d, res)) => {
                    let slot = p.deltas.iter().position(|x| x == delta).expect("δ from the list");
                    family[slot] = family[slot].max(*d);
                    pts.push((*delta, *d));
                    report.members.push(MemberRecord::ok(index, label, &params, &[("distance_to_j0", *d), ("boundary_residual", *res)]));
                }
                Err(err) => {
                    complete = false;
                    report.members.push(MemberRecord::failed(index, label, &params, err));
                }
            }
            index += 1;
        }
        report.stat(&format!("member_slope_{k}"), slope_of(&pts));
        series.push(SeriesRecord::new(format!("λ = {}, member {k}", spec.lambda), &pts));
    }
    // sup over members and ζ of |F_δ - F_0|
    let family_pts: Vec<(f64, f64)> = p.deltas.iter().copied().zip(family.iter().copied()).collect();
    let slope = if complete { slope_of(&family_pts) } else { f64::NAN };
    report.stat("family_slope", slope);
    series.push(SeriesRecord::new("family sup", &family_pts));
    let largest = family.iter().copied().fold(0.0, f64::max);
    report.stat("max_distance", largest);
    let exact = complete && largest <= EXACT_DISTANCE;
    report.flags.insert("exact".into(), exact);
    if exact {
        report.verdict("distance_exact", largest, Threshold::AtMost { value: EXACT_DISTANCE });
    } else {
        report.verdict("family_distance_slope", slope, Threshold::AtLeast { value: p.slope_min });
    }
    report.verdict("solver_failures", report.failures() as f64, Threshold::Equals { value: 0.0 });
    report.plots.push(PlotRecord {
        name: "distance".into(),
        title: "sup distance to the J_0 disc".into(),
        x_label: "δ".into(),
        y_label: "sup |F_δ - F_0|".into(),
        series,
    });
    Ok(report.finish())
}
