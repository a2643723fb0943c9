//! Rates of the dilated structures: J_δ → J_st isotropically, J_δ → J_0
//! anisotropically.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{slope_of, PlotRecord, ScenarioConfig, ScenarioReport, SeriesRecord, Threshold};
use crate::error::{Error, Result};
use crate::geometry::dilation::{block_distances, linear_part_and_limit, structure_distance, BallGrid, Scaling, ScaledStructure};
use crate::geometry::structure::{standard, Structure};
use crate::linalg::max_abs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceParams {
    pub deltas: Vec<f64>,
    /// Codimension of the (z, w) split.
    pub m: usize,
    /// Derivative order of the isotropic distance.
    pub order: u8,
    pub ball_radius: f64,
    /// Sample points per axis; default by dimension as in [`BallGrid::unit`].
    pub per_axis: Option<usize>,
    pub isotropic_window: [f64; 2],
    pub anisotropic_window: [f64; 2],
    /// Lower bound on d(J_δ, J_st) at the smallest δ over its value at the largest.
    pub persistence_min: f64,
    /// Distances at or below this are treated as zero.
    pub exact_tolerance: f64,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        Self {
            deltas: (3..=8).map(|k| 2f64.powi(-k)).collect(),
            m: 1,
            order: 1,
            ball_radius: 1.0,
            per_axis: None,
            isotropic_window: [0.85, 1.15],
            anisotropic_window: [0.35, 0.65],
            persistence_min: 0.5,
            exact_tolerance: 1e-14,
        }
    }
}

/// Minimum number of δ values of a rate fit.
pub const MIN_DELTAS: usize = 4;

fn scaled(j: &Structure, scaling: Scaling) -> ScaledStructure {
    ScaledStructure { inner: j.clone(), scaling }
}

pub fn run_convergence(cfg: &ScenarioConfig, p: &ConvergenceParams) -> Result<ScenarioReport> {
    let mut deltas: Vec<f64> = p.deltas.iter().copied().filter(|d| *d > 0.0 && d.is_finite()).collect();
    deltas.sort_by(|a, b| b.total_cmp(a));
    deltas.dedup();
    if deltas.len() < MIN_DELTAS {
        return Err(Error::Config(format!("need at least {MIN_DELTAS} distinct positive δ values, got {}", deltas.len())));
    }
    let j = cfg.structure()?;
    let n = j.dim_complex();
    let ball = match p.per_axis {
        Some(k) => BallGrid::new(2 * n, p.ball_radius, k),
        None => {
            let mut b = BallGrid::unit(2 * n);
            for x in b.points.iter_mut().flatten() {
                *x *= p.ball_radius;
            }
            b.radius = p.ball_radius;
            b
        }
    };
    let js = standard(n);
    let mut report = ScenarioReport::new(cfg);
    report.stat("ball_points", ball.points.len() as f64);

    let iso: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| (d, structure_distance(&scaled(&j, Scaling::isotropic(n, d)), js.as_ref(), &ball, p.order)))
        .collect();
    let iso_exact = iso.iter().all(|x| x.1 <= p.exact_tolerance);
    report.flags.insert("isotropic_exact".into(), iso_exact);
    if iso_exact {
        report.verdict("isotropic_exact", iso.iter().map(|x| x.1).fold(0.0, f64::max), Threshold::AtMost { value: p.exact_tolerance });
    } else {
        let slope = slope_of(&iso);
        report.stat("isotropic_slope", slope);
        let [low, high] = p.isotropic_window;
        report.verdict("isotropic_slope", slope, Threshold::Within { low, high });
    }

    let limit = linear_part_and_limit(j.as_ref(), p.m)?;
    let j0 = limit.j0.clone();
    let limit_standard = limit.retained.iter().all(|a| max_abs(a) == 0.0);
    report.flags.insert("limit_is_standard".into(), limit_standard);
    report.stat("line_defect", limit.line_defect);
    let aniso: Vec<Arc<ScaledStructure>> = deltas.iter().map(|&d| Arc::new(scaled(&j, Scaling::anisotropic(n, p.m, d)))).collect();
    let to_j0: Vec<(f64, f64)> = deltas.iter().zip(&aniso).map(|(&d, s)| (d, structure_distance(s.as_ref(), j0.as_ref(), &ball, 0))).collect();
    let blocks: Vec<_> = aniso.iter().map(|s| block_distances(s.as_ref(), j0.as_ref(), p.m, &ball)).collect();
    let names = ["zz", "zw", "wz", "ww"];
    let mut slowest = f64::INFINITY;
    let mut block_series = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let pts: Vec<(f64, f64)> = deltas
            .iter()
            .zip(&blocks)
            .map(|(&d, b)| (d, [b.zz, b.zw, b.wz, b.ww][k]))
            .collect();
        if pts.iter().all(|x| x.1 > p.exact_tolerance) {
            let s = slope_of(&pts);
            report.stat(&format!("anisotropic_slope_{name}"), s);
            slowest = if s.is_nan() { f64::NAN } else { slowest.min(s) };
            block_series.push(SeriesRecord::new(format!("block {name}"), &pts));
        }
    }
    let aniso_exact = block_series.is_empty();
    report.flags.insert("anisotropic_exact".into(), aniso_exact);
    if aniso_exact {
        report.verdict("anisotropic_exact", to_j0.iter().map(|x| x.1).fold(0.0, f64::max), Threshold::AtMost { value: p.exact_tolerance });
    } else {
        report.stat("anisotropic_slowest_slope", slowest);
        let [low, high] = p.anisotropic_window;
        report.verdict("anisotropic_slowest_slope", slowest, Threshold::Within { low, high });
    }

    let to_st: Vec<(f64, f64)> = deltas.iter().zip(&aniso).map(|(&d, s)| (d, structure_distance(s.as_ref(), js.as_ref(), &ball, 0))).collect();
    if !limit_standard {
        let first = to_st.first().map_or(f64::NAN, |x| x.1);
        let last = to_st.last().map_or(f64::NAN, |x| x.1);
        let ratio = last / first;
        report.stat("standard_distance_smallest_delta", last);
        report.stat("standard_persistence", ratio);
        report.verdict("no_convergence_to_standard", ratio, Threshold::AtLeast { value: p.persistence_min });
    }

    let mut series = vec![SeriesRecord::new("isotropic, to J_st", &iso), SeriesRecord::new("anisotropic, to J_0", &to_j0)];
    if !limit_standard {
        series.push(SeriesRecord::new("anisotropic, to J_st", &to_st));
    }
    report.plots.push(PlotRecord {
        name: "distances".into(),
        title: "structure distances under dilation".into(),
        x_label: "δ".into(),
        y_label: "distance".into(),
        series,
    });
    if !block_series.is_empty() {
        report.plots.push(PlotRecord {
            name: "blocks".into(),
            title: "anisotropic block distances to J_0".into(),
            x_label: "δ".into(),
            y_label: "sup |J_δ - J_0|".into(),
            series: block_series,
        });
    }
    for (k, &d) in deltas.iter().enumerate() {
        let b = &blocks[k];
        report.members.push(super::MemberRecord::ok(
            k,
            "delta",
            &[d],
            &[
                ("isotropic_distance", iso[k].1),
                ("anisotropic_distance_j0", to_j0[k].1),
                ("anisotropic_distance_standard", to_st[k].1),
                ("block_zz", b.zz),
                ("block_zw", b.zw),
                ("block_wz", b.wz),
                ("block_ww", b.ww),
            ],
        ));
    }
    Ok(report.finish())
}
