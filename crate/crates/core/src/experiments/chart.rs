//! A product chart of Bishop discs around a center.

use serde::{Deserialize, Serialize};

use super::{HeatmapRecord, MemberRecord, Real, ScenarioConfig, ScenarioReport, Threshold};
use crate::bishop::{disc_chart, BishopProblem, ChartResult, ChartSpec, Dilation};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartParams {
    #[serde(default)]
    pub dilation: Dilation,
    #[serde(default = "unit")]
    pub delta: f64,
    pub chart: ChartSpec,
    /// Lower bound on min |f_a - f_b| / |p_a - p_b|.
    #[serde(default = "default_injectivity")]
    pub min_injectivity: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_injectivity() -> f64 {
    1e-3
}

pub fn run_chart(cfg: &ScenarioConfig, p: &ChartParams) -> Result<(ScenarioReport, ChartResult)> {
    let problem = BishopProblem::new(&cfg.structure()?, &cfg.manifold()?, p.dilation, p.delta)?;
    let grid = cfg.grid.build()?;
    let chart = disc_chart(&problem, &p.chart, &grid, &cfg.solver)?;
    let mut report = ScenarioReport::new(cfg);
    for (index, (params, s)) in chart.params.iter().zip(&chart.solutions).enumerate() {
        let x = params.vector();
        match s {
            Some(s) => report.members.push(MemberRecord::ok(
                index,
                "disc",
                &x,
                &[
                    ("boundary_residual", s.boundary_residual),
                    ("interior_residual", s.interior_residual),
                    ("iterations", s.iterations as f64),
                ],
            )),
            None => {
                let message = chart.failures.iter().find(|f| f.index == index).map_or_else(String::new, |f| f.message.clone());
                report.members.push(MemberRecord {
                    index,
                    label: "disc".into(),
                    params: x.into_iter().map(Real).collect(),
                    values: Default::default(),
                    error: Some(message),
                });
            }
        }
    }
    report.stat("max_boundary_residual", chart.max_boundary_residual());
    report.stat("max_interior_residual", chart.max_interior_residual());
    report.stat("second_difference", chart.second_difference);
    report.stat("injectivity", chart.injectivity);
    report.verdict("solver_failures", chart.failures.len() as f64, Threshold::Equals { value: 0.0 });
    report.verdict("max_boundary_residual", chart.max_boundary_residual(), Threshold::AtMost { value: cfg.solver.tol });
    report.verdict("max_interior_residual", chart.max_interior_residual(), Threshold::AtMost { value: cfg.solver.tol_interior });
    report.verdict("injectivity", chart.injectivity, Threshold::AtLeast { value: p.min_injectivity });
    let cols = chart.shape.last().copied().unwrap_or(1).max(1);
    let values: Vec<Real> = chart
        .solutions
        .iter()
        .map(|s| Real(s.as_ref().map_or(f64::NAN, |s| s.boundary_residual)))
        .collect();
    report.heatmaps.push(HeatmapRecord {
        name: "boundary_residual".into(),
        title: "boundary residual per member (columns: last axis)".into(),
        values: values.chunks(cols).map(<[Real]>::to_vec).collect(),
    });
    Ok((report.finish(), chart))
}
