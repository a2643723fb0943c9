//! Families of Bishop discs over a product grid of chart coordinates.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BishopConfig, BishopParams, BishopProblem, BishopSolution};
use crate::error::{Error, Result};
use crate::integral::DiscGrid;
use crate::linalg::C64;

/// Coordinate of [`BishopParams`] moved by an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxisTarget {
    C { index: usize },
    W { component: usize, power: usize, imaginary: bool },
}

/// Offsets added to the center along one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartAxis {
    pub target: AxisTarget,
    pub values: Vec<f64>,
}

impl ChartAxis {
    /// `count` equispaced offsets in [-radius, radius].
    pub fn symmetric(target: AxisTarget, radius: f64, count: usize) -> Self {
        let values = if count <= 1 {
            vec![0.0]
        } else {
            (0..count).map(|k| -radius + 2.0 * radius * k as f64 / (count - 1) as f64).collect()
        };
        Self { target, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub center: BishopParams,
    pub axes: Vec<ChartAxis>,
}

impl ChartSpec {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    /// Multi-index of a member; the last axis varies fastest.
    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for (k, &s) in shape.iter().enumerate().rev() {
            out[k] = index % s;
            index /= s;
        }
        out
    }

    pub fn members(&self) -> Result<Vec<BishopParams>> {
        let total: usize = self.shape().iter().product();
        (0..total)
            .map(|i| {
                let mut p = self.center.clone();
                for (axis, &k) in self.axes.iter().zip(&self.multi_index(i)) {
                    apply(&mut p, axis.target, axis.values[k])?;
                }
                Ok(p)
            })
            .collect()
    }
}

fn apply(p: &mut BishopParams, target: AxisTarget, value: f64) -> Result<()> {
    match target {
        AxisTarget::C { index } => {
            let c = p.c.get_mut(index).ok_or_else(|| Error::Config(format!("no c-coordinate {index}")))?;
            *c += value;
        }
        AxisTarget::W { component, power, imaginary } => {
            let comp = p.w.get_mut(component).ok_or_else(|| Error::Config(format!("no w-component {component}")))?;
            if comp.len() <= power {
                comp.resize(power + 1, C64::new(0.0, 0.0));
            }
            comp[power] += if imaginary { C64::new(0.0, value) } else { C64::new(value, 0.0) };
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartFailure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ChartResult {
    pub shape: Vec<usize>,
    pub params: Vec<BishopParams>,
    /// Index-ordered; `None` where the member failed.
    pub solutions: Vec<Option<BishopSolution>>,
    pub failures: Vec<ChartFailure>,
    /// max |f_{k+1} - 2 f_k + f_{k-1}| / h^2 along the axes.
    pub second_difference: f64,
    /// min |f_a - f_b| / |p_a - p_b| over member pairs.
    pub injectivity: f64,
}

fn param_distance(a: &BishopParams, b: &BishopParams) -> f64 {
    let (u, v) = (a.vector(), b.vector());
    let len = u.len().max(v.len());
    (0..len)
        .map(|i| u.get(i).copied().unwrap_or(0.0) - v.get(i).copied().unwrap_or(0.0))
        .map(|d| d * d)
        .sum::<f64>()
        .sqrt()
}

/// Solve every chart member in parallel; output is ordered by member index.
pub fn disc_chart(problem: &BishopProblem, spec: &ChartSpec, grid: &Arc<DiscGrid>, cfg: &BishopConfig) -> Result<ChartResult> {
    let params = spec.members()?;
    let outcomes: Vec<Result<BishopSolution>> = params.par_iter().map(|p| problem.solve(p, grid, cfg)).collect();
    let mut solutions = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (index, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(s) => solutions.push(Some(s)),
            Err(e) => {
                failures.push(ChartFailure { index, message: e.to_string() });
                solutions.push(None);
            }
        }
    }
    let shape = spec.shape();
    let mut second_difference = 0.0_f64;
    let strides: Vec<usize> = (0..shape.len()).map(|k| shape[k + 1..].iter().product()).collect();
    for i in 0..params.len() {
        let mi = spec.multi_index(i);
        for (axis, &stride) in strides.iter().enumerate() {
            if mi[axis] == 0 || mi[axis] + 1 >= shape[axis] {
                continue;
            }
            let (lo, hi) = (i - stride, i + stride);
            if let (Some(a), Some(b), Some(c)) = (&solutions[lo], &solutions[i], &solutions[hi]) {
                let h = param_distance(&params[lo], &params[i]);
                let mut worst = 0.0_f64;
                for k in 0..b.f.dim() {
                    let d = a.f.components[k].add(&c.f.components[k]).sub(&b.f.components[k].scale(C64::new(2.0, 0.0)));
                    worst = worst.max(d.sup_norm());
                }
                second_difference = second_difference.max(worst / (h * h));
            }
        }
    }
    let ok: Vec<usize> = (0..params.len()).filter(|&i| solutions[i].is_some()).collect();
    let injectivity = ok
        .par_iter()
        .enumerate()
        .map(|(pos, &a)| {
            ok[pos + 1..]
                .iter()
                .map(|&b| {
                    let fa = &solutions[a].as_ref().expect("solved").f;
                    let fb = &solutions[b].as_ref().expect("solved").f;
                    fa.max_diff(fb) / param_distance(&params[a], &params[b])
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(ChartResult { shape, params, solutions, failures, second_difference, injectivity })
}

/// One exported chart member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartRecord {
    pub index: usize,
    pub params: BishopParams,
    /// Boundary Fourier coefficients of each component of f, in FFT order.
    pub boundary_coefficients: Vec<Vec<C64>>,
    pub boundary_residual: f64,
    pub interior_residual: f64,
    pub iterations: usize,
    pub center: Vec<C64>,
}

impl ChartResult {
    pub fn records(&self) -> Vec<ChartRecord> {
        self.solutions
            .iter()
            .enumerate()
            .filter_map(|(index, s)| {
                s.as_ref().map(|s| ChartRecord {
                    index,
                    params: s.params.clone(),
                    boundary_coefficients: s.f.components.iter().map(|c| c.boundary_coefficients().to_vec()).collect(),
                    boundary_residual: s.boundary_residual,
                    interior_residual: s.interior_residual,
                    iterations: s.iterations,
                    center: s.center(),
                })
            })
            .collect()
    }

    pub fn max_boundary_residual(&self) -> f64 {
        self.solutions.iter().flatten().map(|s| s.boundary_residual).fold(0.0, f64::max)
    }

    pub fn max_interior_residual(&self) -> f64 {
        self.solutions.iter().flatten().map(|s| s.interior_residual).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bishop::{family_chart_point, Dilation};
    use crate::families::{boggess_pitts, FamilyParams, QuadricModel};
    use crate::geometry::manifold::GenericSubmanifold;
    use crate::geometry::structure::standard;
    use crate::integral::DiscFunction;
    use crate::linalg::I;
    use crate::polynomial::Polynomial;

    #[test]
    fn flat_chart_is_exact() {
        let grid = DiscGrid::new(32, 8).unwrap();
        let e = GenericSubmanifold::polynomial(2, vec![Polynomial::zero(3)]).unwrap();
        let problem = BishopProblem::new(&standard(2), &e, Dilation::None, 1.0).unwrap();
        let spec = ChartSpec {
            center: BishopParams { w: vec![vec![C64::new(0.0, 0.0), C64::new(0.2, 0.0)]], c: vec![0.0] },
            axes: vec![
                ChartAxis::symmetric(AxisTarget::C { index: 0 }, 0.2, 3),
                ChartAxis::symmetric(AxisTarget::W { component: 0, power: 0, imaginary: false }, 0.2, 3),
            ],
        };
        let chart = disc_chart(&problem, &spec, &grid, &BishopConfig::default()).unwrap();
        assert!(chart.failures.is_empty());
        for (p, s) in chart.params.iter().zip(&chart.solutions) {
            let s = s.as_ref().unwrap();
            assert_eq!(s.f.components[0].max_diff(&DiscFunction::constant(&grid, I * p.c[0])), 0.0);
        }
        assert!(chart.second_difference < 1e-12);
        assert!(chart.injectivity > 0.5);
        assert_eq!(chart.records().len(), 9);
    }

    #[test]
    fn quadric_chart_matches_closed_form_and_reports_failures() {
        let grid = DiscGrid::new(64, 12).unwrap();
        let e = QuadricModel::boggess_pitts(2).unwrap().to_manifold().unwrap();
        let problem = BishopProblem::new(&standard(2), &e, Dilation::None, 1.0).unwrap();
        let fp = FamilyParams::new(0.1, 0.5, vec![0.0], vec![C64::new(0.0, 0.0)]);
        let spec = ChartSpec {
            center: family_chart_point(&fp, 1),
            axes: vec![ChartAxis::symmetric(AxisTarget::W { component: 0, power: 0, imaginary: false }, 0.1, 3)],
        };
        let chart = disc_chart(&problem, &spec, &grid, &BishopConfig::default()).unwrap();
        for (k, s) in chart.solutions.iter().enumerate() {
            let c = C64::new(spec.axes[0].values[k], 0.0);
            let bp = boggess_pitts(&grid, &FamilyParams { c: vec![c], ..fp.clone() }, 2).unwrap();
            assert!(s.as_ref().unwrap().f.max_diff(&bp) < 1e-10);
        }
        let bad = ChartSpec { axes: vec![ChartAxis { target: AxisTarget::C { index: 0 }, values: vec![0.0, f64::NAN] }], ..spec };
        let chart = disc_chart(&problem, &bad, &grid, &BishopConfig::default()).unwrap();
        assert_eq!(chart.failures.len(), 1);
        assert_eq!(chart.failures[0].index, 1);
        assert!(chart.solutions[0].is_some());
    }
}
