//! Closed-form disc families: the flat family, the Boggess–Pitts family on
//! the model quadric, and the discs of the limit structure J_0.

pub mod boggess_pitts;
pub mod limit;
pub mod quadric;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::{DiscFunction, DiscGrid, DiscMap};
use crate::linalg::{C64, I};

pub use boggess_pitts::{
    attachment_limit, attachment_map_rank, bp_attach_jacobian, bp_point, boggess_pitts, central_jacobian,
    transverse_alignment, AttachRank,
};
pub use limit::{check_block_pattern, j0_disc, j0_point, standard_transfer, limit_data, psi, quadric_boundary_disc, LimitData, Psi, Transfer};
pub use quadric::QuadricModel;

/// Parameters (t, λ, y, c) of a disc in the Boggess–Pitts type families.
///
/// `y` has one entry per z-coordinate and `c` one per w-coordinate; the
/// family moves only the last w-coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub t: f64,
    pub lambda: f64,
    pub y: Vec<f64>,
    pub c: Vec<C64>,
    #[serde(default = "unit_scale")]
    pub delta: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl FamilyParams {
    pub fn new(t: f64, lambda: f64, y: Vec<f64>, c: Vec<C64>) -> Self {
        Self { t, lambda, y, c, delta: 1.0 }
    }

    /// Requires t > 0 and λ in [0, 1].
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {}", self.t)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!("λ must lie in [0, 1], got {}", self.lambda)));
        }
        if self.c.is_empty() {
            return Err(Error::InvalidParameter("c needs at least one entry".into()));
        }
        Ok(())
    }

    /// s = t / (1 + λ).
    pub fn s(&self) -> f64 {
        self.t / (1.0 + self.lambda)
    }

    /// Taylor coefficients of w(ζ) = (c_1, .., c_{N-1}, c_N + s(λ + ζ)).
    pub fn w_coefficients(&self) -> Vec<Vec<C64>> {
        let s = self.s();
        let last = self.c.len() - 1;
        self.c
            .iter()
            .enumerate()
            .map(|(q, &cq)| {
                if q == last {
                    vec![cq + s * self.lambda, C64::new(s, 0.0)]
                } else {
                    vec![cq]
                }
            })
            .collect()
    }
}

/// Σ a_k ζ^k on the grid.
pub fn polynomial_disc(grid: &Arc<DiscGrid>, coeffs: &[C64]) -> DiscFunction {
    DiscFunction::from_fn(grid, |z| eval_polynomial(coeffs, z))
}

pub fn eval_polynomial(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// The disc ζ ↦ (i c, p + v ζ), with boundary in {Re z = 0}.
pub fn flat_disc(grid: &Arc<DiscGrid>, p: &[C64], v: &[C64], c: &[f64]) -> Result<DiscMap> {
    if p.len() != v.len() {
        return Err(Error::Dimension(format!("p has {} entries, v has {}", p.len(), v.len())));
    }
    let mut comps: Vec<DiscFunction> = c.iter().map(|&ci| DiscFunction::constant(grid, I * ci)).collect();
    comps.extend(p.iter().zip(v).map(|(&pk, &vk)| polynomial_disc(grid, &[pk, vk])));
    DiscMap::new(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::levi::{center, x_derivative_at_center};

    #[test]
    fn flat_disc_examples() {
        let grid = DiscGrid::default_grid();
        let zero = flat_disc(&grid, &[C64::new(0.0, 0.0)], &[C64::new(0.0, 0.0)], &[0.0]).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        let p = [C64::new(0.1, -0.2), C64::new(0.0, 0.3)];
        let v = [C64::new(0.5, 0.0), C64::new(-0.1, 0.2)];
        let f = flat_disc(&grid, &p, &v, &[0.25]).unwrap();
        for z in grid.boundary_points() {
            assert_eq!(f.eval_at(z)[0].re, 0.0);
        }
        assert!((center(&f.components[0]) - I * 0.25).norm() < 1e-14);
        for k in 0..2 {
            let e = (center(&f.components[k + 1]) - p[k]).norm();
            assert!(e < 1e-13, "{e}");
            let d = (x_derivative_at_center(&f.components[k + 1]) - v[k]).norm();
            assert!(d < 1e-10, "{d}");
        }
        // f(ζ) = (0, ζ, 0)
        let g = flat_disc(&grid, &[C64::new(0.0, 0.0); 2], &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &[0.0]).unwrap();
        let z = C64::new(0.3, 0.4);
        let val = g.eval_at(z);
        assert!((val[1] - z).norm() < 1e-12 && val[0].norm() < 1e-15 && val[2].norm() < 1e-15);
    }

    #[test]
    fn w_coefficients_follow_the_ansatz() {
        let p = FamilyParams::new(0.2, 0.5, vec![0.0], vec![C64::new(0.1, 0.0), C64::new(0.0, 0.1)]);
        let w = p.w_coefficients();
        let s = 0.2 / 1.5;
        assert_eq!(w[0], vec![C64::new(0.1, 0.0)]);
        assert!((w[1][0] - C64::new(s * 0.5, 0.1)).norm() < 1e-16 && (w[1][1].re - s).abs() < 1e-16);
        assert!(FamilyParams::new(0.0, 0.5, vec![], vec![C64::new(0.0, 0.0)]).validate().is_err());
        assert!(FamilyParams::new(0.1, 1.5, vec![], vec![C64::new(0.0, 0.0)]).validate().is_err());
    }
}
