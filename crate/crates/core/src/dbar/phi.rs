//! The normalization operator Φ_J(f) = f + T(Q(f) conj(f_ζ)) and its inverse.

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::q::{check_range, q_term, QField};
use crate::error::{Error, Result};
use crate::geometry::structure::AlmostComplexStructure;
use crate::integral::{cauchy_green, DiscMap};
use crate::linalg::{j_st, max_abs};

/// Settings of the fixed-point inversion of Φ_J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Largest admissible C^1 distance of J from J_st along the disc.
    pub neighborhood: f64,
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-10, neighborhood: 0.2 }
    }
}

/// Result of [`phi_inverse`].
#[derive(Debug, Clone)]
pub struct PhiInverse {
    pub f: DiscMap,
    pub iterations: usize,
    /// sup |f_{k+1} - f_k| per step.
    pub distances: Vec<f64>,
    /// Geometric mean of successive distance ratios; 0 when one step sufficed.
    pub contraction_rate: f64,
    /// C^1 distance of J from J_st on the image of the seed.
    pub structure_distance: f64,
}

/// Φ_J(f) = f + T(Q(f) conj(f_ζ)).
pub fn phi_forward(f: &DiscMap, j: &dyn AlmostComplexStructure) -> Result<DiscMap> {
    let q = QField::new(j).along(f)?;
    let term = q_term(f, &q);
    let comps = f
        .components
        .iter()
        .zip(&term)
        .map(|(fc, t)| fc.add(&cauchy_green(t)))
        .collect();
    DiscMap::new(comps)
}

/// max(sup |J - J_st|, sup |dJ|) over the values of `f`.
pub fn c1_distance_along(f: &DiscMap, j: &dyn AlmostComplexStructure) -> f64 {
    let js = j_st(j.dim_complex());
    (0..f.grid().len())
        .into_par_iter()
        .map(|idx| {
            let z = f.real_at(idx);
            let d0 = max_abs(&(j.eval(&z) - &js));
            j.jacobian(&z).iter().fold(d0, |a, m| a.max(max_abs(m)))
        })
        .reduce(|| 0.0, f64::max)
}

/// Solve Φ_J(f) = g by the iteration f_{k+1} = g - T(Q(f_k) conj((f_k)_ζ)), f_0 = g.
pub fn phi_inverse(g: &DiscMap, j: &dyn AlmostComplexStructure, cfg: &PhiConfig) -> Result<PhiInverse> {
    phi_inverse_from(g, j, cfg, None)
}

/// [`phi_inverse`] started from `start` instead of g.
pub fn phi_inverse_from(
    g: &DiscMap,
    j: &dyn AlmostComplexStructure,
    cfg: &PhiConfig,
    start: Option<&DiscMap>,
) -> Result<PhiInverse> {
    check_range(j, g)?;
    let distance = c1_distance_along(g, j);
    if distance > cfg.neighborhood {
        return Err(Error::OutsideNeighborhood { distance, threshold: cfg.neighborhood });
    }
    let q = QField::new(j);
    let mut f = match start {
        Some(s) if s.dim() == g.dim() && s.grid() == g.grid() => s.clone(),
        _ => g.clone(),
    };
    let mut distances: Vec<f64> = Vec::new();
    let mut increases = 0;
    for it in 1..=cfg.max_iter {
        let qs = q.along(&f)?;
        let term = q_term(&f, &qs);
        let next = DiscMap::new(
            g.components
                .iter()
                .zip(&term)
                .map(|(gc, t)| gc.sub(&cauchy_green(t)))
                .collect(),
        )?;
        let d = next.max_diff(&f);
        if !d.is_finite() {
            distances.push(d);
            return Err(Error::NonContraction { iteration: it, distances });
        }
        if distances.last().is_some_and(|&prev| d > prev) {
            increases += 1;
        } else {
            increases = 0;
        }
        distances.push(d);
        f = next;
        if increases >= 3 {
            return Err(Error::NonContraction { iteration: it, distances });
        }
        if d <= cfg.tol {
            let contraction_rate = rate(&distances);
            debug!("phi_inverse: {it} iterations, rate {contraction_rate:.3e}");
            return Ok(PhiInverse {
                f,
                iterations: it,
                distances,
                contraction_rate,
                structure_distance: distance,
            });
        }
    }
    Err(Error::MaxIterations {
        what: "phi_inverse",
        iterations: cfg.max_iter,
        residual: distances.last().copied().unwrap_or(f64::NAN),
    })
}

fn rate(distances: &[f64]) -> f64 {
    let ratios: Vec<f64> = distances
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    if ratios.is_empty() {
        0.0
    } else {
        (ratios.iter().sum::<f64>() / ratios.len() as f64).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbar::q::jholo_residual_sup;
    use crate::geometry::structure::{PolynomialStructure, StandardStructure};
    use crate::integral::{DiscFunction, DiscGrid};
    use crate::linalg::{complex_to_antilinear, C64};
    use nalgebra::DMatrix;

    fn perturbed(scale: f64) -> PolynomialStructure {
        let q = DMatrix::from_row_slice(2, 2, &[C64::new(0.6, 0.2), C64::new(0.1, -0.5), C64::new(-0.3, 0.4), C64::new(0.2, 0.7)]);
        let a = complex_to_antilinear(&q) * scale;
        PolynomialStructure::linear(2, vec![a.clone(), a.transpose(), -a.clone(), a * 0.5], true).unwrap()
    }

    fn disc(g: &std::sync::Arc<DiscGrid>) -> DiscMap {
        DiscMap::new(vec![
            DiscFunction::from_fn(g, |z| z * C64::new(0.3, 0.1) + z * z * 0.1),
            DiscFunction::from_fn(g, |z| C64::new(0.1, 0.0) + z * 0.4 - z.powu(3) * C64::new(0.0, 0.05)),
        ])
        .unwrap()
    }

    #[test]
    fn identity_for_standard_structure() {
        let g = DiscGrid::new(32, 12).unwrap();
        let f = disc(&g);
        let js = StandardStructure { n: 2 };
        assert!(phi_forward(&f, &js).unwrap().max_diff(&f) < 1e-15);
        let inv = phi_inverse(&f, &js, &PhiConfig::default()).unwrap();
        assert_eq!(inv.iterations, 1);
        assert_eq!(inv.f.max_diff(&f), 0.0);
    }

    #[test]
    fn round_trip_for_perturbed_structure() {
        let g = DiscGrid::new(64, 24).unwrap();
        let f = disc(&g);
        let j = perturbed(0.1);
        let fwd = phi_forward(&f, &j).unwrap();
        let inv = phi_inverse(&fwd, &j, &PhiConfig::default()).unwrap();
        assert!(inv.f.max_diff(&f) < 1e-8, "{}", inv.f.max_diff(&f));
        assert!(inv.contraction_rate < 1.0);
        // the inverse of a holomorphic map is J-holomorphic
        let h = DiscMap::new(vec![
            DiscFunction::from_fn(&g, |z| z * 0.3),
            DiscFunction::from_fn(&g, |z| z * z * 0.2 + 0.1),
        ])
        .unwrap();
        let sol = phi_inverse(&h, &j, &PhiConfig::default()).unwrap();
        assert!(jholo_residual_sup(&sol.f, &j).unwrap() < 1e-6);
    }

    #[test]
    fn large_perturbation_is_rejected() {
        let g = DiscGrid::new(32, 12).unwrap();
        let err = phi_inverse(&disc(&g), &perturbed(2.0), &PhiConfig::default()).unwrap_err();
        assert!(matches!(err, Error::OutsideNeighborhood { .. }));
    }
}
