//! Cauchy–Green transform, Schwarz integral and the ∂̄, ∂ derivatives.
//!
//! All operators act mode by mode: on f = f_k(r) e^{ikθ} the Cauchy–Green
//! transform and ∂ lower the mode by one, ∂̄ raises it by one. Output modes that
//! fall outside the represented range [-N_θ/2, N_θ/2) are dropped.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::function::{BoundarySignal, DiscFunction, ModeTable};
use super::grid::{gauss_legendre_unit, DiscGrid};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Tolerance on the imaginary part of a signal passed to [`schwarz`].
pub const REALNESS_TOLERANCE: f64 = 1e-12;

/// Default relative threshold on the negative-frequency energy in
/// [`boundary_to_holomorphic`].
pub const HOLOMORPHIC_THRESHOLD: f64 = 1e-8;

fn zero_table(grid: &DiscGrid) -> ModeTable {
    DMatrix::from_element(grid.rings(), grid.n_theta(), C64::new(0.0, 0.0))
}

/// Cauchy–Green transform T(g)(ζ) = (1/π) ∬ g(τ)/(ζ - τ) dA(τ), so that ∂̄T(g) = g
/// and T(1) = conj(ζ).
pub fn cauchy_green(g: &DiscFunction) -> DiscFunction {
    let grid = g.grid();
    let mats = grid.cauchy_green_matrices();
    let modes = g.modes();
    let mut out = zero_table(grid);
    for slot in 0..grid.n_theta() {
        let k = grid.mode_of(slot);
        let Some(target) = grid.slot_of(k - 1) else { continue };
        let col: Vec<C64> = modes.column(slot).iter().copied().collect();
        let m = &mats[slot];
        for i in 0..grid.rings() {
            let v: C64 = (0..grid.rings()).map(|j| col[j] * m[(i, j)]).sum();
            out[(i, target)] = v;
        }
    }
    DiscFunction::from_modes(grid, &out)
}

/// T(g)(ζ) at a single point for a callable integrand, by the polar
/// substitution τ = ζ + ρ e^{iφ}; the area element cancels the pole.
///
/// `n_rho` Gauss–Legendre nodes along each ray, `n_phi` uniform angles.
pub fn cauchy_green_pointwise(g: &(dyn Fn(C64) -> C64 + Sync), zeta: C64, n_rho: usize, n_phi: usize) -> Result<C64> {
    let rule = gauss_legendre_unit(n_rho)?;
    let r2 = zeta.norm_sqr().min(1.0);
    let dphi = 2.0 * PI / n_phi as f64;
    let sum: C64 = (0..n_phi)
        .map(|j| {
            let phi = (j as f64 + 0.5) * dphi;
            let e = C64::from_polar(1.0, phi);
            let b = (zeta.conj() * e).re;
            let reach = -b + (b * b + 1.0 - r2).max(0.0).sqrt();
            let ray: C64 = rule.iter().map(|&(x, w)| g(zeta + e * (reach * x)) * (w * reach)).sum();
            ray * e.conj()
        })
        .sum();
    Ok(-sum * dphi / PI)
}

/// Default node counts of [`cauchy_green_pointwise`].
pub const POINTWISE_N_RHO: usize = 32;
pub const POINTWISE_N_PHI: usize = 64;

/// Radial derivative of every mode.
fn radial_derivatives(grid: &DiscGrid, modes: &ModeTable) -> ModeTable {
    let d = grid.radial_derivative();
    let mut out = zero_table(grid);
    for slot in 0..grid.n_theta() {
        let col = DVector::from_iterator(grid.rings(), modes.column(slot).iter().copied());
        let dcol: Vec<C64> = (0..grid.rings())
            .map(|i| (0..grid.rings()).map(|j| col[j] * d[(i, j)]).sum())
            .collect();
        for (i, v) in dcol.into_iter().enumerate() {
            out[(i, slot)] = v;
        }
    }
    out
}

fn wirtinger(f: &DiscFunction, shift: i64) -> DiscFunction {
    let grid = f.grid();
    let modes = f.modes();
    let dr = radial_derivatives(grid, &modes);
    let sign = shift as f64;
    let mut out = zero_table(grid);
    for slot in 0..grid.n_theta() {
        let k = grid.mode_of(slot);
        let Some(target) = grid.slot_of(k + shift) else { continue };
        for i in 0..grid.rings() {
            let r = grid.radius(i);
            out[(i, target)] = (dr[(i, slot)] - modes[(i, slot)] * (sign * k as f64 / r)) * 0.5;
        }
    }
    DiscFunction::from_modes(grid, &out)
}

/// ∂f/∂ζ̄ = (f_x + i f_y)/2.
pub fn dbar(f: &DiscFunction) -> DiscFunction {
    wirtinger(f, 1)
}

/// ∂f/∂ζ = (f_x - i f_y)/2.
pub fn dzeta(f: &DiscFunction) -> DiscFunction {
    wirtinger(f, -1)
}

/// Taylor coefficients a_0, .., a_{N_θ/2 - 1} of the Schwarz integral of h:
/// a_0 = ĥ_0 real, a_k = 2ĥ_k. f(0) = a_0 has zero imaginary part exactly.
pub fn schwarz_coefficients(h: &BoundarySignal) -> Result<Vec<C64>> {
    let max_imag = h.max_imag();
    if max_imag > REALNESS_TOLERANCE * h.sup_norm().max(1.0) {
        return Err(Error::NotReal { max_imag });
    }
    let half = h.grid().n_theta() as i64 / 2;
    let mut out = vec![C64::new(h.coefficient(0).re, 0.0)];
    out.extend((1..half).map(|k| h.coefficient(k) * 2.0));
    Ok(out)
}

/// Holomorphic function with boundary real part h and Im = 0 at the origin.
pub fn schwarz(h: &BoundarySignal) -> Result<DiscFunction> {
    let coeffs = schwarz_coefficients(h)?;
    let grid = h.grid();
    let mut out = zero_table(grid);
    for (k, &c) in coeffs.iter().enumerate() {
        let slot = grid.slot_of(k as i64).expect("non-negative mode in range");
        for i in 0..grid.rings() {
            out[(i, slot)] = c * grid.radius(i).powi(k as i32);
        }
    }
    Ok(DiscFunction::from_modes(grid, &out))
}

/// Analytic extension of a boundary signal with its discarded part.
#[derive(Debug, Clone)]
pub struct HolomorphicExtension {
    pub function: DiscFunction,
    /// l2 norm of the discarded negative and Nyquist coefficients.
    pub discarded_energy: f64,
}

/// Extend the non-negative modes of `b` as sum c_k ζ^k.
///
/// Fails when the discarded coefficients exceed `threshold * max(1, |b|)` in l2.
pub fn boundary_to_holomorphic(b: &BoundarySignal, threshold: f64) -> Result<HolomorphicExtension> {
    let grid = b.grid();
    let half = grid.n_theta() as i64 / 2;
    let total: f64 = b.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let discarded: f64 = (-half..0).map(|k| b.coefficient(k).norm_sqr()).sum::<f64>().sqrt();
    let limit = threshold * total.max(1.0);
    if discarded > limit {
        return Err(Error::NotHolomorphic { energy: discarded, threshold: limit });
    }
    let mut out = zero_table(grid);
    for k in 0..half {
        let slot = grid.slot_of(k).expect("non-negative mode in range");
        let c = b.coefficient(k);
        for i in 0..grid.rings() {
            out[(i, slot)] = c * grid.radius(i).powi(k as i32);
        }
    }
    Ok(HolomorphicExtension {
        function: DiscFunction::from_modes(grid, &out),
        discarded_energy: discarded,
    })
}

/// Holomorphic projection: keep the non-negative modes of `b` whatever the rest.
pub fn holomorphic_part(b: &BoundarySignal) -> DiscFunction {
    boundary_to_holomorphic(b, f64::INFINITY)
        .expect("infinite threshold never rejects")
        .function
}

/// Summary of a refinement study of ∂̄∘T = id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementStep {
    pub n_r: usize,
    pub error: f64,
}

/// max |∂̄T(g) - g| over the grid nodes.
pub fn dbar_cauchy_green_residual(g: &DiscFunction) -> f64 {
    dbar(&cauchy_green(g)).max_diff(g)
}

/// Run [`dbar_cauchy_green_residual`] for each radial resolution.
pub fn refinement_study(
    n_theta: usize,
    radial: &[usize],
    g: &(dyn Fn(C64) -> C64 + Sync),
) -> Result<Vec<RefinementStep>> {
    radial
        .par_iter()
        .map(|&n_r| {
            let grid: Arc<DiscGrid> = DiscGrid::new(n_theta, n_r)?;
            let f = DiscFunction::from_fn(&grid, g);
            Ok(RefinementStep { n_r, error: dbar_cauchy_green_residual(&f) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cauchy_green_of_one_is_conj_zeta() {
        let g = DiscGrid::new(32, 16).unwrap();
        let t = cauchy_green(&DiscFunction::constant(&g, c(1.0, 0.0)));
        let expected = DiscFunction::from_fn(&g, |z| z.conj());
        assert!(t.max_diff(&expected) < 1e-12);
        assert!(cauchy_green(&DiscFunction::zeros(&g)).sup_norm() == 0.0);
    }

    #[test]
    fn mode_wise_transform_matches_polar_substitution() {
        let g = DiscGrid::new(32, 20).unwrap();
        let f = |z: C64| z * z.conj() * 0.5 + z.powu(2) - c(0.0, 2.0) * z.conj().powu(3) + 1.0;
        let t = cauchy_green(&DiscFunction::from_fn(&g, f));
        for zeta in [c(0.1, 0.2), c(-0.5, 0.4), c(0.7, -0.1), c(0.0, -0.9)] {
            let oracle = cauchy_green_pointwise(&f, zeta, 48, 256).unwrap();
            assert!((t.eval_at(zeta) - oracle).norm() < 1e-8, "{zeta}");
        }
    }

    #[test]
    fn wirtinger_derivatives_of_monomials() {
        let g = DiscGrid::new(32, 16).unwrap();
        let f = DiscFunction::from_fn(&g, |z| z * z.conj());
        assert!(dbar(&f).max_diff(&DiscFunction::from_fn(&g, |z| z)) < 1e-10);
        assert!(dzeta(&f).max_diff(&DiscFunction::from_fn(&g, |z| z.conj())) < 1e-10);
        let h = DiscFunction::from_fn(&g, |z| z.powu(3));
        assert!(dbar(&h).sup_norm() < 1e-10);
        let a = DiscFunction::from_fn(&g, |z| z.conj());
        assert!(dbar(&a).max_diff(&DiscFunction::constant(&g, c(1.0, 0.0))) < 1e-10);
    }

    #[test]
    fn schwarz_examples() {
        let g = DiscGrid::new(64, 12).unwrap();
        let one = schwarz(&BoundarySignal::from_fn(&g, |_| c(1.0, 0.0))).unwrap();
        assert!(one.max_diff(&DiscFunction::constant(&g, c(1.0, 0.0))) < 1e-14);
        let s = schwarz(&BoundarySignal::from_fn(&g, |t| c((2.0 * t).cos() + 3.0, 0.0))).unwrap();
        assert!(s.max_diff(&DiscFunction::from_fn(&g, |z| z * z + 3.0)) < 1e-13);
        assert!(schwarz(&BoundarySignal::from_fn(&g, |t| c(0.0, t.sin()))).is_err());
    }

    #[test]
    fn holomorphic_extension_and_negative_control() {
        let g = DiscGrid::new(64, 12).unwrap();
        let ok = boundary_to_holomorphic(&BoundarySignal::from_fn(&g, |t| 2.0 + C64::from_polar(1.0, 3.0 * t)), 1e-8).unwrap();
        assert!(ok.function.max_diff(&DiscFunction::from_fn(&g, |z| 2.0 + z.powu(3))) < 1e-13);
        let err = boundary_to_holomorphic(&BoundarySignal::from_fn(&g, |t| C64::from_polar(1.0, -t)), 1e-8).unwrap_err();
        assert!(matches!(err, Error::NotHolomorphic { energy, .. } if (energy - 1.0).abs() < 1e-12));
    }
}
