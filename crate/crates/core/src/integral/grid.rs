//! Polar tensor grid on the closed unit disc.

use std::fmt;
use std::sync::{Arc, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::C64;

pub const DEFAULT_N_THETA: usize = 128;
pub const DEFAULT_N_R: usize = 48;

/// Gauss–Legendre rule of the given degree on [0, 1], nodes ascending.
pub fn gauss_legendre_unit(deg: usize) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::new(deg)
        .map_err(|e| Error::InvalidParameter(format!("Gauss-Legendre degree {deg}: {e}")))?;
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

/// Lagrange basis on a set of distinct nodes, in barycentric form.
#[derive(Debug, Clone)]
pub struct Barycentric {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Barycentric {
    pub fn new(nodes: Vec<f64>) -> Self {
        let mut weights: Vec<f64> = (0..nodes.len())
            .map(|j| {
                let p: f64 = (0..nodes.len())
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product();
                1.0 / p
            })
            .collect();
        let scale = weights.iter().fold(0.0_f64, |a, w| a.max(w.abs()));
        weights.iter_mut().for_each(|w| *w /= scale);
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Values of every Lagrange basis polynomial at x.
    pub fn basis(&self, x: f64) -> Vec<f64> {
        if let Some(j) = self.nodes.iter().position(|&t| t == x) {
            let mut e = vec![0.0; self.nodes.len()];
            e[j] = 1.0;
            return e;
        }
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w / (x - t))
            .collect();
        let s: f64 = terms.iter().sum();
        terms.into_iter().map(|t| t / s).collect()
    }

    /// Derivatives of every Lagrange basis polynomial at a point that is not a node.
    pub fn basis_derivative(&self, x: f64) -> Vec<f64> {
        assert!(self.nodes.iter().all(|&t| t != x), "basis_derivative at a node");
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w / (x - t))
            .collect();
        let s: f64 = terms.iter().sum();
        let ds: f64 = -self
            .nodes
            .iter()
            .zip(&terms)
            .map(|(&t, &q)| q / (x - t))
            .sum::<f64>();
        self.nodes
            .iter()
            .zip(&terms)
            .map(|(&t, &q)| {
                let l = q / s;
                l * (-1.0 / (x - t) - ds / s)
            })
            .collect()
    }

    /// Differentiation matrix: (D v)_i is the derivative at node i of the interpolant of v.
    pub fn differentiation_matrix(&self) -> DMatrix<f64> {
        let n = self.nodes.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (self.weights[j] / self.weights[i]) / (self.nodes[i] - self.nodes[j]);
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            d[(i, i)] = diag;
        }
        d
    }
}

/// Polar grid: N_θ uniform angles times N_r Gauss–Legendre radii in (0, 1),
/// plus the boundary circle r = 1 as an extra ring.
///
/// Ring index `i` runs over `0..=n_r`; ring `n_r` is the boundary.
pub struct DiscGrid {
    n_theta: usize,
    n_r: usize,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    interp: Barycentric,
    diff: DMatrix<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    cg: OnceLock<Vec<DMatrix<f64>>>,
}

impl fmt::Debug for DiscGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscGrid")
            .field("n_theta", &self.n_theta)
            .field("n_r", &self.n_r)
            .finish()
    }
}

impl PartialEq for DiscGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_theta == other.n_theta && self.n_r == other.n_r
    }
}

impl DiscGrid {
    pub fn new(n_theta: usize, n_r: usize) -> Result<Arc<Self>> {
        if n_theta < 8 || !n_theta.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "boundary modes must be a power of two >= 8, got {n_theta}"
            )));
        }
        if n_r < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 radial nodes, got {n_r}")));
        }
        let rule = gauss_legendre_unit(n_r)?;
        let radii: Vec<f64> = rule.iter().map(|p| p.0).collect();
        let radial_weights: Vec<f64> = rule.iter().map(|p| p.1).collect();
        let mut ext = radii.clone();
        ext.push(1.0);
        let interp = Barycentric::new(ext);
        let diff = interp.differentiation_matrix();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n_theta,
            n_r,
            radii,
            radial_weights,
            interp,
            diff,
            forward: planner.plan_fft_forward(n_theta),
            inverse: planner.plan_fft_inverse(n_theta),
            cg: OnceLock::new(),
        }))
    }

    pub fn default_grid() -> Arc<Self> {
        Self::new(DEFAULT_N_THETA, DEFAULT_N_R).expect("default grid parameters are valid")
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    /// Number of rings including the boundary.
    pub fn rings(&self) -> usize {
        self.n_r + 1
    }

    pub fn len(&self) -> usize {
        self.rings() * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Radius of ring i (1 for the boundary ring).
    pub fn radius(&self, ring: usize) -> f64 {
        if ring == self.n_r {
            1.0
        } else {
            self.radii[ring]
        }
    }

    pub fn interior_radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_theta as f64
    }

    pub fn index(&self, ring: usize, j: usize) -> usize {
        ring * self.n_theta + j
    }

    pub fn point(&self, ring: usize, j: usize) -> C64 {
        C64::from_polar(self.radius(ring), self.theta(j))
    }

    /// Every node in storage order.
    pub fn points(&self) -> Vec<C64> {
        (0..self.rings())
            .flat_map(|i| (0..self.n_theta).map(move |j| (i, j)))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }

    pub fn boundary_points(&self) -> Vec<C64> {
        (0..self.n_theta).map(|j| self.point(self.n_r, j)).collect()
    }

    /// Area weight of interior node (ring, j); zero on the boundary ring.
    pub fn area_weight(&self, ring: usize) -> f64 {
        if ring == self.n_r {
            0.0
        } else {
            self.radial_weights[ring] * self.radii[ring] * 2.0 * std::f64::consts::PI / self.n_theta as f64
        }
    }

    /// Signed mode number of FFT slot `slot`.
    pub fn mode_of(&self, slot: usize) -> i64 {
        let n = self.n_theta as i64;
        let s = slot as i64;
        if s < n / 2 {
            s
        } else {
            s - n
        }
    }

    /// FFT slot of a signed mode, if it is represented.
    pub fn slot_of(&self, k: i64) -> Option<usize> {
        let n = self.n_theta as i64;
        if k >= -n / 2 && k < n / 2 {
            Some(k.rem_euclid(n) as usize)
        } else {
            None
        }
    }

    /// Fourier coefficients c_k = (1/N) sum_j f_j e^{-i k θ_j}, in FFT order.
    pub fn coefficients(&self, samples: &[C64]) -> Vec<C64> {
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n_theta as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Samples from coefficients in FFT order.
    pub fn synthesize(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf
    }

    pub fn interpolator(&self) -> &Barycentric {
        &self.interp
    }

    /// Radial differentiation matrix over all rings.
    pub fn radial_derivative(&self) -> &DMatrix<f64> {
        &self.diff
    }

    /// Per-mode Cauchy–Green matrices, indexed by FFT slot of the input mode.
    ///
    /// Input mode k at ring radii maps to output mode k - 1.
    pub fn cauchy_green_matrices(&self) -> &[DMatrix<f64>] {
        self.cg.get_or_init(|| self.build_cauchy_green())
    }

    fn build_cauchy_green(&self) -> Vec<DMatrix<f64>> {
        let rings = self.rings();
        let inner = gauss_legendre_unit(64).expect("fixed degree");
        let panel = gauss_legendre_unit(24).expect("fixed degree");
        // (rho, weight, basis) on [0, r_i] and on [r_i, 1].
        let quad: Vec<(Vec<(f64, f64, Vec<f64>)>, Vec<(f64, f64, Vec<f64>)>)> = (0..rings)
            .into_par_iter()
            .map(|i| {
                let r = self.radius(i);
                let below = inner
                    .iter()
                    .map(|&(x, w)| (r * x, r * w, self.interp.basis(r * x)))
                    .collect();
                let mut above = Vec::new();
                let mut a = r;
                while a < 1.0 {
                    let b = (2.0 * a).min(1.0);
                    for &(x, w) in &panel {
                        let rho = a + (b - a) * x;
                        above.push((rho, (b - a) * w, self.interp.basis(rho)));
                    }
                    a = b;
                }
                (below, above)
            })
            .collect();
        (0..self.n_theta)
            .into_par_iter()
            .map(|slot| {
                let k = self.mode_of(slot);
                let mut m = DMatrix::zeros(rings, rings);
                for (i, (below, above)) in quad.iter().enumerate() {
                    let r = self.radius(i);
                    if k <= 0 {
                        for (rho, w, basis) in below {
                            let kern = 2.0 * w * (rho / r).powi((1 - k) as i32);
                            for (j, b) in basis.iter().enumerate() {
                                m[(i, j)] += kern * b;
                            }
                        }
                    } else {
                        for (rho, w, basis) in above {
                            let kern = -2.0 * w * (r / rho).powi((k - 1) as i32);
                            for (j, b) in basis.iter().enumerate() {
                                m[(i, j)] += kern * b;
                            }
                        }
                    }
                }
                m
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_of_disc_is_pi() {
        let g = DiscGrid::default_grid();
        let area: f64 = (0..g.rings()).map(|i| g.area_weight(i) * g.n_theta() as f64).sum();
        assert!((area - std::f64::consts::PI).abs() < 1e-12);
        assert!((0..g.n_r()).all(|i| g.area_weight(i) > 0.0));
    }

    #[test]
    fn differentiation_is_exact_on_polynomials() {
        let g = DiscGrid::new(16, 12).unwrap();
        let nodes = g.interpolator().nodes().to_vec();
        let v: Vec<f64> = nodes.iter().map(|r| r.powi(5) - 2.0 * r).collect();
        let d = g.radial_derivative() * nalgebra::DVector::from_vec(v);
        for (x, dv) in nodes.iter().zip(d.iter()) {
            assert!((dv - (5.0 * x.powi(4) - 2.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn fft_conventions() {
        let g = DiscGrid::new(16, 4).unwrap();
        let samples: Vec<C64> = (0..16).map(|j| C64::from_polar(1.0, -3.0 * g.theta(j))).collect();
        let c = g.coefficients(&samples);
        let slot = g.slot_of(-3).unwrap();
        assert!((c[slot] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(g.mode_of(slot), -3);
        assert!(g.slot_of(8).is_none());
        let back = g.synthesize(&c);
        assert!(back.iter().zip(&samples).all(|(a, b)| (a - b).norm() < 1e-14));
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(DiscGrid::new(100, 8).is_err());
        assert!(DiscGrid::new(64, 1).is_err());
    }
}
