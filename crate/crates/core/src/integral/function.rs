//! Sampled functions on the disc grid and on its boundary circle.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::grid::DiscGrid;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Tolerance of the sample/coefficient consistency checks.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-10;

/// Samples on the N_θ boundary nodes together with their Fourier coefficients.
#[derive(Debug, Clone)]
pub struct BoundarySignal {
    grid: Arc<DiscGrid>,
    samples: Vec<C64>,
    coeffs: Vec<C64>,
}

impl BoundarySignal {
    pub fn new(grid: &Arc<DiscGrid>, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.n_theta() {
            return Err(Error::Dimension(format!(
                "boundary signal has {} samples on a grid with {} boundary nodes",
                samples.len(),
                grid.n_theta()
            )));
        }
        let coeffs = grid.coefficients(&samples);
        Ok(Self { grid: grid.clone(), samples, coeffs })
    }

    pub fn from_real(grid: &Arc<DiscGrid>, samples: &[f64]) -> Result<Self> {
        Self::new(grid, samples.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Samples θ -> f(θ) at the boundary nodes.
    pub fn from_fn(grid: &Arc<DiscGrid>, f: impl Fn(f64) -> C64) -> Self {
        let samples = (0..grid.n_theta()).map(|j| f(grid.theta(j))).collect();
        Self::new(grid, samples).expect("sample count matches the grid")
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// Coefficients in FFT order.
    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coefficient(&self, k: i64) -> C64 {
        self.grid.slot_of(k).map_or(C64::new(0.0, 0.0), |s| self.coeffs[s])
    }

    pub fn max_imag(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
    }

    /// |mean |f|^2 - sum |c_k|^2|, zero up to rounding.
    pub fn parseval_defect(&self) -> f64 {
        let time: f64 = self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64;
        let freq: f64 = self.coeffs.iter().map(|z| z.norm_sqr()).sum();
        (time - freq).abs()
    }

    /// Discrete Fourier-decay seminorm sum_k |k|^s |c_k|.
    pub fn fourier_seminorm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(slot, c)| (self.grid.mode_of(slot).unsigned_abs() as f64).powf(s) * c.norm())
            .sum()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self::new(&self.grid, self.samples.iter().map(|&z| f(z)).collect()).expect("same grid")
    }
}

/// Per-ring Fourier coefficients: row = ring (boundary last), column = FFT slot.
pub type ModeTable = DMatrix<C64>;

/// Complex function sampled at every grid node, boundary ring included.
#[derive(Debug, Clone)]
pub struct DiscFunction {
    grid: Arc<DiscGrid>,
    values: Vec<C64>,
    boundary_coeffs: Vec<C64>,
}

impl DiscFunction {
    /// Values in grid storage order (ring-major, boundary ring last).
    pub fn from_values(grid: &Arc<DiscGrid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "disc function has {} values on a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let start = grid.index(grid.n_r(), 0);
        let boundary_coeffs = grid.coefficients(&values[start..]);
        Ok(Self { grid: grid.clone(), values, boundary_coeffs })
    }

    pub fn from_fn(grid: &Arc<DiscGrid>, f: impl Fn(C64) -> C64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self::from_values(grid, values).expect("value count matches the grid")
    }

    pub fn zeros(grid: &Arc<DiscGrid>) -> Self {
        Self::from_values(grid, vec![C64::new(0.0, 0.0); grid.len()]).expect("value count matches the grid")
    }

    pub fn constant(grid: &Arc<DiscGrid>, c: C64) -> Self {
        Self::from_values(grid, vec![c; grid.len()]).expect("value count matches the grid")
    }

    /// Rebuild from a per-ring mode table.
    pub fn from_modes(grid: &Arc<DiscGrid>, modes: &ModeTable) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.rings() {
            let row: Vec<C64> = modes.row(i).iter().copied().collect();
            values.extend(grid.synthesize(&row));
        }
        Self::from_values(grid, values).expect("mode table matches the grid")
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn value(&self, ring: usize, j: usize) -> C64 {
        self.values[self.grid.index(ring, j)]
    }

    pub fn interior_values(&self) -> &[C64] {
        &self.values[..self.grid.index(self.grid.n_r(), 0)]
    }

    pub fn boundary_values(&self) -> &[C64] {
        &self.values[self.grid.index(self.grid.n_r(), 0)..]
    }

    pub fn boundary_coefficients(&self) -> &[C64] {
        &self.boundary_coeffs
    }

    pub fn boundary_signal(&self) -> BoundarySignal {
        BoundarySignal::new(&self.grid, self.boundary_values().to_vec()).expect("same grid")
    }

    /// Max deviation between the boundary samples and their Fourier reconstruction.
    pub fn boundary_consistency(&self) -> f64 {
        let rebuilt = self.grid.synthesize(&self.boundary_coeffs);
        rebuilt
            .iter()
            .zip(self.boundary_values())
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()))
    }

    pub fn modes(&self) -> ModeTable {
        let n = self.grid.n_theta();
        let mut table = DMatrix::from_element(self.grid.rings(), n, C64::new(0.0, 0.0));
        for i in 0..self.grid.rings() {
            let c = self.grid.coefficients(&self.values[i * n..(i + 1) * n]);
            for (s, v) in c.into_iter().enumerate() {
                table[(i, s)] = v;
            }
        }
        table
    }

    /// Value at an arbitrary point of the closed disc by mode-wise radial
    /// interpolation and Fourier synthesis.
    pub fn eval_at(&self, zeta: C64) -> C64 {
        self.eval_with_modes(&self.modes(), zeta)
    }

    pub fn eval_many(&self, points: &[C64]) -> Vec<C64> {
        let modes = self.modes();
        points.iter().map(|&z| self.eval_with_modes(&modes, z)).collect()
    }

    fn eval_with_modes(&self, modes: &ModeTable, zeta: C64) -> C64 {
        let r = zeta.norm().min(1.0);
        let theta = zeta.arg();
        let basis = self.grid.interpolator().basis(r);
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..self.grid.n_theta() {
            let k = self.grid.mode_of(s);
            let c: C64 = basis.iter().enumerate().map(|(i, b)| modes[(i, s)] * *b).sum();
            acc += c * C64::from_polar(1.0, k as f64 * theta);
        }
        acc
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
    }

    pub fn max_diff(&self, other: &DiscFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()))
    }

    /// Area integral over the disc.
    pub fn integrate(&self) -> C64 {
        (0..self.grid.n_r())
            .map(|i| {
                let s: C64 = (0..self.grid.n_theta()).map(|j| self.value(i, j)).sum();
                s * self.grid.area_weight(i)
            })
            .sum()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self::from_values(&self.grid, self.values.iter().map(|&z| f(z)).collect()).expect("same grid")
    }

    /// Pointwise combination with a second function on the same grid.
    pub fn zip_map(&self, other: &DiscFunction, f: impl Fn(C64, C64) -> C64) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_values(&self.grid, values).expect("same grid")
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|z| z * c)
    }

    pub fn add(&self, other: &DiscFunction) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DiscFunction) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn to_record(&self) -> DiscFunctionRecord {
        DiscFunctionRecord {
            n_theta: self.grid.n_theta(),
            n_r: self.grid.n_r(),
            re: self.values.iter().map(|z| z.re).collect(),
            im: self.values.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_record(record: &DiscFunctionRecord) -> Result<Self> {
        let grid = DiscGrid::new(record.n_theta, record.n_r)?;
        if record.re.len() != record.im.len() {
            return Err(Error::Dimension("real and imaginary parts differ in length".into()));
        }
        let values = record.re.iter().zip(&record.im).map(|(&a, &b)| C64::new(a, b)).collect();
        Self::from_values(&grid, values)
    }
}

/// Serialized form of a [`DiscFunction`]; floats round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscFunctionRecord {
    pub n_theta: usize,
    pub n_r: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// A map from the disc into C^n, one component per complex coordinate.
#[derive(Debug, Clone)]
pub struct DiscMap {
    pub components: Vec<DiscFunction>,
}

impl DiscMap {
    pub fn new(components: Vec<DiscFunction>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Dimension("disc map needs at least one component".into()));
        };
        if components.iter().any(|c| c.grid() != first.grid()) {
            return Err(Error::Dimension("disc map components live on different grids".into()));
        }
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        self.components[0].grid()
    }

    /// Point of C^n at storage index `idx`.
    pub fn at(&self, idx: usize) -> Vec<C64> {
        self.components.iter().map(|c| c.values()[idx]).collect()
    }

    /// Real 2n-vector at storage index `idx`.
    pub fn real_at(&self, idx: usize) -> Vec<f64> {
        self.components.iter().flat_map(|c| [c.values()[idx].re, c.values()[idx].im]).collect()
    }

    pub fn eval_at(&self, zeta: C64) -> Vec<C64> {
        self.components.iter().map(|c| c.eval_at(zeta)).collect()
    }

    pub fn max_diff(&self, other: &DiscMap) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0_f64, |a, (x, y)| a.max(x.max_diff(y)))
    }

    /// sup over nodes of the Euclidean norm of the point.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid().len())
            .map(|i| self.at(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            components: self.components.iter().map(|f| f.scale(C64::new(c, 0.0))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_consistency_and_parseval() {
        let g = DiscGrid::new(64, 16).unwrap();
        let f = DiscFunction::from_fn(&g, |z| z * z + z.conj() * 0.5 + 1.0);
        assert!(f.boundary_consistency() < CONSISTENCY_TOLERANCE);
        let b = f.boundary_signal();
        assert!(b.parseval_defect() < CONSISTENCY_TOLERANCE);
        assert!((b.coefficient(2) - C64::new(1.0, 0.0)).norm() < 1e-13);
        assert!((b.coefficient(-1) - C64::new(0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn off_grid_evaluation_of_polynomial() {
        let g = DiscGrid::new(32, 16).unwrap();
        let p = |z: C64| z.powu(3) - z.conj() * z * 2.0 + C64::new(0.0, 1.0);
        let f = DiscFunction::from_fn(&g, p);
        for z in [C64::new(0.3, -0.2), C64::new(-0.71, 0.5), C64::new(0.0, 0.0), C64::new(0.6, 0.8)] {
            assert!((f.eval_at(z) - p(z)).norm() < 1e-11, "{z}");
        }
    }

    #[test]
    fn record_round_trip_is_exact() {
        let g = DiscGrid::new(16, 6).unwrap();
        let f = DiscFunction::from_fn(&g, |z| (z * 1.7).exp());
        let json = serde_json::to_string(&f.to_record()).unwrap();
        let back: DiscFunctionRecord = serde_json::from_str(&json).unwrap();
        let g2 = DiscFunction::from_record(&back).unwrap();
        assert_eq!(g2.values(), f.values());
    }
}
