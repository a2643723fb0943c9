//! The foliation r_ε(Z) = r(Z) + ε|Z|² - ε/N of a neighborhood of a hypersurface.

use nalgebra::DMatrix;

use super::manifold::{Field, ScalarField};
use crate::error::{Error, Result};

/// Leaf defining function r_ε.
#[derive(Debug, Clone)]
pub struct LeafField {
    pub inner: Field,
    pub epsilon: f64,
    pub n_param: f64,
}

impl ScalarField for LeafField {
    fn nvars(&self) -> usize {
        self.inner.nvars()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        self.inner.value(x) + self.epsilon * sq - self.epsilon / self.n_param
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner
            .gradient(x)
            .into_iter()
            .zip(x)
            .map(|(g, v)| g + 2.0 * self.epsilon * v)
            .collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        self.inner.hessian(x) + DMatrix::identity(d, d) * (2.0 * self.epsilon)
    }
}

pub fn foliation_leaf(r: Field, epsilon: f64, n_param: f64) -> Result<LeafField> {
    if !(n_param > 0.0) {
        return Err(Error::InvalidParameter(format!("N must be positive, got {n_param}")));
    }
    Ok(LeafField { inner: r, epsilon, n_param })
}

/// Default radius 1/(2 sqrt N) of the domain of [`leaf_parameter`].
pub fn default_leaf_radius(n_param: f64) -> f64 {
    0.5 / n_param.sqrt()
}

/// The ε with Z on the leaf {r_ε = 0}: ε = r(Z) / (1/N - |Z|²), for |Z| < radius.
pub fn leaf_parameter(r: &dyn ScalarField, z: &[f64], n_param: f64, radius: f64) -> Result<f64> {
    let norm_sq: f64 = z.iter().map(|v| v * v).sum();
    if norm_sq.sqrt() >= radius || norm_sq >= 1.0 / n_param {
        return Err(Error::FoliationDomain { norm_sq, radius, n_param });
    }
    Ok(r.value(z) / (1.0 / n_param - norm_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::Polynomial;
    use std::sync::Arc;

    #[test]
    fn leaf_examples() {
        let re_z: Field = Arc::new(Polynomial::new(4, vec![(vec![1, 0, 0, 0], 1.0)]).unwrap());
        let zero = foliation_leaf(re_z.clone(), 0.0, 4.0).unwrap();
        assert_eq!(zero.value(&[0.3, 0.1, 0.2, 0.0]), 0.3);
        let leaf = foliation_leaf(re_z.clone(), 0.1, 4.0).unwrap();
        assert!((leaf.value(&[0.0; 4]) + 0.025).abs() < 1e-16);
        // r = 0.01, |Z|^2 = 0.05 -> ε = 0.05
        let z = [0.01, (0.05f64 - 1e-4).sqrt(), 0.0, 0.0];
        let eps = leaf_parameter(re_z.as_ref(), &z, 4.0, default_leaf_radius(4.0)).unwrap();
        assert!((eps - 0.05).abs() < 1e-14);
        let on_leaf = foliation_leaf(re_z.clone(), eps, 4.0).unwrap();
        assert!(on_leaf.value(&z).abs() < 1e-15);
        assert!(leaf_parameter(re_z.as_ref(), &[0.3, 0.0, 0.0, 0.0], 4.0, default_leaf_radius(4.0)).is_err());
    }
}
