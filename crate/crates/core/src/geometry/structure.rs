//! Almost complex structures on a coordinate ball of C^n.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{j_st, max_abs, retract_structure};
use crate::polynomial::MatrixPolynomial;

/// Step of the central differences used when no analytic derivative is given.
pub const FD_STEP: f64 = 1e-5;

/// Tolerance on |J^2 + Id| for a field to count as an almost complex structure.
pub const STRUCTURE_TOLERANCE: f64 = 1e-9;

/// A field Z -> J(Z) of real 2n x 2n matrices with J^2 = -Id.
///
/// Points are real 2n-vectors in the (x_1, y_1, ..., x_n, y_n) ordering.
pub trait AlmostComplexStructure: Send + Sync + fmt::Debug {
    fn dim_complex(&self) -> usize;

    fn eval(&self, z: &[f64]) -> DMatrix<f64>;

    /// First partials dJ/dx_i for i = 0..2n.
    fn jacobian(&self, z: &[f64]) -> Vec<DMatrix<f64>> {
        fd_jacobian(self, z)
    }

    /// Non-integer Hölder exponent the field is assumed to have. Only recorded.
    fn regularity_order(&self) -> f64 {
        2.5
    }

    /// Radius of the coordinate ball on which the field is defined.
    fn domain_radius(&self) -> f64 {
        f64::INFINITY
    }
}

pub type Structure = Arc<dyn AlmostComplexStructure>;

pub fn fd_jacobian<S: AlmostComplexStructure + ?Sized>(s: &S, z: &[f64]) -> Vec<DMatrix<f64>> {
    let mut x = z.to_vec();
    (0..z.len())
        .map(|i| {
            x[i] = z[i] + FD_STEP;
            let plus = s.eval(&x);
            x[i] = z[i] - FD_STEP;
            let minus = s.eval(&x);
            x[i] = z[i];
            (plus - minus) / (2.0 * FD_STEP)
        })
        .collect()
}

/// The standard structure J_st.
#[derive(Debug, Clone, Copy)]
pub struct StandardStructure {
    pub n: usize,
}

impl AlmostComplexStructure for StandardStructure {
    fn dim_complex(&self) -> usize {
        self.n
    }
    fn eval(&self, _z: &[f64]) -> DMatrix<f64> {
        j_st(self.n)
    }
    fn jacobian(&self, z: &[f64]) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(2 * self.n, 2 * self.n); z.len()]
    }
}

pub fn standard(n: usize) -> Structure {
    Arc::new(StandardStructure { n })
}

/// Polynomial matrix field, optionally retracted onto {J^2 = -Id}.
#[derive(Debug, Clone)]
pub struct PolynomialStructure {
    n: usize,
    field: MatrixPolynomial,
    retract: bool,
}

impl PolynomialStructure {
    /// The field as given: J(Z) = field(Z).
    pub fn new(n: usize, field: MatrixPolynomial, retract: bool) -> Result<Self> {
        if field.nvars != 2 * n || field.rows != 2 * n || field.cols != 2 * n {
            return Err(Error::Dimension(format!(
                "polynomial structure on C^{n} needs {} variables and {}x{} coefficients",
                2 * n,
                2 * n,
                2 * n
            )));
        }
        Ok(Self { n, field, retract })
    }

    /// J(Z) = J_st + sum of the given terms.
    pub fn perturbation(n: usize, terms: Vec<(Vec<u32>, DMatrix<f64>)>, retract: bool) -> Result<Self> {
        let mut all = vec![(vec![0; 2 * n], j_st(n))];
        all.extend(terms);
        Self::new(n, MatrixPolynomial::new(2 * n, 2 * n, 2 * n, all)?, retract)
    }

    /// J(Z) = J_st + sum_i x_i A_i.
    pub fn linear(n: usize, slopes: Vec<DMatrix<f64>>, retract: bool) -> Result<Self> {
        let terms = slopes
            .into_iter()
            .enumerate()
            .filter(|(_, a)| max_abs(a) > 0.0)
            .map(|(i, a)| {
                let mut e = vec![0; 2 * n];
                e[i] = 1;
                (e, a)
            })
            .collect();
        Self::perturbation(n, terms, retract)
    }

    pub fn field(&self) -> &MatrixPolynomial {
        &self.field
    }
}

impl AlmostComplexStructure for PolynomialStructure {
    fn dim_complex(&self) -> usize {
        self.n
    }
    fn eval(&self, z: &[f64]) -> DMatrix<f64> {
        let m = self.field.eval(z);
        if self.retract {
            retract_structure(&m).unwrap_or(m)
        } else {
            m
        }
    }
    fn jacobian(&self, z: &[f64]) -> Vec<DMatrix<f64>> {
        if self.retract {
            fd_jacobian(self, z)
        } else {
            (0..2 * self.n).map(|i| self.field.partial(z, i)).collect()
        }
    }
}

/// J = P J_st P^{-1} with P = Id + frame(Z); exact on the constraint.
#[derive(Debug, Clone)]
pub struct ConjugatedStructure {
    n: usize,
    frame: MatrixPolynomial,
}

impl ConjugatedStructure {
    pub fn new(n: usize, frame: MatrixPolynomial) -> Result<Self> {
        if frame.nvars != 2 * n || frame.rows != 2 * n || frame.cols != 2 * n {
            return Err(Error::Dimension("conjugating frame has the wrong shape".into()));
        }
        Ok(Self { n, frame })
    }

    fn frame_at(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2 * self.n, 2 * self.n) + self.frame.eval(z)
    }
}

impl AlmostComplexStructure for ConjugatedStructure {
    fn dim_complex(&self) -> usize {
        self.n
    }
    fn eval(&self, z: &[f64]) -> DMatrix<f64> {
        let p = self.frame_at(z);
        match p.clone().try_inverse() {
            Some(p_inv) => p * j_st(self.n) * p_inv,
            None => DMatrix::from_element(2 * self.n, 2 * self.n, f64::NAN),
        }
    }
    fn jacobian(&self, z: &[f64]) -> Vec<DMatrix<f64>> {
        let p = self.frame_at(z);
        let Some(p_inv) = p.clone().try_inverse() else {
            return fd_jacobian(self, z);
        };
        let js = j_st(self.n);
        let j = &p * &js * &p_inv;
        (0..2 * self.n)
            .map(|i| {
                let dp = self.frame.partial(z, i);
                (&dp * &js - &j * &dp) * &p_inv
            })
            .collect()
    }
}

/// A diffeomorphism of a coordinate ball with explicit inverse and differential.
pub trait Diffeomorphism: Send + Sync + fmt::Debug {
    fn forward(&self, x: &[f64]) -> Vec<f64>;
    fn inverse(&self, x: &[f64]) -> Vec<f64>;
    fn differential(&self, x: &[f64]) -> DMatrix<f64>;
}

/// Phi(Z) = Z - a |w|^2 e_z: shifts the real part of one coordinate by a
/// multiple of |w|^2, w another coordinate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShearMap {
    pub n: usize,
    pub z_index: usize,
    pub w_index: usize,
    pub coefficient: f64,
}

impl ShearMap {
    fn shift(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[2 * self.w_index], x[2 * self.w_index + 1]);
        self.coefficient * (a * a + b * b)
    }
}

impl Diffeomorphism for ShearMap {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        y[2 * self.z_index] -= self.shift(x);
        y
    }
    fn inverse(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        y[2 * self.z_index] += self.shift(x);
        y
    }
    fn differential(&self, x: &[f64]) -> DMatrix<f64> {
        let mut d = DMatrix::identity(2 * self.n, 2 * self.n);
        let row = 2 * self.z_index;
        d[(row, 2 * self.w_index)] -= 2.0 * self.coefficient * x[2 * self.w_index];
        d[(row, 2 * self.w_index + 1)] -= 2.0 * self.coefficient * x[2 * self.w_index + 1];
        d
    }
}

/// Direct image Phi_*(J_st): J(Phi(Z)) = dPhi(Z) J_st dPhi(Z)^{-1}.
#[derive(Debug, Clone)]
pub struct PushforwardStructure {
    n: usize,
    map: Arc<dyn Diffeomorphism>,
}

impl PushforwardStructure {
    pub fn new(n: usize, map: Arc<dyn Diffeomorphism>) -> Self {
        Self { n, map }
    }

    pub fn map(&self) -> &Arc<dyn Diffeomorphism> {
        &self.map
    }
}

impl AlmostComplexStructure for PushforwardStructure {
    fn dim_complex(&self) -> usize {
        self.n
    }
    fn eval(&self, z: &[f64]) -> DMatrix<f64> {
        let pre = self.map.inverse(z);
        let d = self.map.differential(&pre);
        match d.clone().try_inverse() {
            Some(d_inv) => d * j_st(self.n) * d_inv,
            None => DMatrix::from_element(2 * self.n, 2 * self.n, f64::NAN),
        }
    }
}

/// Outcome of [`validate_structure`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ValidationReport {
    pub max_deviation: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Max-norm deviation of J^2 + Id over the sample points.
pub fn validate_structure(j: &dyn AlmostComplexStructure, points: &[Vec<f64>]) -> Result<ValidationReport> {
    let dim = 2 * j.dim_complex();
    let id = DMatrix::<f64>::identity(dim, dim);
    let mut worst = (0.0_f64, vec![0.0; dim]);
    for p in points {
        if p.len() != dim {
            return Err(Error::Dimension(format!("sample point of length {} in R^{dim}", p.len())));
        }
        let m = j.eval(p);
        if m.shape() != (dim, dim) || m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                point: p.clone(),
                reason: "non-finite or misshaped matrix".into(),
            });
        }
        let dev = max_abs(&(&m * &m + &id));
        if dev > worst.0 || worst.1.len() != dim {
            worst = (dev, p.clone());
        }
    }
    Ok(ValidationReport {
        max_deviation: worst.0,
        worst_point: worst.1,
        samples: points.len(),
        tolerance: STRUCTURE_TOLERANCE,
        passed: worst.0 <= STRUCTURE_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_to_antilinear;
    use crate::linalg::C64;

    fn sample_points(dim: usize) -> Vec<Vec<f64>> {
        (0..40)
            .map(|k| (0..dim).map(|i| ((k * 7 + i * 3) as f64 * 0.37).sin() * 0.8).collect())
            .collect()
    }

    #[test]
    fn standard_structure_has_zero_deviation() {
        let r = validate_structure(&StandardStructure { n: 3 }, &sample_points(6)).unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn retracted_antilinear_perturbation_is_a_structure() {
        // J_st + eps L(Z) with L anti-linear, then retracted.
        let q = DMatrix::from_row_slice(2, 2, &[C64::new(0.4, 0.1), C64::new(-0.2, 0.3), C64::new(0.0, 0.5), C64::new(0.1, 0.0)]);
        let a = complex_to_antilinear(&q) * 0.05;
        let j = PolynomialStructure::linear(2, vec![a.clone(), a.transpose(), a.clone() * 0.5, a], true).unwrap();
        let r = validate_structure(&j, &sample_points(4)).unwrap();
        assert!(r.max_deviation <= 1e-9, "{r:?}");
        let raw = PolynomialStructure::linear(2, vec![complex_to_antilinear(&q) * 0.05; 4], false).unwrap();
        let r_raw = validate_structure(&raw, &sample_points(4)).unwrap();
        assert!(r_raw.max_deviation > r.max_deviation);
    }

    #[test]
    fn non_structure_is_flagged() {
        let mut id_terms = DMatrix::identity(2, 2);
        id_terms *= 0.3;
        let j = PolynomialStructure::perturbation(1, vec![(vec![0, 0], id_terms)], false).unwrap();
        let r = validate_structure(&j, &sample_points(2)).unwrap();
        assert!(!r.passed);
        assert!(r.max_deviation > STRUCTURE_TOLERANCE);
    }

    #[test]
    fn nan_field_reports_the_point() {
        let j = ConjugatedStructure::new(
            1,
            MatrixPolynomial::new(2, 2, 2, vec![(vec![0, 0], -DMatrix::identity(2, 2))]).unwrap(),
        )
        .unwrap();
        let err = validate_structure(&j, &[vec![0.1, 0.2]]).unwrap_err();
        assert!(matches!(err, Error::Evaluation { ref point, .. } if point == &vec![0.1, 0.2]));
    }

    #[test]
    fn conjugated_and_pushforward_jacobians_match_differences() {
        let frame = MatrixPolynomial::linear(
            4,
            (0..4)
                .map(|i| DMatrix::from_fn(4, 4, |r, c| 0.05 * (((r * 4 + c + i) as f64) * 1.3).cos()))
                .collect(),
        )
        .unwrap();
        let j = ConjugatedStructure::new(2, frame).unwrap();
        let z = [0.1, -0.2, 0.05, 0.3];
        for (a, b) in j.jacobian(&z).iter().zip(fd_jacobian(&j, &z)) {
            assert!(max_abs(&(a - b)) < 1e-8);
        }
        let push = PushforwardStructure::new(2, Arc::new(ShearMap { n: 2, z_index: 0, w_index: 1, coefficient: 1.0 }));
        let r = validate_structure(&push, &sample_points(4)).unwrap();
        assert!(r.max_deviation < 1e-12);
        assert!(max_abs(&(push.eval(&[0.0; 4]) - j_st(2))) < 1e-15);
    }
}
