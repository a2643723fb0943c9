//! Model quadrics E_0 = {z_j + conj(z_j) + H_j(0, w) = 0}.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::manifold::{GenericSubmanifold, QuadraticData};
use crate::integral::DiscMap;
use crate::linalg::{max_abs_c, C64};
use crate::polynomial::Polynomial;

/// Tolerance of the Hermitian and normalization checks.
pub const MODEL_TOLERANCE: f64 = 1e-12;

/// E_0 in C^n with codimension m: Re z_j = -H_j(w) / 2, where H_j(w) = w* H_j w
/// for (n-m) x (n-m) Hermitian H_j and w in C^{n-m}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadricModel {
    pub n: usize,
    pub m: usize,
    pub h_forms: Vec<DMatrix<C64>>,
}

/// Normalization of the forms along the line l = (0, .., 0, ζ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationFlags {
    /// H_m has coefficient -1 on |w_{n-m}|^2.
    pub pivot_minus_one: bool,
    /// H_j lacks |w_{n-m}|^2 for j < m.
    pub others_lack_line: bool,
    /// H_m has no cross terms between w_{n-m} and the other w's.
    pub pivot_decoupled: bool,
}

impl QuadricModel {
    pub fn new(n: usize, m: usize, h_forms: Vec<DMatrix<C64>>) -> Result<Self> {
        if m == 0 || m >= n {
            return Err(Error::InvalidModel(format!("need 0 < m < n, got m = {m}, n = {n}")));
        }
        if h_forms.len() != m {
            return Err(Error::InvalidModel(format!("{} forms for codimension {m}", h_forms.len())));
        }
        let k = n - m;
        for (j, h) in h_forms.iter().enumerate() {
            if h.nrows() != k || h.ncols() != k {
                return Err(Error::InvalidModel(format!("H_{} is not {k}x{k}", j + 1)));
            }
            let dev = max_abs_c(&(h - h.adjoint()));
            if dev > MODEL_TOLERANCE {
                return Err(Error::InvalidModel(format!("H_{} is not Hermitian (defect {dev:.3e})", j + 1)));
            }
        }
        Ok(Self { n, m, h_forms })
    }

    /// The model E_0' = {Re z_j = 0, 2 Re z_{n-1} = |w|^2} in C^n.
    pub fn boggess_pitts(n: usize) -> Result<Self> {
        let mut forms = vec![DMatrix::from_element(1, 1, C64::new(0.0, 0.0)); n.saturating_sub(1)];
        if let Some(last) = forms.last_mut() {
            last[(0, 0)] = C64::new(-1.0, 0.0);
        }
        Self::new(n, n.saturating_sub(1), forms)
    }

    /// Index of the last w-coordinate within w.
    pub fn line_index(&self) -> usize {
        self.n - self.m - 1
    }

    /// H_j(w) = w* H_j w.
    pub fn h_value(&self, j: usize, w: &[C64]) -> f64 {
        let h = &self.h_forms[j];
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..w.len() {
            for b in 0..w.len() {
                acc += w[a].conj() * h[(a, b)] * w[b];
            }
        }
        acc.re
    }

    /// Re z_j + H_j(w)/2 at a point (z, w) in complex coordinates.
    pub fn defining(&self, point: &[C64]) -> Vec<f64> {
        let w = &point[self.m..];
        (0..self.m).map(|j| point[j].re + 0.5 * self.h_value(j, w)).collect()
    }

    /// Largest |Re z_j + H_j(w)/2| over the boundary circle of a disc.
    pub fn boundary_residual(&self, f: &DiscMap) -> f64 {
        let grid = f.grid();
        let ring = grid.rings() - 1;
        (0..grid.n_theta())
            .map(|t| {
                self.defining(&f.at(grid.index(ring, t)))
                    .iter()
                    .fold(0.0_f64, |a, x| a.max(x.abs()))
            })
            .fold(0.0, f64::max)
    }

    pub fn flags(&self) -> NormalizationFlags {
        let l = self.line_index();
        let last = &self.h_forms[self.m - 1];
        NormalizationFlags {
            pivot_minus_one: (last[(l, l)] + 1.0).norm() <= MODEL_TOLERANCE,
            others_lack_line: self.h_forms[..self.m - 1].iter().all(|h| h[(l, l)].norm() <= MODEL_TOLERANCE),
            pivot_decoupled: (0..l).all(|a| last[(a, l)].norm() <= MODEL_TOLERANCE),
        }
    }

    /// Requires the pivot and line flags. Cross terms of H_m with w_{n-m} are
    /// admitted: the disc formulas absorb them.
    pub fn validate(&self) -> Result<()> {
        let f = self.flags();
        if !f.pivot_minus_one || !f.others_lack_line {
            return Err(Error::InvalidModel(format!("normalization flags unset: {f:?}; call normalize first")));
        }
        Ok(())
    }

    /// Replace r by A r (and z by A z) so that only H_m involves |w_{n-m}|^2,
    /// with coefficient -1. Returns the normalized model and A.
    pub fn normalize(&self) -> Result<(QuadricModel, DMatrix<f64>)> {
        let l = self.line_index();
        let d: Vec<f64> = self.h_forms.iter().map(|h| h[(l, l)].re).collect();
        let (p, dp) = d
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("m > 0");
        if dp.abs() <= MODEL_TOLERANCE {
            return Err(Error::InvalidModel("the forms vanish on the line (0, .., 0, ζ)".into()));
        }
        let m = self.m;
        let mut a = DMatrix::<f64>::identity(m, m);
        for j in 0..m {
            if j != p {
                a[(j, p)] = -d[j] / dp;
            }
        }
        for k in 0..m {
            a[(p, k)] = 0.0;
        }
        a[(p, p)] = -1.0 / dp;
        // move row p last
        let mut order: Vec<usize> = (0..m).filter(|&j| j != p).collect();
        order.push(p);
        let a = DMatrix::from_fn(m, m, |r, c| a[(order[r], c)]);
        let forms = (0..m)
            .map(|r| {
                let mut h = DMatrix::from_element(self.n - m, self.n - m, C64::new(0.0, 0.0));
                for k in 0..m {
                    h += &self.h_forms[k] * C64::new(a[(r, k)], 0.0);
                }
                h
            })
            .collect();
        Ok((QuadricModel::new(self.n, m, forms)?, a))
    }

    /// E_0 in graph form, h_j = -H_j(w)/2 over (Im z, Re w_1, Im w_1, ..).
    pub fn to_manifold(&self) -> Result<GenericSubmanifold> {
        let k = self.n - self.m;
        let nvars = self.m + 2 * k;
        let var = |a: usize, imag: bool| self.m + 2 * a + usize::from(imag);
        let mono = |pairs: &[(usize, u32)]| {
            let mut e = vec![0u32; nvars];
            for &(i, p) in pairs {
                e[i] += p;
            }
            e
        };
        let comps = self
            .h_forms
            .iter()
            .map(|h| {
                let mut terms = Vec::new();
                for a in 0..k {
                    let d = -0.5 * h[(a, a)].re;
                    terms.push((mono(&[(var(a, false), 2)]), d));
                    terms.push((mono(&[(var(a, true), 2)]), d));
                    for b in a + 1..k {
                        let (re, im) = (h[(a, b)].re, h[(a, b)].im);
                        // -Re(conj(w_a) H_ab w_b)
                        terms.push((mono(&[(var(a, false), 1), (var(b, false), 1)]), -re));
                        terms.push((mono(&[(var(a, true), 1), (var(b, true), 1)]), -re));
                        terms.push((mono(&[(var(a, false), 1), (var(b, true), 1)]), im));
                        terms.push((mono(&[(var(a, true), 1), (var(b, false), 1)]), -im));
                    }
                }
                terms.retain(|t| t.1 != 0.0);
                Polynomial::new(nvars, terms)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut e = GenericSubmanifold::polynomial(self.n, comps)?;
        let embed = |h: &DMatrix<C64>| {
            let mut out = DMatrix::from_element(self.n, self.n, C64::new(0.0, 0.0));
            out.view_mut((self.m, self.m), (k, k)).copy_from(h);
            out
        };
        e.quadratic = Some(QuadraticData {
            q_forms: vec![DMatrix::from_element(self.n, self.n, C64::new(0.0, 0.0)); self.m],
            h_forms: self.h_forms.iter().map(embed).collect(),
        });
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::to_real;

    fn sample_model() -> QuadricModel {
        // C^4, m = 2, w in C^2
        let h1 = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.3, 0.2), C64::new(0.3, -0.2), C64::new(2.0, 0.0)]);
        let h2 = DMatrix::from_row_slice(2, 2, &[C64::new(-0.5, 0.0), C64::new(0.0, 0.4), C64::new(0.0, -0.4), C64::new(-4.0, 0.0)]);
        QuadricModel::new(4, 2, vec![h1, h2]).unwrap()
    }

    #[test]
    fn graph_form_matches_hermitian_forms() {
        let q = sample_model();
        let e = q.to_manifold().unwrap();
        let w = [C64::new(0.3, -0.1), C64::new(-0.2, 0.25)];
        let z: Vec<C64> = (0..2).map(|j| C64::new(-0.5 * q.h_value(j, &w), 0.1 * j as f64)).collect();
        let point: Vec<C64> = z.into_iter().chain(w).collect();
        assert!(e.residual_at(&point) < 1e-15);
        assert!(q.defining(&point).iter().all(|x| x.abs() < 1e-15));
        let mut shifted = to_real(&point);
        shifted[2] += 1e-3;
        assert!((e.defining(&shifted)[1] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn normalization_isolates_the_line() {
        let q = sample_model();
        assert!(q.validate().is_err());
        let (nq, a) = q.normalize().unwrap();
        let f = nq.flags();
        assert!(f.pivot_minus_one && f.others_lack_line, "{f:?}");
        nq.validate().unwrap();
        // H' = A H pointwise
        let w = [C64::new(0.7, 0.1), C64::new(-0.3, 0.5)];
        for r in 0..2 {
            let expected: f64 = (0..2).map(|k| a[(r, k)] * q.h_value(k, &w)).sum();
            assert!((nq.h_value(r, &w) - expected).abs() < 1e-14);
        }
        let bp = QuadricModel::boggess_pitts(3).unwrap();
        assert!(bp.flags().pivot_minus_one && bp.flags().pivot_decoupled);
        assert_eq!(bp.normalize().unwrap().1, DMatrix::identity(2, 2));
    }
}
