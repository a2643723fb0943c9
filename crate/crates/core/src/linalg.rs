//! Real/complex identifications used throughout the crate.
//!
//! A point of C^n is stored as the real vector (x_1, y_1, ..., x_n, y_n) with
//! z_k = x_k + i y_k. The standard structure J_st is block diagonal with blocks
//! [[0, -1], [1, 0]], i.e. multiplication by i.
//!
//! A real 2n x 2n matrix A that anti-commutes with J_st acts as v -> Q conj(v)
//! for a complex n x n matrix Q. Each 2x2 block of A then has the form
//! [[a, b], [b, -a]] and the corresponding entry of Q is a + i b.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// The standard structure on C^n as a real 2n x 2n matrix.
pub fn j_st(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

pub fn to_real(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn to_complex(x: &[f64]) -> Vec<C64> {
    x.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

/// Complex matrix of an anti-linear real endomorphism (see module docs).
pub fn antilinear_to_complex(a: &DMatrix<f64>) -> DMatrix<C64> {
    let n = a.nrows() / 2;
    DMatrix::from_fn(n, n, |k, l| C64::new(a[(2 * k, 2 * l)], a[(2 * k + 1, 2 * l)]))
}

/// Inverse of [`antilinear_to_complex`].
pub fn complex_to_antilinear(q: &DMatrix<C64>) -> DMatrix<f64> {
    let n = q.nrows();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        for l in 0..n {
            let z = q[(k, l)];
            a[(2 * k, 2 * l)] = z.re;
            a[(2 * k, 2 * l + 1)] = z.im;
            a[(2 * k + 1, 2 * l)] = z.im;
            a[(2 * k + 1, 2 * l + 1)] = -z.re;
        }
    }
    a
}

/// Real matrix of a C-linear map v -> M v.
pub fn complex_linear_to_real(m: &DMatrix<C64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut a = DMatrix::zeros(2 * r, 2 * c);
    for k in 0..r {
        for l in 0..c {
            let z = m[(k, l)];
            a[(2 * k, 2 * l)] = z.re;
            a[(2 * k, 2 * l + 1)] = -z.im;
            a[(2 * k + 1, 2 * l)] = z.im;
            a[(2 * k + 1, 2 * l + 1)] = z.re;
        }
    }
    a
}

/// max |A J_st + J_st A|, zero exactly for anti-linear A.
pub fn antilinearity_defect(a: &DMatrix<f64>) -> f64 {
    let j = j_st(a.nrows() / 2);
    max_abs(&(a * &j + &j * a))
}

/// Entrywise sup norm.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

pub fn norm_c(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Inverse principal square root by the Denman–Beavers iteration.
pub fn inverse_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let mut y = m.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse().ok_or_else(|| Error::Evaluation {
            point: vec![],
            reason: "singular iterate in matrix square root".into(),
        })?;
        let z_inv = z.clone().try_inverse().ok_or_else(|| Error::Evaluation {
            point: vec![],
            reason: "singular iterate in matrix square root".into(),
        })?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let step = max_abs(&(&z_next - &z));
        y = y_next;
        z = z_next;
        if step <= 1e-15 * max_abs(&z).max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::Evaluation {
        point: vec![],
        reason: "matrix square root did not converge".into(),
    })
}

/// Retraction J -> J (-J^2)^{-1/2} onto the set {J^2 = -Id}.
pub fn retract_structure(j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let minus_sq = -(j * j);
    Ok(j * inverse_sqrt(&minus_sq)?)
}

/// Singular values (descending) and a basis of the numerical null space of `a`.
///
/// Wide matrices are padded with zero rows so that the full right singular
/// basis is available. A singular value counts as zero when it is below
/// `rel_tol` times the largest one.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> (Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = a.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = sv.first().copied().unwrap_or(0.0);
    let null: Vec<DVector<f64>> = order
        .iter()
        .zip(&sv)
        .filter(|(_, &s)| s <= rel_tol * top.max(f64::MIN_POSITIVE))
        .map(|(&i, _)| v_t.row(i).transpose())
        .collect();
    let basis = if null.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&null)
    };
    // Only the first `min(rows, cols)` singular values of the padded matrix are
    // meaningful for a tall input; report the descending list as is.
    (sv, basis)
}

/// Descending singular values.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank by relative singular value gap.
///
/// The rank is the number of singular values above `rel_threshold * sigma_1`.
/// The gap is sigma_r / sigma_{r+1}; when the matrix has full column rank there
/// is no trailing singular value and the gap is reported as infinite.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RankDecision {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    #[serde(with = "crate::report::float_or_string")]
    pub gap: f64,
    pub threshold: f64,
}

pub fn decide_rank(a: &DMatrix<f64>, rel_threshold: f64) -> RankDecision {
    let sv = singular_values(a);
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > rel_threshold * top).count();
    let gap = match (rank.checked_sub(1).map(|i| sv[i]), sv.get(rank)) {
        (Some(last), Some(&next)) if next > 0.0 => last / next,
        (Some(_), _) => f64::INFINITY,
        (None, _) => 0.0,
    };
    RankDecision {
        rank,
        singular_values: sv,
        gap,
        threshold: rel_threshold,
    }
}

/// [`decide_rank`] that refuses rank-deficient decisions whose gap is below
/// 1 / rel_threshold.
pub fn decide_rank_strict(a: &DMatrix<f64>, rel_threshold: f64) -> Result<RankDecision> {
    let d = decide_rank(a, rel_threshold);
    if d.gap < 1.0 / rel_threshold {
        return Err(Error::IllConditionedRank { singular_values: d.singular_values, threshold: rel_threshold });
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antilinear_roundtrip_and_action() {
        let q = DMatrix::from_row_slice(2, 2, &[C64::new(0.3, -0.2), C64::new(0.0, 1.0), C64::new(2.0, 0.5), C64::new(-1.0, 0.0)]);
        let a = complex_to_antilinear(&q);
        assert!(antilinearity_defect(&a) < 1e-15);
        assert_eq!(antilinear_to_complex(&a), q);
        let v = [C64::new(0.7, 0.1), C64::new(-0.4, 0.9)];
        let image = &a * DVector::from_vec(to_real(&v));
        let expected: Vec<C64> = (0..2)
            .map(|k| (0..2).map(|l| q[(k, l)] * v[l].conj()).sum())
            .collect();
        for (x, e) in to_complex(image.as_slice()).iter().zip(&expected) {
            assert!((x - e).norm() < 1e-14);
        }
    }

    #[test]
    fn complex_linear_commutes_with_standard_structure() {
        let m = DMatrix::from_row_slice(1, 1, &[C64::new(0.5, 2.0)]);
        let a = complex_linear_to_real(&m);
        let j = j_st(1);
        assert!(max_abs(&(&a * &j - &j * &a)) < 1e-15);
    }

    #[test]
    fn retraction_lands_on_structures() {
        let mut j = j_st(2);
        j[(0, 2)] = 0.07;
        j[(3, 1)] = -0.05;
        j[(1, 1)] = 0.02;
        let r = retract_structure(&j).unwrap();
        let dev = max_abs(&(&r * &r + DMatrix::identity(4, 4)));
        assert!(dev < 1e-12, "deviation {dev}");
    }

    #[test]
    fn rank_of_full_column_matrix_has_infinite_gap() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1e-3, 0.0, 0.0]);
        let d = decide_rank(&a, 1e-6);
        assert_eq!(d.rank, 2);
        assert!(d.gap.is_infinite());
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let (_, null) = null_space(&b, 1e-12);
        assert_eq!(null.ncols(), 1);
    }
}
