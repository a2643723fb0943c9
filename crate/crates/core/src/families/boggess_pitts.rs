//! The Boggess–Pitts discs attached to E_0' = {Re z_j = 0, 2 Re z_{n-1} = |w|^2}.
//!
//! Real parameter vectors are ordered (λ, y_1, .., y_{n-1}, Re c, Im c).

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::FamilyParams;
use crate::error::{Error, Result};
use crate::integral::{DiscFunction, DiscGrid, DiscMap};
use crate::linalg::{decide_rank_strict, to_real, RankDecision, C64, I};

/// Relative singular value threshold of the rank decisions.
pub const RANK_THRESHOLD: f64 = 1e-6;
/// Step of the central differences in parameter space.
pub const PARAMETER_STEP: f64 = 1e-5;

fn check_shape(p: &FamilyParams, n: usize) -> Result<()> {
    if n < 2 || p.y.len() != n - 1 || p.c.len() != 1 {
        return Err(Error::Dimension(format!(
            "Boggess–Pitts discs in C^{n} need n - 1 = {} values of y and one c (got {}, {})",
            n.saturating_sub(1),
            p.y.len(),
            p.c.len()
        )));
    }
    Ok(())
}

/// f(t, λ, y, c)(ζ); no range checks on (t, λ).
pub fn bp_point(p: &FamilyParams, n: usize, zeta: C64) -> Vec<C64> {
    let s = p.s();
    let c = p.c[0];
    let mut out: Vec<C64> = p.y[..n - 2].iter().map(|&y| I * y).collect();
    let constant = 0.5 * (c.norm_sqr() + s * s * (p.lambda * p.lambda + 1.0)) + s * p.lambda * c.conj() + I * p.y[n - 2];
    out.push(constant + (s * c.conj() + s * s * p.lambda) * zeta);
    out.push(c + s * (p.lambda + zeta));
    out
}

pub fn boggess_pitts(grid: &Arc<DiscGrid>, p: &FamilyParams, n: usize) -> Result<DiscMap> {
    p.validate()?;
    check_shape(p, n)?;
    DiscMap::new(
        (0..n)
            .map(|k| DiscFunction::from_fn(grid, |z| bp_point(p, n, z)[k]))
            .collect(),
    )
}

/// lim_{λ→1} f(t, λ, y, c)(-λ) = (i y_1, .., i y_{n-2}, |c|^2/2 + i y_{n-1}, c).
pub fn attachment_limit(y: &[f64], c: C64) -> Vec<C64> {
    let n = y.len() + 1;
    let mut out: Vec<C64> = y[..n - 2].iter().map(|&v| I * v).collect();
    out.push(0.5 * c.norm_sqr() + I * y[n - 2]);
    out.push(c);
    out
}

/// Central-difference Jacobian of a map R^k -> R^d.
pub fn central_jacobian(f: impl Fn(&[f64]) -> Result<Vec<f64>>, x0: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let mut cols = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        let mut xp = x0.to_vec();
        let mut xm = x0.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let (fp, fm) = (f(&xp)?, f(&xm)?);
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    let rows = cols.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]))
}

/// Relative size of the part of `v`'s normal component (the Re z_j directions
/// for j < m) that is not along Re z_{nu}.
pub fn transverse_alignment(v: &[f64], m: usize, nu: usize) -> f64 {
    let normal: Vec<f64> = (0..m).map(|j| v[2 * j]).collect();
    let total = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
    if total == 0.0 {
        return f64::INFINITY;
    }
    let off = normal.iter().enumerate().filter(|(j, _)| *j != nu).fold(0.0, |acc, (_, x)| acc + x * x);
    off.sqrt() / total
}

/// Rank of the attachment Jacobian and its λ-column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachRank {
    pub rank: RankDecision,
    pub expected: usize,
    /// ∂/∂λ of the attachment point.
    pub lambda_derivative: Vec<f64>,
    /// [`transverse_alignment`] of the λ-column against ν = Re z_{n-1}.
    pub nu_alignment: f64,
}

fn params_from(x: &[f64], t: f64, n: usize) -> FamilyParams {
    FamilyParams::new(t, x[0], x[1..n].to_vec(), vec![C64::new(x[n], x[n + 1])])
}

/// Differential of (λ, y, c) ↦ f(t, λ, y, c)(-λ) at (1, 0, 0).
pub fn bp_attach_jacobian(t: f64, n: usize) -> Result<AttachRank> {
    if !(t > 0.0) || n < 2 {
        return Err(Error::InvalidParameter(format!("need t > 0 and n >= 2, got t = {t}, n = {n}")));
    }
    let mut x0 = vec![0.0; n + 2];
    x0[0] = 1.0;
    let jac = central_jacobian(
        |x| {
            let p = params_from(x, t, n);
            Ok(to_real(&bp_point(&p, n, C64::new(-p.lambda, 0.0))))
        },
        &x0,
        PARAMETER_STEP,
    )?;
    let lambda_derivative: Vec<f64> = jac.column(0).iter().copied().collect();
    let nu_alignment = transverse_alignment(&lambda_derivative, n - 1, n - 2);
    Ok(AttachRank { rank: decide_rank_strict(&jac, RANK_THRESHOLD)?, expected: n + 2, lambda_derivative, nu_alignment })
}

/// Differential of (y, c) ↦ f(t, 1, y, c)(-1) at (y, c).
pub fn attachment_map_rank(t: f64, n: usize, y: &[f64], c: C64) -> Result<RankDecision> {
    let mut x0 = y.to_vec();
    x0.extend([c.re, c.im]);
    let jac = central_jacobian(
        |x| {
            let mut full = vec![1.0];
            full.extend_from_slice(x);
            Ok(to_real(&bp_point(&params_from(&full, t, n), n, C64::new(-1.0, 0.0))))
        },
        &x0,
        PARAMETER_STEP,
    )?;
    decide_rank_strict(&jac, RANK_THRESHOLD)
}
