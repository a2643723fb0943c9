//! Bishop discs of the limit pair (J_0, E_0).
//!
//! For J_0 = J_st + L_0(w) the holomorphy system reads
//! (z_j)_ζ̄ = -Σ_q Q_{jq}(w) conj((w_q)_ζ), (w_q)_ζ̄ = 0, with Q the complex
//! matrix of J_0 (Q = -(i/2) L_0 in complex notation, exactly, since L_0^2 = 0).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::quadric::QuadricModel;
use super::FamilyParams;
use crate::dbar::{jholo_residual_sup, q_matrix, QField};
use crate::error::{Error, Result};
use crate::geometry::dilation::LimitStructure;
use crate::integral::{cauchy_green, dbar, dzeta, schwarz, BoundarySignal, DiscFunction, DiscGrid, DiscMap};
use crate::linalg::{to_real, C64, I};

/// Largest admitted entry of L_0 outside its block pattern.
pub const PATTERN_TOLERANCE: f64 = 1e-12;

/// Coefficients of the closed-form J_0 discs
/// z_j = i η_j + a_j conj(ζ) - conj(a_j) ζ + φ0_j + φ1_j ζ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitData {
    pub a: Vec<C64>,
    pub phi0: Vec<f64>,
    pub phi1: Vec<C64>,
    /// η_j = y_j - H_j[N,N] Im(sλ conj(c_N)).
    pub eta: Vec<f64>,
    /// l_j(c) = -φ1_j / s.
    pub l: Vec<C64>,
}

/// L_0 may only map w-directions into z-rows, may only depend on w, and its
/// last column may not depend on the last w-coordinate.
pub fn check_block_pattern(limit: &LimitStructure) -> Result<()> {
    let (n, m) = (limit.n, limit.m);
    let last = 2 * (n - 1);
    let mut worst = (0.0_f64, String::new());
    for (i, a) in limit.retained.iter().enumerate() {
        for r in 0..2 * n {
            for c in 0..2 * n {
                let allowed = i >= 2 * m && r < 2 * m && c >= 2 * m && !(i >= last && c >= last);
                if !allowed && a[(r, c)].abs() > worst.0 {
                    worst = (a[(r, c)].abs(), format!("entry ({r}, {c}) of the slope along x_{i}"));
                }
            }
        }
    }
    if worst.0 > PATTERN_TOLERANCE {
        return Err(Error::BlockPattern { defect: worst.0, detail: worst.1 });
    }
    Ok(())
}

fn check_params(model: &QuadricModel, p: &FamilyParams) -> Result<()> {
    p.validate()?;
    if p.y.len() != model.m || p.c.len() != model.n - model.m {
        return Err(Error::Dimension(format!(
            "need {} values of y and {} of c, got {} and {}",
            model.m,
            model.n - model.m,
            p.y.len(),
            p.c.len()
        )));
    }
    Ok(())
}

/// Coefficients of the J_0 disc with w = (c', c_N + s(λ + ζ)).
///
/// φ_j = φ0_j + φ1_j ζ is the holomorphic polynomial with Re φ_j = -H_j(w)/2 on
/// the circle: with u = w(0) - sζ e_N, H_j(w) = H_j(u) + s^2 H_j[N,N] + 2 Re(s ζ u* H_j e_N).
pub fn limit_data(limit: &LimitStructure, model: &QuadricModel, p: &FamilyParams) -> Result<LimitData> {
    check_block_pattern(limit)?;
    model.validate()?;
    check_params(model, p)?;
    let (n, m) = (model.n, model.m);
    let nl = model.line_index();
    let s = p.s();
    let mut u = p.c.clone();
    u[nl] += s * p.lambda;
    let mut point = vec![C64::new(0.0, 0.0); m];
    point.extend(&u);
    let q = q_matrix(limit.j0.as_ref(), &to_real(&point))?;
    let mut out = LimitData { a: vec![], phi0: vec![], phi1: vec![], eta: vec![], l: vec![] };
    for j in 0..m {
        let h = &model.h_forms[j];
        let hnn = h[(nl, nl)].re;
        let u_h_e: C64 = (0..n - m).map(|a| u[a].conj() * h[(a, nl)]).sum();
        out.a.push(-s * q[(j, n - 1)]);
        out.phi0.push(-0.5 * (model.h_value(j, &u) + s * s * hnn));
        out.phi1.push(-s * u_h_e);
        out.l.push(u_h_e);
        out.eta.push(p.y[j] - hnn * (s * p.lambda * p.c[nl].conj()).im);
    }
    Ok(out)
}

/// The J_0 disc at ζ.
pub fn j0_point(data: &LimitData, p: &FamilyParams, zeta: C64) -> Vec<C64> {
    let mut out: Vec<C64> = (0..data.a.len())
        .map(|j| I * data.eta[j] + data.a[j] * zeta.conj() - data.a[j].conj() * zeta + data.phi0[j] + data.phi1[j] * zeta)
        .collect();
    let last = p.c.len() - 1;
    out.extend(p.c.iter().enumerate().map(|(q, &cq)| if q == last { cq + p.s() * (p.lambda + zeta) } else { cq }));
    out
}

/// J_0-holomorphic Bishop disc for E_0 with parameters (t, λ, y, c).
pub fn j0_disc(grid: &Arc<DiscGrid>, limit: &LimitStructure, model: &QuadricModel, p: &FamilyParams) -> Result<DiscMap> {
    let data = limit_data(limit, model, p)?;
    DiscMap::new(
        (0..model.n)
            .map(|k| DiscFunction::from_fn(grid, |z| j0_point(&data, p, z)[k]))
            .collect(),
    )
}

/// Ψ_j = -T(Σ_q Q_{jq}(w) conj((w_q)_ζ)) and the integrands.
#[derive(Debug, Clone)]
pub struct Psi {
    pub psi: Vec<DiscFunction>,
    pub integrand: Vec<DiscFunction>,
}

pub fn psi(w: &[DiscFunction], limit: &LimitStructure) -> Result<Psi> {
    let (n, m) = (limit.n, limit.m);
    if w.len() != n - m {
        return Err(Error::Dimension(format!("w has {} components, expected {}", w.len(), n - m)));
    }
    let grid = w[0].grid().clone();
    let mut comps: Vec<DiscFunction> = (0..m).map(|_| DiscFunction::zeros(&grid)).collect();
    comps.extend(w.iter().cloned());
    let f = DiscMap::new(comps)?;
    let qs = QField::new(limit.j0.as_ref()).along(&f)?;
    let dw: Vec<DiscFunction> = w.iter().map(dzeta).collect();
    let integrand: Vec<DiscFunction> = (0..m)
        .map(|j| {
            let values = (0..grid.len())
                .map(|idx| (0..n - m).map(|q| qs[idx][(j, m + q)] * dw[q].values()[idx].conj()).sum())
                .collect();
            DiscFunction::from_values(&grid, values)
        })
        .collect::<Result<_>>()?;
    let psi = integrand.iter().map(|g| cauchy_green(g).scale(C64::new(-1.0, 0.0))).collect();
    Ok(Psi { psi, integrand })
}

fn real_boundary(f: &DiscFunction, map: impl Fn(C64) -> f64) -> Result<BoundarySignal> {
    let values: Vec<f64> = f.boundary_values().iter().map(|&v| map(v)).collect();
    BoundarySignal::from_real(f.grid(), &values)
}

/// z_j = Ψ_j - I_S(Re Ψ_j) - I_S(H_j(w))/2 + i y_j for a holomorphic w.
pub fn quadric_boundary_disc(w: &[DiscFunction], y: &[f64], limit: &LimitStructure, model: &QuadricModel) -> Result<DiscMap> {
    check_block_pattern(limit)?;
    if y.len() != model.m || w.len() != model.n - model.m {
        return Err(Error::Dimension("y and w do not match the model".into()));
    }
    let grid = w[0].grid().clone();
    let ps = psi(w, limit)?;
    let mut comps = Vec::with_capacity(model.n);
    for j in 0..model.m {
        let re_psi = schwarz(&real_boundary(&ps.psi[j], |v| v.re)?)?;
        let hb: Vec<f64> = (0..grid.n_theta())
            .map(|t| {
                let idx = grid.index(grid.rings() - 1, t);
                let wv: Vec<C64> = w.iter().map(|f| f.values()[idx]).collect();
                model.h_value(j, &wv)
            })
            .collect();
        let ih = schwarz(&BoundarySignal::from_real(&grid, &hb)?)?;
        let z = ps.psi[j]
            .sub(&re_psi)
            .sub(&ih.scale(C64::new(0.5, 0.0)))
            .add(&DiscFunction::constant(&grid, I * y[j]));
        comps.push(z);
    }
    comps.extend(w.iter().cloned());
    DiscMap::new(comps)
}

/// (z, w) ↦ (z - Ψ(w) + I_S(Re Ψ(w)), w) with the residuals on both sides.
#[derive(Debug, Clone)]
pub struct Transfer {
    pub output: DiscMap,
    /// sup |f_ζ̄ + Q_0(f) conj(f_ζ)| of the input over interior rings.
    pub input_holomorphy: f64,
    /// sup |∂̄ output| over interior rings.
    pub output_holomorphy: f64,
    pub input_boundary: f64,
    pub output_boundary: f64,
}

pub fn standard_transfer(f: &DiscMap, limit: &LimitStructure, model: &QuadricModel) -> Result<Transfer> {
    let m = model.m;
    if f.dim() != model.n {
        return Err(Error::Dimension(format!("disc in C^{} for a model in C^{}", f.dim(), model.n)));
    }
    let ps = psi(&f.components[m..], limit)?;
    let mut comps = Vec::with_capacity(f.dim());
    for j in 0..m {
        let re_psi = schwarz(&real_boundary(&ps.psi[j], |v| v.re)?)?;
        comps.push(f.components[j].sub(&ps.psi[j]).add(&re_psi));
    }
    comps.extend(f.components[m..].iter().cloned());
    let output = DiscMap::new(comps)?;
    let output_holomorphy = output
        .components
        .iter()
        .map(|c| dbar(c).interior_values().iter().fold(0.0_f64, |a, z| a.max(z.norm())))
        .fold(0.0, f64::max);
    Ok(Transfer {
        input_holomorphy: jholo_residual_sup(f, limit.j0.as_ref())?,
        output_holomorphy,
        input_boundary: model.boundary_residual(f),
        output_boundary: model.boundary_residual(&output),
        output,
    })
}
