//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero on any FAIL.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use bishopdisc::bishop::{family_chart_point, solve_bishop, BishopConfig, Dilation};
use bishopdisc::dbar::{phi_forward, phi_inverse, PhiConfig};
use bishopdisc::experiments::{max_levi_on_h, run, sample_on_manifold, ScenarioConfig, ScenarioReport};
use bishopdisc::families::{attachment_limit, attachment_map_rank, boggess_pitts, bp_attach_jacobian, FamilyParams, QuadricModel};
use bishopdisc::geometry::descriptor::{read_json, ManifoldDescriptor, StructureDescriptor};
use bishopdisc::geometry::dilation::{structure_distance, BallGrid};
use bishopdisc::geometry::levi::{center, levi_direct, levi_disc, unit_vector, DiscLeviConfig};
use bishopdisc::geometry::structure::{standard, ConjugatedStructure, Structure};
use bishopdisc::geometry::tangent::holomorphic_tangent;
use bishopdisc::integral::operators::{dbar_cauchy_green_residual, refinement_study};
use bishopdisc::integral::{schwarz, schwarz_coefficients, BoundarySignal, DiscFunction, DiscGrid, DiscMap};
use bishopdisc::linalg::{to_real, C64};
use bishopdisc::polynomial::{MatrixPolynomial, Polynomial};
use bishopdisc::report::canonical_json;

struct Line {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

impl Line {
    fn new(id: usize, name: &'static str, checks: &[(bool, String)]) -> Self {
        let passed = checks.iter().all(|c| c.0);
        let detail = checks
            .iter()
            .map(|(ok, s)| if *ok { s.clone() } else { format!("{s} [violated]") })
            .collect::<Vec<_>>()
            .join("; ");
        Self { id, name, passed, detail }
    }

    fn error(id: usize, name: &'static str, err: impl std::fmt::Display) -> Self {
        Self { id, name, passed: false, detail: format!("error: {err}") }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&scenario(name)).expect("bundled scenario loads")
}

fn verdict(report: &ScenarioReport, name: &str) -> Option<f64> {
    report.verdicts.iter().find(|v| v.name == name).map(|v| v.measured)
}

fn stat(report: &ScenarioReport, name: &str) -> f64 {
    report.statistics.get(name).map_or(f64::NAN, |r| r.0)
}

fn check(ok: bool, text: String) -> (bool, String) {
    (ok, text)
}

/// Random Σ a_{pq} ζ^p ζ̄^q with p + q ≤ degree, coefficients in the unit square.
fn random_mixed(rng: &mut ChaCha8Rng, degree: u32) -> impl Fn(C64) -> C64 + Sync + Send {
    let mut terms = Vec::new();
    for d in 0..=degree {
        for q in 0..=d {
            terms.push((d - q, q, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
    }
    move |z: C64| terms.iter().map(|&(p, q, a)| a * z.powu(p) * z.conj().powu(q)).sum()
}

/// Linear conjugated structure J = P J_st P^{-1}, P = Id + scale Σ x_i A_i.
fn conjugated(n: usize, slopes: &[DMatrix<f64>], scale: f64) -> Structure {
    let mats = slopes.iter().map(|a| a * scale).collect();
    Arc::new(ConjugatedStructure::new(n, MatrixPolynomial::linear(2 * n, mats).unwrap()).unwrap())
}

fn random_slopes(rng: &mut ChaCha8Rng, n: usize) -> Vec<DMatrix<f64>> {
    (0..2 * n).map(|_| DMatrix::from_fn(2 * n, 2 * n, |_, _| rng.gen_range(-1.0..1.0))).collect()
}

/// Scale s with d(J_s, J_st) = target on the unit ball, by bisection.
fn calibrate(n: usize, slopes: &[DMatrix<f64>], order: u8, target: f64) -> f64 {
    let ball = BallGrid::unit(2 * n);
    let js = standard(n);
    let dist = |s: f64| structure_distance(conjugated(n, slopes, s).as_ref(), js.as_ref(), &ball, order);
    let (mut lo, mut hi) = (0.0, 1.0);
    while dist(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if dist(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn dbar_inversion() -> Line {
    let start = Instant::now();
    let grid = DiscGrid::default_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let battery: Vec<_> = (0..20).map(|k| random_mixed(&mut rng, 1 + k % 6)).collect();
    let worst = battery
        .par_iter()
        .map(|f| dbar_cauchy_green_residual(&DiscFunction::from_fn(&grid, f)))
        .reduce(|| 0.0, f64::max);
    // polynomials sit at the round-off floor; the rate needs a finitely smooth g
    let g = |z: C64| z * z.norm().powf(2.5);
    let steps = refinement_study(128, &[4, 8, 16, 32, 64], &g).unwrap();
    let floor = 1e-10;
    let ratios: Vec<f64> = steps
        .windows(2)
        .filter(|w| w[0].error > floor)
        .map(|w| w[0].error / w[1].error)
        .collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed().as_secs_f64();
    Line::new(
        1,
        "dbar of Cauchy-Green is the identity",
        &[
            check(worst <= 1e-6, format!("max residual {worst:.3e} <= 1e-6 over 20 polynomials")),
            check(ratios.len() >= 3 && min_ratio >= 4.0, format!("min refinement ratio {min_ratio:.1} >= 4 over {} doublings", ratios.len())),
            check(elapsed <= 10.0, format!("{elapsed:.2} s <= 10 s")),
        ],
    )
}

fn schwarz_identity() -> Line {
    let grid = DiscGrid::default_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut boundary = 0.0_f64;
    let mut center_imag = 0.0_f64;
    let mut center_gap = 0.0_f64;
    for _ in 0..20 {
        let coeffs: Vec<(f64, f64)> = (0..=32).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let h = |t: f64| coeffs.iter().enumerate().map(|(k, (a, b))| a * (k as f64 * t).cos() + b * (k as f64 * t).sin()).sum::<f64>();
        let signal = BoundarySignal::from_fn(&grid, |t| c(h(t), 0.0));
        let s = schwarz(&signal).unwrap();
        let taylor = schwarz_coefficients(&signal).unwrap();
        for (j, v) in s.boundary_values().iter().enumerate() {
            boundary = boundary.max((v.re - h(grid.theta(j))).abs());
        }
        center_imag = center_imag.max(taylor[0].im.abs());
        center_gap = center_gap.max((center(&s) - taylor[0]).norm());
    }
    Line::new(
        2,
        "Schwarz integral",
        &[
            check(boundary <= 1e-10, format!("boundary real part error {boundary:.3e} <= 1e-10")),
            check(center_imag == 0.0, format!("|Im f(0)| = {center_imag:.3e} == 0")),
            check(center_gap <= 1e-14, format!("grid value at 0 within {center_gap:.3e} <= 1e-14 of f(0)")),
        ],
    )
}

fn phi_round_trip() -> Line {
    let mut checks = Vec::new();
    for n in [2, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(30 + n as u64);
        let slopes = random_slopes(&mut rng, n);
        let scale = calibrate(n, &slopes, 0, 0.1);
        let j = conjugated(n, &slopes, scale);
        let d0 = structure_distance(j.as_ref(), standard(n).as_ref(), &BallGrid::unit(2 * n), 0);
        let grid = DiscGrid::new(64, 24).unwrap();
        let mut worst = 0.0_f64;
        for _ in 0..10 {
            let comps = (0..n)
                .map(|_| {
                    let f = random_mixed(&mut rng, 3);
                    DiscFunction::from_fn(&grid, move |z| f(z) * 0.1)
                })
                .collect();
            let f = DiscMap::new(comps).unwrap();
            let g = phi_forward(&f, j.as_ref()).unwrap();
            match phi_inverse(&g, j.as_ref(), &PhiConfig::default()) {
                Ok(inv) => worst = worst.max(inv.f.max_diff(&f)),
                Err(e) => return Line::error(3, "Phi round trip", e),
            }
        }
        checks.push(check(worst <= 1e-8, format!("C^{n}: |J - J_st| = {d0:.3}, round-trip error {worst:.3e} <= 1e-8")));
    }
    Line::new(3, "Phi round trip", &checks)
}

fn closed_form_reproduction() -> Line {
    let grid = DiscGrid::new(64, 16).unwrap();
    let cfg = BishopConfig::default();
    let n = 2;
    let model = QuadricModel::boggess_pitts(n).unwrap();
    let e = model.to_manifold().unwrap();
    let js = standard(n);
    let axis = |lo: f64, hi: f64| (0..5).map(move |k| lo + (hi - lo) * k as f64 / 4.0);
    let mut members = Vec::new();
    for t in axis(0.02, 0.1) {
        for lambda in axis(0.0, 1.0) {
            for y in axis(-0.1, 0.1) {
                members.push(FamilyParams::new(t, lambda, vec![y], vec![c(0.05, -0.02)]));
            }
        }
    }
    let out: Vec<Result<(f64, f64), String>> = members
        .par_iter()
        .map(|p| {
            let s = solve_bishop(&js, &e, Dilation::None, 1.0, &family_chart_point(p, 1), &grid, &cfg).map_err(|e| e.to_string())?;
            let bp = boggess_pitts(&grid, p, n).map_err(|e| e.to_string())?;
            let z = s.f.components[0].max_diff(&bp.components[0]);
            let attach = if p.lambda == 1.0 {
                let at = s.f.eval_at(c(-1.0, 0.0));
                let limit = attachment_limit(&p.y, p.c[0]);
                at.iter().zip(&limit).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
            } else {
                0.0
            };
            Ok((z, attach))
        })
        .collect();
    let failures: Vec<&String> = out.iter().filter_map(|r| r.as_ref().err()).collect();
    if let Some(e) = failures.first() {
        return Line::error(4, "closed-form reproduction", format!("{} of 125 solves failed, first: {e}", failures.len()));
    }
    let z = out.iter().map(|r| r.as_ref().unwrap().0).fold(0.0, f64::max);
    let attach = out.iter().map(|r| r.as_ref().unwrap().1).fold(0.0, f64::max);
    Line::new(
        4,
        "closed-form reproduction",
        &[
            check(z <= 1e-8, format!("z-component deviation {z:.3e} <= 1e-8 on 5x5x5")),
            check(attach <= 1e-8, format!("attachment point deviation {attach:.3e} <= 1e-8")),
        ],
    )
}

fn ranks() -> Line {
    let mut checks = Vec::new();
    for n in [2, 3] {
        let attach = match bp_attach_jacobian(0.1, n) {
            Ok(r) => r,
            Err(e) => return Line::error(5, "family ranks", e),
        };
        let map = match attachment_map_rank(0.1, n, &vec![0.05; n - 1], c(0.1, -0.05)) {
            Ok(r) => r,
            Err(e) => return Line::error(5, "family ranks", e),
        };
        checks.push(check(
            attach.rank.rank == n + 2 && attach.rank.gap >= 1e6,
            format!("n={n}: jacobian rank {} == {} gap {:.2e} >= 1e6", attach.rank.rank, n + 2, attach.rank.gap),
        ));
        checks.push(check(
            map.rank == n + 1 && map.gap >= 1e6,
            format!("n={n}: attachment rank {} == {} gap {:.2e} >= 1e6", map.rank, n + 1, map.gap),
        ));
    }
    Line::new(5, "family ranks", &checks)
}

fn levi_cross_check() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cases = Vec::new();
    let mut c1 = 0.0_f64;
    for _ in 0..50 {
        let slopes = random_slopes(&mut rng, 2);
        let scale = calibrate(2, &slopes, 1, rng.gen_range(0.02..0.1));
        let j = conjugated(2, &slopes, scale);
        c1 = c1.max(structure_distance(j.as_ref(), standard(2).as_ref(), &BallGrid::unit(4), 1));
        // |Z|^2 plus a random quadratic and cubic part
        let mut terms: Vec<(Vec<u32>, f64)> = (0..4)
            .map(|i| {
                let mut e = vec![0; 4];
                e[i] = 2;
                (e, 1.0)
            })
            .collect();
        for _ in 0..6 {
            let mut e = vec![0u32; 4];
            for _ in 0..rng.gen_range(2..=3) {
                e[rng.gen_range(0..4)] += 1;
            }
            terms.push((e, rng.gen_range(-0.3..0.3)));
        }
        let u = Polynomial::new(4, terms).unwrap();
        let p: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.15..0.15)).collect();
        let v = unit_vector(&mut rng, 4);
        cases.push((j, u, p, v));
    }
    let cfg = DiscLeviConfig::default();
    let errors: Vec<Result<f64, String>> = cases
        .par_iter()
        .map(|(j, u, p, v)| {
            let a = levi_direct(u, j.as_ref(), p, v.as_slice());
            let b = levi_disc(u, j.as_ref(), p, v.as_slice(), &cfg).map_err(|e| e.to_string())?;
            Ok((a - b).abs() / a.abs())
        })
        .collect();
    if let Some(Err(e)) = errors.iter().find(|r| r.is_err()) {
        return Line::error(6, "Levi form cross-check", e);
    }
    let rel = errors.iter().map(|r| *r.as_ref().unwrap()).fold(0.0, f64::max);

    // the shear image of the flat hyperplane: flat under the pushed structure, strictly pseudoconvex under J_st
    let j: Structure = read_json::<StructureDescriptor>(&scenario("structures/shear_c2.json")).unwrap().build().unwrap();
    let e = read_json::<ManifoldDescriptor>(&scenario("manifolds/shear_image_c2.json")).unwrap().build().unwrap();
    let js = standard(2);
    let points = sample_on_manifold(&e, 20, 0.3, 6);
    let mut flat = 0.0_f64;
    let mut strict = f64::INFINITY;
    for x in &points {
        flat = flat.max(max_levi_on_h(&e, j.as_ref(), x).unwrap());
        let frame = holomorphic_tangent(&e, js.as_ref(), x).unwrap();
        for h in &frame.holomorphic {
            let v = to_real(h);
            let l = levi_direct(&e.component(0), js.as_ref(), x, &v) / v.iter().map(|a| a * a).sum::<f64>();
            strict = strict.min(l);
        }
    }
    Line::new(
        6,
        "Levi form cross-check",
        &[
            check(c1 <= 0.1, format!("max C^1 distance {c1:.3} <= 0.1")),
            check(rel <= 1e-3, format!("max relative gap direct/disc {rel:.3e} <= 1e-3 on 50 cases")),
            check(flat <= 1e-6, format!("cautionary example under J: max |L| on H {flat:.3e} <= 1e-6 at 20 points")),
            check(strict > 0.0, format!("under J_st: min L on H {strict:.3e} > 0 at 20 points")),
        ],
    )
}

fn levi_flat_containment() -> Line {
    let start = Instant::now();
    let positive = match run(&load("levi_flat_shear.json")) {
        Ok(r) => r,
        Err(e) => return Line::error(7, "Levi-flat containment", e),
    };
    let negative = match run(&load("levi_flat_negative.json")) {
        Ok(r) => r,
        Err(e) => return Line::error(7, "Levi-flat containment", e),
    };
    let worst = stat(&positive, "max_interior_defining");
    let members = positive.members.len();
    let escaped = !negative.flags.get("contained").copied().unwrap_or(true);
    let excursion = stat(&negative, "max_interior_defining");
    let elapsed = start.elapsed().as_secs_f64();
    Line::new(
        7,
        "Levi-flat containment",
        &[
            check(positive.passed, format!("levi_flat_shear report {}", if positive.passed { "PASS" } else { "FAIL" })),
            check(worst <= 1e-4 && members == 64, format!("max interior |r o f| {worst:.3e} <= 1e-4 over {members} discs")),
            check(escaped, format!("negative control fails containment (excursion {excursion:.3e})")),
            check(elapsed <= 120.0, format!("{elapsed:.1} s <= 120 s")),
        ],
    )
}

fn dilation_rates() -> Line {
    let report = match run(&load("convergence_c3.json")) {
        Ok(r) => r,
        Err(e) => return Line::error(8, "dilation rates", e),
    };
    let iso = verdict(&report, "isotropic_slope").unwrap_or(f64::NAN);
    let aniso = verdict(&report, "anisotropic_slowest_slope").unwrap_or(f64::NAN);
    let persistence = verdict(&report, "no_convergence_to_standard").unwrap_or(f64::NAN);
    Line::new(
        8,
        "dilation rates",
        &[
            check((iso - 1.0).abs() <= 0.15, format!("isotropic slope {iso:.4} in 1 ± 0.15")),
            check((aniso - 0.5).abs() <= 0.15, format!("slowest anisotropic slope {aniso:.4} in 0.5 ± 0.15")),
            check(persistence >= 0.5, format!("distance to J_st persists: ratio {persistence:.3} >= 0.5")),
        ],
    )
}

fn sweep() -> Line {
    let start = Instant::now();
    let cfg = load("sweep_c3.json");
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => return Line::error(9, "perturbed family sweep", e),
    };
    let residual = stat(&report, "max_boundary_residual");
    let attach = stat(&report, "attach_rank");
    let map = stat(&report, "map_rank");
    let slope = verdict(&report, "family_distance_slope").unwrap_or(f64::NAN);
    let elapsed = start.elapsed().as_secs_f64();
    Line::new(
        9,
        "perturbed family sweep",
        &[
            check(report.passed, format!("sweep_c3 report {}", if report.passed { "PASS" } else { "FAIL" })),
            check(residual <= 1e-6, format!("max boundary residual {residual:.3e} <= 1e-6")),
            check(attach == 5.0 && map == 4.0, format!("ranks ({attach}, {map}) == (5, 4)")),
            check(slope >= 0.5, format!("distance slope to the limit family {slope:.6} >= 0.5")),
            check(elapsed <= 300.0, format!("{elapsed:.1} s <= 300 s")),
        ],
    )
}

fn determinism() -> Line {
    let mut checks = Vec::new();
    for name in ["levi_flat_negative.json", "chart_c2.json", "convergence_c3.json"] {
        let cfg = load(name);
        let texts: Vec<String> = (0..2).map(|_| run(&cfg).and_then(|r| canonical_json(&r)).unwrap_or_default()).collect();
        checks.push(check(!texts[0].is_empty() && texts[0] == texts[1], format!("{name}: {} bytes identical", texts[0].len())));
    }
    Line::new(10, "deterministic reports", &checks)
}

fn main() -> ExitCode {
    let criteria: [fn() -> Line; 10] = [
        dbar_inversion,
        schwarz_identity,
        phi_round_trip,
        closed_form_reproduction,
        ranks,
        levi_cross_check,
        levi_flat_containment,
        dilation_rates,
        sweep,
        determinism,
    ];
    let mut failed = 0;
    for criterion in criteria {
        let line = criterion();
        println!("{} {:>2} {}: {}", if line.passed { "PASS" } else { "FAIL" }, line.id, line.name, line.detail);
        failed += usize::from(!line.passed);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
