//! Acceptance criteria 1-11 at their stated tolerances. Prints one PASS/FAIL
//! line per criterion and exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use common::{masked_field, rel, rng, smooth_field};
use halfspace_core::bubbles::ps_diagnostics;
use halfspace_core::energy::{energy_i, grad_i, level_from_norm};
use halfspace_core::fractional::{
    frac_laplacian, gagliardo_seminorm_sq, gagliardo_seminorm_sq_direct, lp_norm, norm_sq, residual_field,
    restricted_norm_sq,
};
use halfspace_core::geometry::{build_domain, cutoff_error, test_function, DomainMask};
use halfspace_core::grid::{make_grid, translate};
use halfspace_core::ground_state::{minimizing_sequence_check, solve_ground_state, GroundState};
use halfspace_core::minmax::{augmented_lagrangian, mountain_pass_solve, BarycenterConstraint, SolveReport};
use halfspace_core::topology::{sphere_samples, sphere_scan};
use halfspace_core::{Field, GridSpec, ProblemParams, Reduction, Result};

const DET: Reduction = Reduction::Deterministic;

struct Geometry {
    params: ProblemParams,
    spec: GridSpec,
    mask: DomainMask,
    gs: GroundState,
}

/// N=2, s=½, p=3, ρ=1, r=32, L=64, M=256.
fn geometry() -> Result<Geometry> {
    let spec = make_grid(2, 64.0, 256)?;
    let params = ProblemParams::planar(0.5, 3.0, 1.0, 32.0);
    let mask = build_domain(&spec, &params)?;
    let gs = solve_ground_state(&params, &spec, None)?;
    Ok(Geometry { params, spec, mask, gs })
}

fn at(g: &Geometry, r: f64, rho: f64) -> Result<(ProblemParams, DomainMask)> {
    let params = ProblemParams { r, rho, ..g.params.clone() };
    let mask = build_domain(&g.spec, &params)?;
    Ok((params, mask))
}

type Verdict = Result<(bool, String)>;

fn criterion_1() -> Verdict {
    let mut worst: f64 = 0.0;
    for dim in [1, 2] {
        let spec = make_grid(dim, 5.0, 64)?;
        let l = spec.half_extent();
        for (m1, m2) in [(1, 0), (2, 3), (5, -7), (-11, 4), (32, 0), (17, 32)] {
            let k1 = PI * m1 as f64 / l;
            let k2 = if dim == 2 { PI * m2 as f64 / l } else { 0.0 };
            let u = Field::from_fn(spec, |x| (k1 * x[0] + k2 * x.get(1).unwrap_or(&0.0)).cos());
            for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
                let lam = (k1 * k1 + k2 * k2).powf(s);
                let lu = frac_laplacian(&u, s)?;
                let err = lu
                    .values()
                    .iter()
                    .zip(u.values())
                    .map(|(a, b)| (a - lam * b).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(err / (lam * u.max_abs()));
            }
        }
    }
    Ok((worst < 1e-12, format!("max relative eigen-defect {worst:.2e}")))
}

fn criterion_2() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut r = rng(2);
    for (dim, l, m, s) in [(1, 20.0, 2048, 0.3), (1, 20.0, 1024, 0.7), (2, 8.0, 64, 0.5)] {
        let spec = make_grid(dim, l, m)?;
        for _ in 0..20 {
            let u = smooth_field(spec, &mut r);
            let a = gagliardo_seminorm_sq(&u, s, DET)?;
            let b = gagliardo_seminorm_sq_direct(&u, s)?;
            worst = worst.max(rel(a, b));
        }
    }
    Ok((worst < 0.01, format!("worst spectral/direct gap {:.3}% over 60 fields", 100.0 * worst)))
}

fn criterion_3() -> Verdict {
    let spec = make_grid(1, 200.0, 8192)?;
    let params = ProblemParams {
        dim: 1,
        a: vec![],
        ..ProblemParams::planar(0.5, 3.0, 1.0, 10.0)
    };
    let exact = Field::from_fn(spec, |x| 2.0 / (1.0 + x[0] * x[0]));
    let (_, residual) = residual_field(&exact, &params)?;
    let gs = solve_ground_state(&params, &spec, None)?;
    let err = gs.q.axpy(-1.0, &exact)?.max_abs() / exact.max_abs();
    Ok((
        residual < 1e-3 && err < 1e-2,
        format!("closed-form residual {residual:.2e}, solver L-inf error {err:.2e} (M_inf {:.6})", gs.m_inf),
    ))
}

fn criterion_4(g: &Geometry) -> Verdict {
    let mut r = rng(4);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let u = masked_field(&g.mask, &mut r);
        let v = masked_field(&g.mask, &mut r);
        let grad = grad_i(&u, &g.mask, &g.params)?;
        let fd = (energy_i(&u.axpy(eps, &v)?, &g.mask, &g.params)?
            - energy_i(&u.axpy(-eps, &v)?, &g.mask, &g.params)?)
            / (2.0 * eps);
        let exact: f64 = grad.values().iter().zip(v.values()).map(|(a, b)| a * b).sum::<f64>() * g.spec.cell_volume();
        worst = worst.max(rel(fd, exact));
    }
    Ok((worst < 1e-4, format!("worst relative gap {worst:.2e} over 10 pairs")))
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.1e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn criterion_5(g: &Geometry) -> Verdict {
    let phi = &g.gs.phi;
    let phi_lp = lp_norm(phi, 3.0, DET)?;
    let phi_s = norm_sq(phi, 0.5, 3.0, DET)?.norm_sq.sqrt();
    let mut r_lp = Vec::new();
    let mut r_s = Vec::new();
    for r in [8.0, 16.0, 32.0] {
        let (params, mask) = at(g, r, 1.0)?;
        let (a, b) = cutoff_error(&[r / 2.0, r], phi, &params, &mask)?;
        r_lp.push(a);
        r_s.push(b);
    }
    let mut rho_lp = Vec::new();
    let mut rho_s = Vec::new();
    for rho in [2.0, 1.0, 0.5] {
        let (params, mask) = at(g, 32.0, rho)?;
        let (a, b) = cutoff_error(&[4.0, 32.0], phi, &params, &mask)?;
        rho_lp.push(a);
        rho_s.push(b);
    }
    let finals = [r_lp[2] / phi_lp, r_s[2] / phi_s, rho_lp[2] / phi_lp, rho_s[2] / phi_s];
    let pass = decreasing(&r_lp) && decreasing(&r_s) && decreasing(&rho_lp) && decreasing(&rho_s)
        && finals.iter().all(|&f| f < 0.05);
    Ok((
        pass,
        format!(
            "r sweep L^p {} H^s {}; rho sweep L^p {} H^s {}; worst final {:.2}%",
            sci(&r_lp),
            sci(&r_s),
            sci(&rho_lp),
            sci(&rho_s),
            100.0 * finals.iter().cloned().fold(0.0, f64::max)
        ),
    ))
}

fn criterion_6(g: &Geometry) -> Verdict {
    let schedule: Vec<Vec<f64>> = [2.0, 4.0, 8.0, 16.0, 24.0].iter().map(|d| vec![-d, 32.0 + 0.5 * d]).collect();
    let rows = minimizing_sequence_check(&g.gs.phi, g.gs.m_inf, &g.mask, &g.params, &schedule)?;
    let last = rows.last().expect("non-empty");
    Ok((
        last.relative_gap.abs() < 0.02 && (last.c_y - 1.0).abs() < 0.05,
        format!("last gap {:.2e}, c_y {:.6}", last.relative_gap, last.c_y),
    ))
}

fn criterion_7(g: &Geometry) -> Verdict {
    let center = g.params.hole_center();
    let r = g.params.r;
    let mut probes = Vec::new();
    for radius in [r / 2.0, 0.75 * r, r, 1.5 * r] {
        for y in sphere_samples(&center, radius, 32) {
            let inside_box = y.iter().all(|c| c.abs() < g.spec.half_extent() - 1.0);
            if y[1] >= r / 2.0 && inside_box {
                probes.push(y);
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for y in &probes {
        let tf = test_function(y, &g.gs.phi, &g.params, &g.mask)?;
        lo = lo.min(tf.raw_lp);
        hi = hi.max(tf.raw_lp);
    }
    Ok((
        (0.5..=1.5).contains(&lo) && (0.5..=1.5).contains(&hi),
        format!("||f_y||_p in [{lo:.6}, {hi:.6}] over {} probes", probes.len()),
    ))
}

fn criterion_8(g: &Geometry, report: &SolveReport) -> Verdict {
    let m = report.m;
    let center = g.params.hole_center();
    let mut probe_norms = Vec::new();
    for y in sphere_samples(&center, g.params.r / 2.0, 32) {
        if y[1] >= g.params.r / 2.0 {
            let tf = test_function(&y, &g.gs.phi, &g.params, &g.mask)?;
            probe_norms.push(restricted_norm_sq(&tf.psi, &g.mask, 0.5, 3.0, DET)?.norm_sq);
        }
    }
    let bracket = 0.5 * (report.c_r + m);
    // The bracket only means something against a converged c_r.
    let bracketed = report.cr_converged && probe_norms.iter().all(|&n| m < n && n < bracket);
    let margin = report.c_r - m;
    let hole = augmented_lagrangian(&g.params, &g.gs.phi, &g.mask, BarycenterConstraint::Hole)?;
    Ok((
        report.cr_converged && margin > 0.0 && bracketed,
        format!(
            "c_r {:.6} (converged {}, residuals |lp| {:.1e} |beta| {:.1e}), margin {margin:.4}, probes bracketed {bracketed}; \
             hole-centred diagnostic c_r {:.6} (converged {})",
            report.c_r,
            report.cr_converged,
            report.constraint_residuals.lp,
            report.constraint_residuals.barycenter,
            hole.c_r,
            hole.converged
        ),
    ))
}

fn criterion_9(g: &Geometry) -> Verdict {
    let scan = sphere_scan(&g.gs.phi, &g.params, &g.mask, 32)?;
    let degree_ok = scan.degree == Ok(1);
    Ok((
        scan.all_pairings_positive() && degree_ok && scan.homotopy_positive(),
        format!(
            "min pairing {:.3}, degree {:?}, min homotopy pairing {:.3}; hole-centred degree {:?}, identity degree {:?}",
            scan.min_pairing, scan.degree, scan.min_homotopy_pairing, scan.degree_about_hole, scan.identity_degree
        ),
    ))
}

fn numeric(r: &SolveReport) -> serde_json::Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    v.as_object_mut().expect("object").remove("wall_time");
    v
}

fn criterion_10(g: &Geometry, first: &SolveReport) -> Verdict {
    let second = mountain_pass_solve(&g.params, &g.gs.phi, &g.mask)?;
    let identical = numeric(first) == numeric(&second) && first.u.values() == second.u.values();
    let r = first;
    let pass = r.accepted()
        && r.residual_rel < 1e-5
        && r.min_value >= 0.0
        && r.outside_mask_max == 0.0
        && r.in_norm_window
        && identical
        && r.wall_time < 600.0;
    Ok((
        pass,
        format!(
            "status {:?}, residual {:.2e}, quotient {:.6} vs window ({:.6}, {:.6}), min {:.1e}, rerun identical {identical}, {:.0} s",
            r.status, r.residual_rel, r.quotient, r.window.lower_norm, r.window.upper_norm, r.min_value, r.wall_time
        ),
    ))
}

fn criterion_11(g: &Geometry) -> Verdict {
    let base = translate(&g.gs.q, &[-40, 0]);
    let snaps: Vec<Field> = (0..5)
        .map(|n| base.axpy(1.0, &translate(&g.gs.q, &[16 * n as i64, 0])))
        .collect::<Result<_>>()?;
    let r = ps_diagnostics(&snaps, &g.params)?;
    let level = level_from_norm(g.gs.m_inf, g.params.p)?;
    let energy_gap = r.energies.first().map(|e| rel(*e, level)).unwrap_or(f64::INFINITY);
    Ok((
        r.k == 1 && energy_gap < 0.05 && r.relative_defect < 0.1,
        format!("k = {}, bubble energy off by {:.2}%, splitting defect {:.2}%", r.k, 100.0 * energy_gap, 100.0 * r.relative_defect),
    ))
}

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn judge(id: usize, name: &'static str, budget: Option<f64>, f: impl FnOnce() -> Verdict) -> Line {
    let start = Instant::now();
    let outcome = f();
    let secs = start.elapsed().as_secs_f64();
    let (pass, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_budget = budget.is_none_or(|b| secs < b);
    detail.push_str(&format!(" [{secs:.1} s]"));
    if !in_budget {
        detail.push_str(" over runtime budget");
    }
    let line = Line { id, name, pass: pass && in_budget, detail };
    println!("criterion {:>2} {:<34} {}  {}", line.id, line.name, if line.pass { "PASS" } else { "FAIL" }, line.detail);
    line
}

fn main() -> ExitCode {
    let mut lines = vec![
        judge(1, "operator eigenmodes", Some(60.0), criterion_1),
        judge(2, "seminorm oracle equivalence", Some(60.0), criterion_2),
        judge(3, "closed-form ground state", Some(120.0), criterion_3),
    ];
    let g = match geometry() {
        Ok(g) => g,
        Err(e) => {
            println!("acceptance geometry failed to build: {e}");
            return ExitCode::FAILURE;
        }
    };
    lines.push(judge(4, "energy gradient", Some(60.0), || criterion_4(&g)));
    lines.push(judge(5, "cutoff error sweeps", Some(300.0), || criterion_5(&g)));
    lines.push(judge(6, "minimizing sequence reaches M_inf", None, || criterion_6(&g)));
    lines.push(judge(7, "test-function normalization", None, || criterion_7(&g)));
    let solve = mountain_pass_solve(&g.params, &g.gs.phi, &g.mask);
    match &solve {
        Ok(report) => {
            lines.push(judge(8, "constrained level above threshold", None, || criterion_8(&g, report)));
            lines.push(judge(9, "barycenter push-out and degree", Some(300.0), || criterion_9(&g)));
            lines.push(judge(10, "end-to-end high-energy solution", None, || criterion_10(&g, report)));
        }
        Err(e) => {
            let msg = format!("{e}");
            lines.push(judge(8, "constrained level above threshold", None, || Ok((false, msg.clone()))));
            lines.push(judge(9, "barycenter push-out and degree", Some(300.0), || criterion_9(&g)));
            lines.push(judge(10, "end-to-end high-energy solution", None, || Ok((false, msg.clone()))));
        }
    }
    lines.push(judge(11, "bubbling diagnostic oracle", None, || criterion_11(&g)));
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        lines.len() - failed.len(),
        lines.len(),
        if failed.is_empty() { String::new() } else { format!("; failing {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
