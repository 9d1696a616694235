mod common;

use std::sync::OnceLock;

use common::{rel, small_planar};
use halfspace_core::bubbles::ps_diagnostics;
use halfspace_core::energy::level_from_norm;
use halfspace_core::geometry::build_domain;
use halfspace_core::grid::{make_grid, translate};
use halfspace_core::ground_state::{solve_ground_state, GroundState};
use halfspace_core::minmax::{
    augmented_lagrangian, mountain_pass_solve_with, BarycenterConstraint, SolveOptions, SolveReport, SolveStatus,
};
use halfspace_core::{Field, ProblemParams};

fn small_gs() -> &'static GroundState {
    static GS: OnceLock<GroundState> = OnceLock::new();
    GS.get_or_init(|| {
        let (params, spec, _) = small_planar();
        solve_ground_state(&params, &spec, None).unwrap()
    })
}

fn solve(constraint: BarycenterConstraint) -> SolveReport {
    let (params, _, mask) = small_planar();
    let options = SolveOptions {
        constraint,
        snapshot_every: 2,
        ..SolveOptions::default()
    };
    mountain_pass_solve_with(&params, &small_gs().phi, &mask, &options).unwrap()
}

fn numeric_fields(r: &SolveReport) -> serde_json::Value {
    let mut v = serde_json::to_value(r).unwrap();
    v.as_object_mut().unwrap().remove("wall_time");
    v
}

#[test]
fn deterministic_reruns_are_bit_identical() {
    let a = solve(BarycenterConstraint::Hole);
    let b = solve(BarycenterConstraint::Hole);
    assert_eq!(numeric_fields(&a), numeric_fields(&b));
    assert_eq!(a.u.values(), b.u.values());
}

#[test]
fn stage_b_invariants() {
    let r = solve(BarycenterConstraint::Hole);
    assert!(r.energy_trace.windows(2).all(|w| w[1].1 <= w[0].1), "{:?}", r.energy_trace);
    assert!(r.nehari_defect < 1e-8);
    assert!(r.min_value >= -1e-10);
    assert_eq!(r.outside_mask_max, 0.0);
    if r.cr_converged {
        let tol = 1e-6 * r.family.max_norm_sq;
        assert!(r.c_r <= r.family.max_norm_sq + tol, "c_r {} family {}", r.c_r, r.family.max_norm_sq);
    }
    if r.accepted() {
        assert!(r.residual_rel < 1e-5 && r.in_norm_window);
    }
}

#[test]
fn dropping_the_barycenter_reaches_the_threshold() {
    let (params, _, mask) = small_planar();
    let gs = small_gs();
    let out = augmented_lagrangian(&params, &gs.phi, &mask, BarycenterConstraint::None).unwrap();
    assert!(rel(out.c_r, gs.m_inf) < 0.02, "{} vs {}", out.c_r, gs.m_inf);
}

/// A hole thinner than a cell leaves essentially the half-space, where the
/// descent settles on a single ground-level bump.
#[test]
fn negligible_hole_escapes() {
    let spec = make_grid(2, 8.0, 32).unwrap();
    let params = ProblemParams::planar(0.5, 3.0, 0.05, 4.0);
    let mask = build_domain(&spec, &params).unwrap();
    let options = SolveOptions {
        constraint: BarycenterConstraint::None,
        ..SolveOptions::default()
    };
    let r = mountain_pass_solve_with(&params, &small_gs().phi, &mask, &options).unwrap();
    assert_eq!(r.status, SolveStatus::Escaped, "quotient {} vs M {}", r.quotient, r.m);
}

fn bubble_gs() -> (ProblemParams, GroundState) {
    let spec = make_grid(2, 32.0, 128).unwrap();
    let params = ProblemParams::planar(0.5, 3.0, 1.0, 8.0);
    let gs = solve_ground_state(&params, &spec, None).unwrap();
    (params, gs)
}

#[test]
fn two_opposite_bubbles() {
    let (params, gs) = bubble_gs();
    let snaps: Vec<Field> = (0..5)
        .map(|n| {
            let step = 6 * n as i64;
            translate(&gs.q, &[step + 4, 0]).axpy(1.0, &translate(&gs.q, &[-step - 4, 0])).unwrap()
        })
        .collect();
    let r = ps_diagnostics(&snaps, &params).unwrap();
    assert_eq!(r.k, 2);
    assert!(r.relative_defect < 0.1, "defect {}", r.relative_defect);
    let level = level_from_norm(gs.m_inf, params.p).unwrap();
    for e in &r.energies {
        assert!(rel(*e, level) < 0.05, "{e} vs {level}");
    }
}

#[test]
fn converged_sequence_has_no_bubbles() {
    let (params, gs) = bubble_gs();
    let snaps: Vec<Field> = (0..4).map(|k| gs.q.scale(1.0 + 0.1 / (k + 1) as f64)).collect();
    assert_eq!(ps_diagnostics(&snaps, &params).unwrap().k, 0);
}
