//! Whole-space minimization of `‖u‖_s²` on `{‖u‖_p = 1}` and the limit-problem
//! solution `Q = M∞^{1/(p-2)} φ`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractional::{lp_norm, nonlinearity, norm_sq, residual_field, restricted_norm_sq};
use crate::geometry::{test_function, DomainMask};
use crate::grid::{translate, Field, GridSpec};
use crate::params::ProblemParams;
use crate::reduce::{sum_map, Reduction};
use crate::spectral::{apply_multiplier, fractional_symbol};

/// Armijo parameters for the projected descent.
pub const INITIAL_STEP: f64 = 1.0;
pub const STEP_SHRINK: f64 = 0.5;
pub const SUFFICIENT_DECREASE: f64 = 1e-4;
/// Stall test: relative decrease of the objective over this many steps.
pub const STALL_WINDOW: usize = 10;
pub const STALL_TOLERANCE: f64 = 1e-10;
const COLLAPSE_FLOOR: f64 = 1e-30;
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub step: f64,
    pub residual: f64,
}

/// Writes a trace as CSV with header `iter,objective,step,residual`.
pub fn write_trace_csv(rows: &[TraceRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "iter,objective,step,residual")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e},{:e}", r.iter, r.objective, r.step, r.residual)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GroundState {
    /// Minimizer with `‖φ‖_p = 1`, peak at the origin node. Nonnegative once
    /// the peak is resolved; coarse grids leave small axis-aligned side lobes.
    pub phi: Field,
    /// `M∞ = ‖φ‖_s²`.
    pub m_inf: f64,
    /// `Q = M∞^{1/(p-2)} φ`.
    pub q: Field,
    /// Relative residual of `Q` in `(-Δ)^s Q + Q = Q^{p-1}`.
    pub residual: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

/// Shifts the largest sample onto the origin node.
pub fn recenter(u: &Field) -> Field {
    let spec = u.spec();
    let peak = spec.unflatten(u.argmax());
    let origin = spec.unflatten(spec.origin_index());
    let shift = [
        origin[0] as i64 - peak[0] as i64,
        origin[1] as i64 - peak[1] as i64,
    ];
    if shift == [0, 0] {
        u.clone()
    } else {
        translate(u, &shift[..spec.dim()])
    }
}

fn l2_inner(a: &Field, b: &Field, reduction: Reduction) -> f64 {
    let bv = b.values();
    sum_map(a.values(), reduction, |i, x| x * bv[i]) * a.spec().cell_volume()
}

/// `((-Δ)^s + 1)^{-1}` on the torus.
pub(crate) fn resolvent(u: &Field, s: f64) -> Field {
    let symbol = fractional_symbol(u.spec(), s);
    let inv: Vec<f64> = symbol.iter().map(|w| 1.0 / (1.0 + w)).collect();
    apply_multiplier(u, &inv)
}

fn normalize(u: &Field, p: f64, reduction: Reduction) -> Result<Field> {
    let n = lp_norm(u, p, reduction)?;
    if !(n > COLLAPSE_FLOOR) {
        return Err(Error::Collapse(n));
    }
    Ok(u.scale(1.0 / n))
}

fn gauge(u: &Field, p: f64, reduction: Reduction) -> Result<Field> {
    normalize(&recenter(u), p, reduction)
}

/// Default initial guess: a unit Gaussian at the origin.
pub fn default_initial(spec: &GridSpec) -> Field {
    Field::from_fn(*spec, |x| (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp())
}

/// Projected descent for `M∞`.
///
/// The direction is the `H^s`-gradient of the Rayleigh quotient
/// `‖u‖_s² / ‖u‖_p²`, i.e. `-(u - R ((-Δ)^s + 1)^{-1} |u|^{p-2}u)` at
/// `‖u‖_p = 1`. Each trial point is passed through the gauges (peak recentred
/// to the origin, `L^p` renormalization) and accepted under the
/// Armijo rule. The step guess is Barzilai–Borwein in the `H^s` metric.
pub fn solve_ground_state(
    params: &ProblemParams,
    spec: &GridSpec,
    init: Option<&Field>,
) -> Result<GroundState> {
    params.validate()?;
    if params.dim != spec.dim() {
        return Err(Error::GridMismatch(format!(
            "params for N = {}, grid has N = {}",
            params.dim,
            spec.dim()
        )));
    }
    let (s, p) = (params.s, params.p);
    let reduction = params.reduction();
    let start = match init {
        Some(f) => {
            if f.spec() != spec {
                return Err(Error::GridMismatch("initial field on a different grid".into()));
            }
            f.clone()
        }
        None => default_initial(spec),
    };
    // On coarse grids the spectrally truncated minimizer carries small
    // negative side lobes along the axes; taking |u| every step would pin the
    // iteration away from it, so the sign gauge is applied once.
    let mut u = gauge(&start.map(f64::abs), p, reduction)?;
    let objective = |v: &Field| -> Result<f64> { Ok(norm_sq(v, s, p, reduction)?.norm_sq) };
    let mut value = objective(&u)?;
    let mut history = vec![value];
    let mut trace = Vec::new();
    let mut step = INITIAL_STEP;
    let mut prev: Option<(Field, Field)> = None;
    let mut done = 0;

    for iter in 1..=params.max_iters {
        done = iter;
        // d = -(u - R A^{-1} u^{p-1});   slope = -⟨A d, d⟩ (scaled)
        let w = resolvent(&nonlinearity(&u, p), s);
        let dir = w.scale(value).axpy(-1.0, &u)?;
        let a_dir = apply_multiplier(&dir, &shifted_symbol(spec, s));
        let slope = -2.0 * l2_inner(&a_dir, &dir, reduction);
        if slope >= 0.0 {
            break;
        }
        if let Some((pu, pd)) = &prev {
            // BB1 in the A-metric
            let du = u.axpy(-1.0, pu)?;
            let dd = dir.axpy(-1.0, pd)?;
            let a_du = apply_multiplier(&du, &shifted_symbol(spec, s));
            let num = l2_inner(&a_du, &du, reduction);
            let den = -l2_inner(&a_du, &dd, reduction);
            if num > 0.0 && den > 0.0 {
                step = (num / den).clamp(1e-3, 10.0);
            } else {
                step = INITIAL_STEP;
            }
        }
        let mut accepted = None;
        let mut tau = step;
        for _ in 0..MAX_BACKTRACKS {
            let trial = gauge(&u.axpy(tau, &dir)?, p, reduction)?;
            let tv = objective(&trial)?;
            if tv <= value + SUFFICIENT_DECREASE * tau * slope {
                accepted = Some((trial, tv));
                break;
            }
            tau *= STEP_SHRINK;
        }
        let Some((next, next_value)) = accepted else {
            break;
        };
        prev = Some((u, dir));
        u = next;
        value = next_value;
        history.push(value);

        let stalled = history.len() > STALL_WINDOW && {
            let old = history[history.len() - 1 - STALL_WINDOW];
            (old - value) / value.abs() < STALL_TOLERANCE
        };
        if stalled || iter % 10 == 0 || iter == params.max_iters {
            let (_, res) = residual_field(&u.scale(value.powf(1.0 / (p - 2.0))), params)?;
            trace.push(TraceRow {
                iter,
                objective: value,
                step: tau,
                residual: res,
            });
            if stalled && res < params.tol_residual {
                return finish(u, params, iter, trace);
            }
        }
    }
    // No admissible step left (roundoff floor) or iteration budget spent.
    finish(u, params, done, trace)
}

/// Certifies the residual of the final iterate.
fn finish(
    phi: Field,
    params: &ProblemParams,
    iterations: usize,
    trace: Vec<TraceRow>,
) -> Result<GroundState> {
    let p = params.p;
    let reduction = params.reduction();
    let m_inf = norm_sq(&phi, params.s, p, reduction)?.norm_sq;
    let q = phi.scale(m_inf.powf(1.0 / (p - 2.0)));
    let (_, residual) = residual_field(&q, params)?;
    if residual < params.tol_residual {
        Ok(GroundState {
            phi,
            m_inf,
            q,
            residual,
            iterations,
            trace,
        })
    } else {
        Err(Error::NotConverged {
            iterations,
            detail: format!("ground state: objective {m_inf:e}, residual {residual:e}"),
        })
    }
}

fn shifted_symbol(spec: &GridSpec, s: f64) -> Vec<f64> {
    fractional_symbol(spec, s).iter().map(|w| w + 1.0).collect()
}

/// One row of the `‖Ψ_{y_n}‖² → M∞` table.
#[derive(Debug, Clone, Serialize)]
pub struct SequenceRow {
    pub y: Vec<f64>,
    pub hole_distance: f64,
    pub norm_sq: f64,
    pub c_y: f64,
    pub relative_gap: f64,
}

/// Evaluates `(‖Ψ_{y_n}‖², c_{y_n})` along a schedule of centres.
pub fn minimizing_sequence_check(
    phi: &Field,
    m_inf: f64,
    mask: &DomainMask,
    params: &ProblemParams,
    schedule: &[Vec<f64>],
) -> Result<Vec<SequenceRow>> {
    let center = mask.hole_center().to_vec();
    schedule
        .iter()
        .map(|y| {
            let tf = test_function(y, phi, params, mask)?;
            let b = restricted_norm_sq(&tf.psi, mask, params.s, params.p, params.reduction())?;
            let hole_distance = tf
                .y
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            Ok(SequenceRow {
                hole_distance,
                norm_sq: b.norm_sq,
                c_y: tf.c_y,
                relative_gap: (b.norm_sq - m_inf) / m_inf,
                y: tf.y,
            })
        })
        .collect()
}
