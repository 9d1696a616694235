//! The constrained infimum `c_r`, the family bound on the min-max level, and
//! the critical-point search on `Ω_r`.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_i, grad_i, nehari_scale, rayleigh_quotient, LevelWindow};
use crate::error::{Error, Result};
use crate::fractional::{lp_integral, lp_norm, norm_sq, residual_field, restricted_norm_sq};
use crate::geometry::{test_function, DomainMask};
use crate::grid::{save_field, Field};
use crate::ground_state::resolvent;
use crate::params::ProblemParams;
use crate::reduce::{sum_map, Reduction};
use crate::spectral::{apply_multiplier, fractional_symbol};
use crate::topology::chi;

/// Augmented-Lagrangian schedule.
pub const INITIAL_PENALTY: f64 = 10.0;
pub const PENALTY_GROWTH: f64 = 4.0;
pub const MAX_PENALTY: f64 = 1e12;
pub const MAX_OUTER: usize = 40;
pub const MAX_INNER: usize = 100;
/// `|β(u) - target| < BARYCENTER_TOLERANCE_FACTOR · tol_constraint · max(|a_r|, 1)`.
pub const BARYCENTER_TOLERANCE_FACTOR: f64 = 100.0;
/// Converged fields with `‖u‖² ≤ M (1 + ESCAPE_MARGIN)` are reported as escaped.
pub const ESCAPE_MARGIN: f64 = 1e-3;
/// Largest-to-smallest admissible step of the preconditioned descents.
const STEP_RANGE: (f64, f64) = (1e-10, 1e3);
const SUFFICIENT_DECREASE: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;

/// Which barycenter condition accompanies `‖u‖_p = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarycenterConstraint {
    /// `β(u) = a_r` with `β` taken about the origin.
    Origin,
    /// The barycenter taken about `a_r` vanishes.
    Hole,
    /// No barycenter condition.
    None,
}

fn inner(a: &Field, b: &Field, reduction: Reduction) -> f64 {
    let bv = b.values();
    sum_map(a.values(), reduction, |i, x| x * bv[i]) * a.spec().cell_volume()
}

fn l2(u: &Field, reduction: Reduction) -> f64 {
    inner(u, u, reduction).sqrt()
}

fn shifted_symbol(u: &Field, s: f64) -> Vec<f64> {
    fractional_symbol(u.spec(), s).iter().map(|w| w + 1.0).collect()
}

/// `χ(|x - c|)(x - c)_a` for each axis `a`.
fn barycenter_weights(mask: &DomainMask, center: &[f64]) -> Vec<Vec<f64>> {
    let spec = mask.spec();
    let dim = spec.dim();
    let mut w = vec![Vec::with_capacity(spec.len()); dim];
    for i in 0..spec.len() {
        let p = spec.point(i);
        let d: Vec<f64> = (0..dim).map(|a| p[a] - center[a]).collect();
        let radius = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c = chi(radius).unwrap_or(1.0);
        for a in 0..dim {
            w[a].push(c * d[a]);
        }
    }
    w
}

struct Problem<'a> {
    params: &'a ProblemParams,
    mask: &'a DomainMask,
    weights: Vec<Vec<f64>>,
    target: Vec<f64>,
    symbol: Vec<f64>,
}

struct Evaluation {
    objective: f64,
    constraints: Vec<f64>,
    gradients: Vec<Field>,
    a_u: Field,
}

impl Problem<'_> {
    fn evaluate(&self, u: &Field) -> Result<Evaluation> {
        let reduction = self.params.reduction();
        let p = self.params.p;
        let objective = restricted_norm_sq(u, self.mask, self.params.s, p, reduction)?.norm_sq;
        let a_u = self.mask.apply(&apply_multiplier(u, &self.symbol));
        let n = lp_norm(u, p, reduction)?;
        if !(n > 0.0) {
            return Err(Error::ZeroField);
        }
        let mut constraints = vec![n - 1.0];
        let mut gradients = vec![u.map(|v| v.signum() * v.abs().powf(p - 1.0) * n.powf(1.0 - p))];
        let vol = u.spec().cell_volume();
        for (w, t) in self.weights.iter().zip(&self.target) {
            let b = sum_map(u.values(), reduction, |i, v| v * v * w[i]) * vol;
            constraints.push(b - t);
            let values = u.values().iter().zip(w).map(|(v, wi)| 2.0 * v * wi).collect();
            gradients.push(self.mask.apply(&Field::from_raw(*u.spec(), values)));
        }
        Ok(Evaluation {
            objective,
            constraints,
            gradients,
            a_u,
        })
    }

    fn lagrangian(&self, e: &Evaluation, lambda: &[f64], mu: f64) -> f64 {
        e.objective
            + e.constraints
                .iter()
                .zip(lambda)
                .map(|(g, l)| -l * g + 0.5 * mu * g * g)
                .sum::<f64>()
    }

    fn lagrangian_gradient(&self, e: &Evaluation, lambda: &[f64], mu: f64) -> Result<Field> {
        let mut g = e.a_u.scale(2.0);
        for ((gi, grad), l) in e.constraints.iter().zip(&e.gradients).zip(lambda) {
            g = g.axpy(mu * gi - l, grad)?;
        }
        Ok(self.mask.apply(&g))
    }

    fn residuals(&self, e: &Evaluation) -> (f64, f64) {
        let bary = e.constraints[1..].iter().map(|g| g * g).sum::<f64>().sqrt();
        (e.constraints[0].abs(), bary)
    }
}

/// Output of the augmented-Lagrangian solve for `c_r`.
#[derive(Debug, Clone, Serialize)]
pub struct ConstrainedMin {
    #[serde(skip)]
    pub u: Field,
    /// `‖u‖²` at the final iterate.
    pub c_r: f64,
    pub constraint: BarycenterConstraint,
    /// `|‖u‖_p - 1|`.
    pub lp_residual: f64,
    /// `|β(u) - target|`.
    pub barycenter_residual: f64,
    pub barycenter: Vec<f64>,
    pub target: Vec<f64>,
    /// `‖∇_u L‖₂ / (2‖u‖₂)` at the last inner solve.
    pub stationarity: f64,
    pub converged: bool,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub penalty: f64,
    pub multipliers: Vec<f64>,
}

fn barycenter_scale(params: &ProblemParams) -> f64 {
    params.hole_center().iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0)
}

fn feasible(lp_residual: f64, barycenter_residual: f64, params: &ProblemParams) -> bool {
    lp_residual < params.tol_constraint
        && barycenter_residual
            < BARYCENTER_TOLERANCE_FACTOR * params.tol_constraint * barycenter_scale(params)
}

impl ConstrainedMin {
    /// Both constraint residuals within tolerance.
    pub fn feasible(&self, params: &ProblemParams) -> bool {
        feasible(self.lp_residual, self.barycenter_residual, params)
    }
}

/// `½(Ψ_{y⁺} + Ψ_{y⁻})` with `y^± = a_r ± (r/2) e_1`, renormalized in `L^p`.
pub fn symmetric_initial(phi: &Field, params: &ProblemParams, mask: &DomainMask) -> Result<Field> {
    let center = mask.hole_center().to_vec();
    let mut plus = center.clone();
    let mut minus = center;
    plus[0] += params.r / 2.0;
    minus[0] -= params.r / 2.0;
    let a = test_function(&plus, phi, params, mask)?.psi;
    let b = test_function(&minus, phi, params, mask)?.psi;
    let sum = a.axpy(1.0, &b)?.scale(0.5);
    let n = lp_norm(&sum, params.p, params.reduction())?;
    Ok(sum.scale(1.0 / n))
}

/// Armijo backtracking from `step`; returns the accepted trial, its value and
/// the step length, or `None` when no step gives sufficient decrease.
fn backtrack<T>(
    value: f64,
    slope: f64,
    step: f64,
    mut trial: impl FnMut(f64) -> Result<(T, f64)>,
) -> Result<Option<(T, f64, f64)>> {
    let mut tau = step;
    for _ in 0..MAX_BACKTRACKS {
        let (t, v) = trial(tau)?;
        if v <= value + SUFFICIENT_DECREASE * tau * slope {
            return Ok(Some((t, v, tau)));
        }
        tau *= 0.5;
    }
    Ok(None)
}

/// Preconditioned BB1 step `⟨A s, s⟩ / ⟨s, Δg⟩`.
fn bb_step(
    s_vec: &Field,
    dg: &Field,
    symbol: &[f64],
    reduction: Reduction,
) -> Option<f64> {
    let a_s = apply_multiplier(s_vec, symbol);
    let num = inner(&a_s, s_vec, reduction);
    let den = inner(s_vec, dg, reduction);
    (num > 0.0 && den > 0.0).then(|| (num / den).clamp(STEP_RANGE.0, STEP_RANGE.1))
}

/// Augmented-Lagrangian minimization of `‖u‖²` on `{‖u‖_p = 1}` with the
/// chosen barycenter condition. Always returns the final iterate; feasibility
/// and convergence are flagged in the result.
pub fn augmented_lagrangian(
    params: &ProblemParams,
    phi: &Field,
    mask: &DomainMask,
    constraint: BarycenterConstraint,
) -> Result<ConstrainedMin> {
    params.validate()?;
    mask.check_grid(phi)?;
    let reduction = params.reduction();
    let (weights, target) = match constraint {
        BarycenterConstraint::Origin => (
            barycenter_weights(mask, &vec![0.0; params.dim]),
            params.hole_center(),
        ),
        BarycenterConstraint::Hole => (
            barycenter_weights(mask, mask.hole_center()),
            vec![0.0; params.dim],
        ),
        BarycenterConstraint::None => (Vec::new(), Vec::new()),
    };
    let problem = Problem {
        params,
        mask,
        weights,
        target: target.clone(),
        symbol: shifted_symbol(phi, params.s),
    };
    let mut u = match constraint {
        BarycenterConstraint::None => {
            let mut y = mask.hole_center().to_vec();
            y[0] += params.r / 2.0;
            test_function(&y, phi, params, mask)?.psi
        }
        _ => symmetric_initial(phi, params, mask)?,
    };
    let mut lambda = vec![0.0; target.len() + 1];
    let mut mu = INITIAL_PENALTY;
    let mut previous = f64::INFINITY;
    let mut inner_total = 0;
    let mut outer = 0;
    let mut stationarity = f64::INFINITY;
    let scale = barycenter_scale(params);
    let mut converged = false;

    while outer < MAX_OUTER {
        outer += 1;
        let mut step = 1.0;
        let mut eval = problem.evaluate(&u)?;
        let mut value = problem.lagrangian(&eval, &lambda, mu);
        let mut grad = problem.lagrangian_gradient(&eval, &lambda, mu)?;
        let mut last: Option<(Field, Field)> = None;
        for _ in 0..MAX_INNER {
            stationarity = l2(&grad, reduction) / (2.0 * l2(&u, reduction)).max(1e-30);
            if stationarity < params.tol_residual {
                break;
            }
            if let Some((pu, pg)) = &last {
                if let Some(bb) = bb_step(&u.axpy(-1.0, pu)?, &grad.axpy(-1.0, pg)?, &problem.symbol, reduction) {
                    step = bb;
                }
            }
            let dir = mask.apply(&resolvent(&grad, params.s)).scale(-1.0);
            let slope = inner(&grad, &dir, reduction);
            if !(slope < 0.0) {
                break;
            }
            let accepted = backtrack(value, slope, step, |tau| {
                let trial = u.axpy(tau, &dir)?;
                let e = problem.evaluate(&trial)?;
                let v = problem.lagrangian(&e, &lambda, mu);
                Ok(((trial, e), v))
            })?;
            let Some(((next, next_eval), next_value, _)) = accepted else {
                break;
            };
            inner_total += 1;
            let next_grad = problem.lagrangian_gradient(&next_eval, &lambda, mu)?;
            last = Some((std::mem::replace(&mut u, next), std::mem::replace(&mut grad, next_grad)));
            eval = next_eval;
            value = next_value;
        }
        let (lp_res, bary_res) = problem.residuals(&eval);
        let combined = lp_res.max(bary_res / scale);
        if feasible(lp_res, bary_res, params) && stationarity < params.tol_residual {
            converged = true;
            break;
        }
        for (l, g) in lambda.iter_mut().zip(&eval.constraints) {
            *l -= mu * g;
        }
        if combined > 0.5 * previous {
            mu *= PENALTY_GROWTH;
            if mu > MAX_PENALTY {
                break;
            }
        }
        previous = combined;
    }

    let eval = problem.evaluate(&u)?;
    let (lp_residual, barycenter_residual) = problem.residuals(&eval);
    let barycenter = eval.constraints[1..]
        .iter()
        .zip(&target)
        .map(|(g, t)| g + t)
        .collect();
    Ok(ConstrainedMin {
        c_r: eval.objective,
        u,
        constraint,
        lp_residual,
        barycenter_residual,
        barycenter,
        target,
        stationarity,
        converged,
        outer_iterations: outer,
        inner_iterations: inner_total,
        penalty: mu,
        multipliers: lambda,
    })
}

/// `c_r = inf_{V_r} ‖u‖²` with `V_r = {‖u‖_p = 1, β(u) = a_r}`.
pub fn constrained_min_cr(
    params: &ProblemParams,
    phi: &Field,
    mask: &DomainMask,
) -> Result<(Field, f64)> {
    let out = augmented_lagrangian(params, phi, mask, BarycenterConstraint::Origin)?;
    if !out.feasible(params) {
        return Err(Error::Infeasible {
            lp_residual: out.lp_residual,
            barycenter_residual: out.barycenter_residual,
        });
    }
    if !out.converged {
        return Err(Error::NotConverged {
            iterations: out.inner_iterations,
            detail: format!("c_r: stationarity {:e}", out.stationarity),
        });
    }
    Ok((out.u, out.c_r))
}

/// Upper bound for the min-max level from the family `{Ψ_y : |y - a_r| ≤ r/2}`.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyBound {
    pub max_norm_sq: f64,
    pub argmax: Vec<f64>,
    pub min_norm_sq: f64,
    pub centers: usize,
    /// Centres where the cutoffs erased `φ`.
    pub annihilated: usize,
}

/// Evaluates `‖Ψ_y‖²` on a lattice of centres with the given spacing (rounded
/// to whole cells) inside the closed ball `B_{r/2}(a_r)`.
pub fn family_bound(
    phi: &Field,
    params: &ProblemParams,
    mask: &DomainMask,
    spacing: f64,
) -> Result<FamilyBound> {
    let spec = phi.spec();
    let h = spec.spacing();
    let cells = (spacing / h).round().max(1.0) as i64;
    let step = cells as f64 * h;
    let radius = params.r / 2.0;
    let k = (radius / step).floor() as i64;
    let center = mask.hole_center().to_vec();
    let mut centers = Vec::new();
    let range: Vec<i64> = (-k..=k).collect();
    if params.dim == 1 {
        for &i in &range {
            centers.push(vec![center[0] + i as f64 * step]);
        }
    } else {
        for &i in &range {
            for &j in &range {
                let off = [i as f64 * step, j as f64 * step];
                if off[0].hypot(off[1]) <= radius + 1e-12 {
                    centers.push(vec![center[0] + off[0], center[1] + off[1]]);
                }
            }
        }
    }
    let reduction = params.reduction();
    let values: Vec<Option<f64>> = centers
        .par_iter()
        .map(|y| match test_function(y, phi, params, mask) {
            Ok(tf) => Ok(Some(
                restricted_norm_sq(&tf.psi, mask, params.s, params.p, reduction)?.norm_sq,
            )),
            Err(Error::AnnihilatedTestFunction(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut min_norm_sq = f64::INFINITY;
    let mut annihilated = 0;
    for (y, v) in centers.iter().zip(&values) {
        match v {
            Some(v) => {
                if *v > best.0 {
                    best = (*v, y.clone());
                }
                min_norm_sq = min_norm_sq.min(*v);
            }
            None => annihilated += 1,
        }
    }
    Ok(FamilyBound {
        max_norm_sq: best.0,
        argmax: best.1,
        min_norm_sq,
        centers: centers.len(),
        annihilated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Accepted,
    /// Descent ended on the ground level `q ≤ M(1 + ESCAPE_MARGIN)`: a single
    /// bump has escaped, whatever the final residual.
    Escaped,
    /// Converged above the ground level but outside the window.
    OutsideWindow,
    NotConverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintResiduals {
    pub lp: f64,
    pub barycenter: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub u: Field,
    pub status: SolveStatus,
    pub residual_rel: f64,
    /// `‖u‖²` of the Nehari-scaled iterate.
    pub norm_sq: f64,
    /// `‖u‖² / ‖u‖_p²`, the norm of `u / ‖u‖_p`; this is what the window brackets.
    pub quotient: f64,
    pub level: f64,
    /// Threshold `M`, taken as `‖φ‖_s² = M∞`.
    pub m: f64,
    pub c_r: f64,
    pub cr_converged: bool,
    pub constraint: BarycenterConstraint,
    pub window: LevelWindow,
    pub in_norm_window: bool,
    pub in_level_window: bool,
    pub constraint_residuals: ConstraintResiduals,
    pub family: FamilyBound,
    /// `|‖u‖² - ‖u‖_p^p| / ‖u‖²`.
    pub nehari_defect: f64,
    pub min_value: f64,
    pub outside_mask_max: f64,
    /// Peak location of the final iterate.
    pub peak: Vec<f64>,
    pub iterations: usize,
    /// Energy trace `(iteration, I(u))` of Stage B, every tenth step.
    pub energy_trace: Vec<(usize, f64)>,
    #[serde(skip)]
    pub snapshots: Vec<Field>,
    /// Seconds; excluded from reproducibility comparisons.
    pub wall_time: f64,
}

impl SolveReport {
    pub fn accepted(&self) -> bool {
        self.status == SolveStatus::Accepted
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub constraint: BarycenterConstraint,
    /// Keep every `k`-th Stage-B iterate (0 disables).
    pub snapshot_every: usize,
    /// Also write kept iterates as FRF1 files here.
    pub snapshot_dir: Option<PathBuf>,
    /// Centre spacing for the family bound; defaults to `r/16`.
    pub family_spacing: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            constraint: BarycenterConstraint::Origin,
            snapshot_every: 0,
            snapshot_dir: None,
            family_spacing: None,
        }
    }
}

/// Relative residual of `(-Δ)^s u + u = |u|^{p-2}u` restricted to `Ω_r`.
pub fn masked_residual(u: &Field, mask: &DomainMask, params: &ProblemParams) -> Result<f64> {
    let (r, _) = residual_field(u, params)?;
    let reduction = params.reduction();
    let rn = lp_integral(&mask.apply(&r), 2.0, reduction)?.sqrt();
    let un = lp_integral(u, 2.0, reduction)?.sqrt();
    Ok(rn / un.max(1e-30))
}

fn nehari_clip(u: &Field, mask: &DomainMask, params: &ProblemParams) -> Result<Field> {
    let clipped = mask.apply(&u.map(|v| v.max(0.0)));
    let b = restricted_norm_sq(&clipped, mask, params.s, params.p, params.reduction())?;
    if b.lp_p == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(clipped.scale(nehari_scale(&b, params.p)))
}

pub fn mountain_pass_solve(
    params: &ProblemParams,
    phi: &Field,
    mask: &DomainMask,
) -> Result<SolveReport> {
    mountain_pass_solve_with(params, phi, mask, &SolveOptions::default())
}

/// Stage A bounds the min-max level by the family maximum; Stage B descends
/// on `I` from the Nehari projection of the constrained minimizer, clipping
/// at zero and reprojecting each step.
pub fn mountain_pass_solve_with(
    params: &ProblemParams,
    phi: &Field,
    mask: &DomainMask,
    options: &SolveOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    params.validate()?;
    mask.check_grid(phi)?;
    let reduction = params.reduction();
    let m = norm_sq(phi, params.s, params.p, reduction)?.norm_sq / lp_norm(phi, params.p, reduction)?.powi(2);
    let window = LevelWindow::from_threshold(m, params.p)?;
    let family = family_bound(phi, params, mask, options.family_spacing.unwrap_or(params.r / 16.0))?;
    let cr = augmented_lagrangian(params, phi, mask, options.constraint)?;

    let symbol = shifted_symbol(phi, params.s);
    let mut u = nehari_clip(&cr.u, mask, params)?;
    let mut value = energy_i(&u, mask, params)?;
    let mut grad = grad_i(&u, mask, params)?;
    let mut residual = masked_residual(&u, mask, params)?;
    let mut step = 1.0;
    let mut last: Option<(Field, Field)> = None;
    let mut iterations = 0;
    let mut energy_trace = vec![(0, value)];
    let mut snapshots = Vec::new();
    let keep = |it: usize, u: &Field, snaps: &mut Vec<Field>| -> Result<()> {
        if options.snapshot_every > 0 && it % options.snapshot_every == 0 {
            if let Some(dir) = &options.snapshot_dir {
                std::fs::create_dir_all(dir)?;
                save_field(u, dir.join(format!("snapshot_{it:06}.frf")))?;
            }
            snaps.push(u.clone());
        }
        Ok(())
    };
    keep(0, &u, &mut snapshots)?;
    while iterations < params.max_iters && residual >= params.tol_residual {
        if let Some((pu, pg)) = &last {
            if let Some(bb) = bb_step(&u.axpy(-1.0, pu)?, &grad.axpy(-1.0, pg)?, &symbol, reduction) {
                step = bb;
            }
        }
        let dir = mask.apply(&resolvent(&grad, params.s)).scale(-1.0);
        let slope = inner(&grad, &dir, reduction);
        if !(slope < 0.0) {
            break;
        }
        let accepted = backtrack(value, slope, step, |tau| {
            let trial = nehari_clip(&u.axpy(tau, &dir)?, mask, params)?;
            let v = energy_i(&trial, mask, params)?;
            Ok((trial, v))
        })?;
        let Some((next, next_value, _)) = accepted else {
            break;
        };
        iterations += 1;
        let next_grad = grad_i(&next, mask, params)?;
        last = Some((std::mem::replace(&mut u, next), std::mem::replace(&mut grad, next_grad)));
        value = next_value;
        residual = masked_residual(&u, mask, params)?;
        if iterations % 10 == 0 {
            energy_trace.push((iterations, value));
        }
        keep(iterations, &u, &mut snapshots)?;
    }
    if energy_trace.last().map(|t| t.0) != Some(iterations) {
        energy_trace.push((iterations, value));
    }

    let b = restricted_norm_sq(&u, mask, params.s, params.p, reduction)?;
    let norm_sq = b.norm_sq;
    let quotient = rayleigh_quotient(&b, params.p);
    let level = energy_i(&u, mask, params)?;
    let in_norm_window = window.contains_norm(quotient);
    let in_level_window = window.contains_level(level);
    let min_value = u.min();
    let outside_mask_max = mask.outside_max(&u);
    let converged = residual < params.tol_residual;
    let status = if quotient <= m * (1.0 + ESCAPE_MARGIN) {
        SolveStatus::Escaped
    } else if !converged {
        SolveStatus::NotConverged
    } else if in_norm_window && min_value >= 0.0 && outside_mask_max == 0.0 {
        SolveStatus::Accepted
    } else {
        SolveStatus::OutsideWindow
    };
    let spec = u.spec();
    let peak = spec.point(u.argmax())[..spec.dim()].to_vec();
    Ok(SolveReport {
        status,
        residual_rel: residual,
        norm_sq,
        quotient,
        level,
        m,
        c_r: cr.c_r,
        cr_converged: cr.converged,
        constraint: cr.constraint,
        window,
        in_norm_window,
        in_level_window,
        constraint_residuals: ConstraintResiduals {
            lp: cr.lp_residual,
            barycenter: cr.barycenter_residual,
        },
        family,
        nehari_defect: (b.norm_sq - b.lp_p).abs() / b.norm_sq,
        min_value,
        outside_mask_max,
        peak,
        iterations,
        energy_trace,
        snapshots,
        wall_time: start.elapsed().as_secs_f64(),
        u,
    })
}
