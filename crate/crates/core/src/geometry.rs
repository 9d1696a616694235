//! The half-space with a hole, its cutoffs, and the test functions `Ψ_y`.

use crate::error::{Error, Result};
use crate::fractional::{lp_norm, norm_sq, MASK_TOLERANCE};
use crate::grid::{translate, Field, GridSpec};
use crate::params::ProblemParams;

/// Indicator of `Ω_r = {x_N > 0} \ B̄_ρ(a_r)` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    spec: GridSpec,
    inside: Vec<bool>,
    rho: f64,
    hole_center: Vec<f64>,
    hole_measure: f64,
}

impl DomainMask {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn hole_center(&self) -> &[f64] {
        &self.hole_center
    }

    /// Measure (cell count times `h^N`) of the excluded hole.
    pub fn hole_measure(&self) -> f64 {
        self.hole_measure
    }

    pub fn count_inside(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn check_grid(&self, u: &Field) -> Result<()> {
        if *u.spec() != self.spec {
            return Err(Error::GridMismatch(format!(
                "field on {:?}, mask on {:?}",
                u.spec(),
                self.spec
            )));
        }
        Ok(())
    }

    /// Largest `|u|` outside the mask.
    pub fn outside_max(&self, u: &Field) -> f64 {
        u.values()
            .iter()
            .zip(&self.inside)
            .filter(|(_, &b)| !b)
            .fold(0.0_f64, |m, (v, _)| m.max(v.abs()))
    }

    /// Fails unless `u` vanishes outside the mask up to `1e-12 · max|u|`.
    pub fn check_support(&self, u: &Field) -> Result<()> {
        self.check_grid(u)?;
        let outside = self.outside_max(u);
        let max = u.max_abs();
        if outside > MASK_TOLERANCE * max {
            return Err(Error::MassOutsideMask { outside, max });
        }
        Ok(())
    }

    /// Sets every sample outside the mask to exactly zero.
    pub fn apply(&self, u: &Field) -> Field {
        Field::from_raw(
            self.spec,
            u.values()
                .iter()
                .zip(&self.inside)
                .map(|(&v, &b)| if b { v } else { 0.0 })
                .collect(),
        )
    }

    /// Zeroes entries outside the mask in place.
    pub fn apply_in_place(&self, values: &mut [f64]) {
        for (v, &b) in values.iter_mut().zip(&self.inside) {
            if !b {
                *v = 0.0;
            }
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Builds `Ω_r`: a node is inside iff `x_N > 0` and `|x - a_r| > ρ`.
pub fn build_domain(spec: &GridSpec, params: &ProblemParams) -> Result<DomainMask> {
    if params.dim != spec.dim() {
        return Err(Error::GridMismatch(format!(
            "params for N = {}, grid has N = {}",
            params.dim,
            spec.dim()
        )));
    }
    if !(params.rho > 0.0) || !(params.r > params.rho) {
        return Err(Error::InvalidParameter(format!(
            "hole B_rho(a_r) must lie in the upper half-space: r = {}, rho = {}",
            params.r, params.rho
        )));
    }
    let center = params.hole_center();
    let dim = spec.dim();
    let mut hole_cells = 0usize;
    let inside = (0..spec.len())
        .map(|i| {
            let p = spec.point(i);
            let x = &p[..dim];
            let in_hole = distance(x, &center) <= params.rho;
            if in_hole {
                hole_cells += 1;
            }
            x[dim - 1] > 0.0 && !in_hole
        })
        .collect();
    let mask = DomainMask {
        spec: *spec,
        inside,
        rho: params.rho,
        hole_center: center,
        hole_measure: hole_cells as f64 * spec.cell_volume(),
    };
    if mask.count_inside() == 0 {
        return Err(Error::InvalidParameter("domain has no interior nodes".into()));
    }
    Ok(mask)
}

fn smoothstep(tau: f64) -> f64 {
    tau * tau * (3.0 - 2.0 * tau)
}

/// Hole cutoff: 0 on `[0, ρ]`, 1 on `[2ρ, ∞)`, `C¹` smoothstep in between.
pub fn xi(t: f64, rho: f64) -> f64 {
    if t <= rho {
        0.0
    } else if t >= 2.0 * rho {
        1.0
    } else {
        smoothstep((t - rho) / rho)
    }
}

/// Boundary cutoff: 0 on `(-∞, 0]`, 1 on `[1, ∞)`.
pub fn eta(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        smoothstep(t)
    }
}

/// `Ψ_y = f_y / ‖f_y‖_p` with its normalization recorded.
#[derive(Debug, Clone)]
pub struct TestFunction {
    /// Centre, snapped to the grid.
    pub y: Vec<f64>,
    pub psi: Field,
    /// `1 / ‖f_y‖_p`.
    pub c_y: f64,
    /// `‖f_y‖_p`.
    pub raw_lp: f64,
}

/// Unnormalized `f_y(x) = ξ(|x - a_r|) η(x_N) φ(x - y)`, hard-masked to `Ω_r`,
/// together with the plain translate `φ(· - y)` and the snapped centre.
pub fn cutoff_profile(
    y: &[f64],
    phi: &Field,
    params: &ProblemParams,
    mask: &DomainMask,
) -> Result<(Field, Field, Vec<f64>)> {
    mask.check_grid(phi)?;
    let spec = *phi.spec();
    let offset = spec.snap_offset(y)?;
    let snapped = spec.offset_point(offset);
    let shifted = translate(phi, &offset);
    let center = mask.hole_center().to_vec();
    let dim = spec.dim();
    let values = shifted
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if !mask.inside()[i] {
                return 0.0;
            }
            let p = spec.point(i);
            let x = &p[..dim];
            xi(distance(x, &center), params.rho) * eta(x[dim - 1]) * v
        })
        .collect();
    Ok((Field::from_raw(spec, values), shifted, snapped))
}

/// Floor on `‖f_y‖_p` below which the cutoffs are considered to have erased `φ`.
pub const ANNIHILATION_FLOOR: f64 = 1e-8;

pub fn test_function(
    y: &[f64],
    phi: &Field,
    params: &ProblemParams,
    mask: &DomainMask,
) -> Result<TestFunction> {
    let (f, _, snapped) = cutoff_profile(y, phi, params, mask)?;
    let raw_lp = lp_norm(&f, params.p, params.reduction())?;
    if raw_lp < ANNIHILATION_FLOOR {
        return Err(Error::AnnihilatedTestFunction(raw_lp));
    }
    Ok(TestFunction {
        y: snapped,
        psi: f.scale(1.0 / raw_lp),
        c_y: 1.0 / raw_lp,
        raw_lp,
    })
}

/// `‖f_y - φ(·-y)‖_p` and `‖f_y - φ(·-y)‖_s`.
pub fn cutoff_error(
    y: &[f64],
    phi: &Field,
    params: &ProblemParams,
    mask: &DomainMask,
) -> Result<(f64, f64)> {
    let (f, shifted, _) = cutoff_profile(y, phi, params, mask)?;
    let diff = f.axpy(-1.0, &shifted)?;
    let reduction = params.reduction();
    let lp = lp_norm(&diff, params.p, reduction)?;
    let norm = norm_sq(&diff, params.s, params.p, reduction)?.norm_sq.sqrt();
    if lp_norm(&f, params.p, reduction)? < ANNIHILATION_FLOOR {
        return Err(Error::AnnihilatedTestFunction(lp));
    }
    Ok((lp, norm))
}
