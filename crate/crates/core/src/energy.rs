//! The functionals `I` (on `Ω_r`) and `I∞` (on the whole box), their gradients,
//! the Nehari scaling and the norm-to-level map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{frac_laplacian, nonlinearity, norm_sq, restricted_norm_sq, EnergyBreakdown};
use crate::geometry::DomainMask;
use crate::grid::Field;
use crate::params::ProblemParams;

/// Energy on the Nehari set with normalized norm `c`: `(1/2 - 1/p) c^{p/(p-2)}`.
pub fn level_from_norm(c: f64, p: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::InvalidParameter(format!("need p > 2, got {p}")));
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidParameter(format!("need c >= 0, got {c}")));
    }
    Ok((0.5 - 1.0 / p) * c.powf(p / (p - 2.0)))
}

/// The compactness window `(M, 2^{(p-2)/p} M)` in norm and level form.
///
/// `M` plays the role of the unlabelled threshold in the min-max bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelWindow {
    pub lower_norm: f64,
    pub upper_norm: f64,
    pub lower: f64,
    pub upper: f64,
}

impl LevelWindow {
    pub fn from_threshold(m: f64, p: f64) -> Result<Self> {
        let upper_norm = 2f64.powf((p - 2.0) / p) * m;
        Ok(Self {
            lower_norm: m,
            upper_norm,
            lower: level_from_norm(m, p)?,
            upper: level_from_norm(upper_norm, p)?,
        })
    }

    pub fn contains_norm(&self, c: f64) -> bool {
        self.lower_norm < c && c < self.upper_norm
    }

    pub fn contains_level(&self, e: f64) -> bool {
        self.lower < e && e < self.upper
    }
}

fn functional(b: &EnergyBreakdown, p: f64) -> f64 {
    0.5 * b.norm_sq - b.lp_p / p
}

/// `I(u) = ½‖u‖² - (1/p)∫_{Ω_r}|u|^p` for `u` vanishing outside the mask.
pub fn energy_i(u: &Field, mask: &DomainMask, params: &ProblemParams) -> Result<f64> {
    let b = restricted_norm_sq(u, mask, params.s, params.p, params.reduction())?;
    Ok(functional(&b, params.p))
}

/// `I∞(u)` over the whole torus.
pub fn energy_iinf(u: &Field, params: &ProblemParams) -> Result<f64> {
    let b = norm_sq(u, params.s, params.p, params.reduction())?;
    Ok(functional(&b, params.p))
}

/// `(-Δ)^s u + u - |u|^{p-2}u`, unmasked.
pub fn grad_iinf(u: &Field, params: &ProblemParams) -> Result<Field> {
    let lap = frac_laplacian(u, params.s)?;
    let nl = nonlinearity(u, params.p);
    let values = lap
        .values()
        .iter()
        .zip(u.values())
        .zip(nl.values())
        .map(|((&a, &b), &c)| a + b - c)
        .collect();
    Ok(Field::from_raw(*u.spec(), values))
}

/// `L²` representative of `I'(u)`: the equation residual, zeroed outside `Ω_r`.
pub fn grad_i(u: &Field, mask: &DomainMask, params: &ProblemParams) -> Result<Field> {
    mask.check_support(u)?;
    Ok(mask.apply(&grad_iinf(u, params)?))
}

/// `‖u‖² / ‖u‖_p²`, the norm of `u / ‖u‖_p`.
pub fn rayleigh_quotient(b: &EnergyBreakdown, p: f64) -> f64 {
    b.norm_sq / b.lp_p.powf(2.0 / p)
}

/// Scales `u` onto the Nehari set `‖tu‖² = ‖tu‖_p^p`.
pub fn nehari_project(u: &Field, mask: &DomainMask, params: &ProblemParams) -> Result<Field> {
    let b = restricted_norm_sq(u, mask, params.s, params.p, params.reduction())?;
    if b.lp_p == 0.0 {
        return Err(Error::ZeroField);
    }
    let t = nehari_scale(&b, params.p);
    Ok(u.scale(t))
}

pub(crate) fn nehari_scale(b: &EnergyBreakdown, p: f64) -> f64 {
    (b.norm_sq / b.lp_p).powf(1.0 / (p - 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::lp_norm;
    use crate::geometry::build_domain;
    use crate::grid::make_grid;

    fn setup() -> (ProblemParams, DomainMask, Field) {
        let params = ProblemParams::planar(0.5, 3.0, 1.0, 5.0);
        let g = make_grid(2, 8.0, 32).unwrap();
        let mask = build_domain(&g, &params).unwrap();
        let u = mask.apply(&Field::from_fn(g, |x| {
            (-(x[0] - 2.0).powi(2) / 2.0 - (x[1] - 3.0).powi(2) / 3.0).exp()
        }));
        (params, mask, u)
    }

    #[test]
    fn level_examples() {
        assert_eq!(level_from_norm(1.0, 4.0).unwrap(), 0.25);
        assert_eq!(level_from_norm(0.0, 3.3).unwrap(), 0.0);
        assert!(level_from_norm(1.0, 2.0).is_err());
        let w = LevelWindow::from_threshold(1.7, 3.0).unwrap();
        assert!((w.upper / w.lower - 2.0).abs() < 1e-14);
        assert!(w.lower < w.upper);
    }

    #[test]
    fn zero_field_energies() {
        let (params, mask, u) = setup();
        let z = Field::zeros(*u.spec());
        assert_eq!(energy_i(&z, &mask, &params).unwrap(), 0.0);
        assert_eq!(energy_iinf(&z, &params).unwrap(), 0.0);
        assert!(grad_i(&z, &mask, &params).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(matches!(nehari_project(&z, &mask, &params), Err(Error::ZeroField)));
    }

    #[test]
    fn nehari_properties() {
        let (params, mask, u) = setup();
        let v = nehari_project(&u, &mask, &params).unwrap();
        let b = restricted_norm_sq(&v, &mask, 0.5, 3.0, params.reduction()).unwrap();
        assert!((b.norm_sq - b.lp_p).abs() / b.norm_sq < 1e-10);
        let e = energy_i(&v, &mask, &params).unwrap();
        assert!((e - (0.5 - 1.0 / 3.0) * b.norm_sq).abs() < 1e-12 * e);
        // fixed point and scale invariance
        let vv = nehari_project(&v, &mask, &params).unwrap();
        for (a, c) in v.values().iter().zip(vv.values()) {
            assert!((a - c).abs() <= 1e-12 * v.max_abs());
        }
        let v3 = nehari_project(&u.scale(3.0), &mask, &params).unwrap();
        for (a, c) in v.values().iter().zip(v3.values()) {
            assert!((a - c).abs() <= 1e-12 * v.max_abs());
        }
    }

    #[test]
    fn unit_lp_case() {
        let (params, mask, u) = setup();
        let n = lp_norm(&u, 3.0, params.reduction()).unwrap();
        let u1 = u.scale(1.0 / n);
        let b = restricted_norm_sq(&u1, &mask, 0.5, 3.0, params.reduction()).unwrap();
        let v = nehari_project(&u1, &mask, &params).unwrap();
        let t = v.max_abs() / u1.max_abs();
        assert!((t - b.norm_sq.powf(1.0 / (3.0 - 2.0))).abs() < 1e-10 * t);
        let e = energy_i(&v, &mask, &params).unwrap();
        let expect = (0.5 - 1.0 / 3.0) * b.norm_sq.powf(3.0);
        assert!((e - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn masked_energies_agree() {
        let (params, mask, u) = setup();
        let a = energy_i(&u, &mask, &params).unwrap();
        let b = energy_iinf(&u, &params).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs());
    }
}
