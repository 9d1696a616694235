//! The fractional Laplacian, Gagliardo seminorm, `H^s` and `L^p` norms.
//!
//! The operator is the spectral multiplier `|k|^{2s}`. The Gagliardo double
//! integral `[u]² = ∬ |u(x)-u(z)|² |x-z|^{-N-2s}` is related to it by
//! `∫ u (-Δ)^s u = C(N,s)/2 · [u]²`, see [`fractional_constant`]. The norm
//! that enters the energy functionals uses the operator-normalized seminorm
//! `C(N,s)/2 · [u]²`, which makes `(-Δ)^s u + u - |u|^{p-2}u` the exact
//! gradient of the energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainMask;
use crate::grid::{Field, GridSpec};
use crate::params::ProblemParams;
use crate::reduce::{pairwise_sum, prepare, sum, sum_map, Reduction};
use crate::special::{epstein_zeta, fractional_constant, hurwitz_zeta, lattice_sum};
use crate::spectral::{apply_multiplier, forward, fractional_symbol};

/// Largest grid (in nodes) the direct double-sum quadrature accepts.
pub const DIRECT_QUADRATURE_LIMIT: usize = 4096;

/// Relative threshold for "vanishes outside the mask".
pub const MASK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Operator-normalized Gagliardo energy `C(N,s)/2 · [u]² = ∫ u (-Δ)^s u`.
    pub seminorm_sq: f64,
    pub l2_sq: f64,
    /// `∫ |u|^p`.
    pub lp_p: f64,
    /// `seminorm_sq + l2_sq`.
    pub norm_sq: f64,
}

impl EnergyBreakdown {
    fn new(seminorm_sq: f64, l2_sq: f64, lp_p: f64) -> Self {
        Self {
            seminorm_sq,
            l2_sq,
            lp_p,
            norm_sq: seminorm_sq + l2_sq,
        }
    }
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "fractional order s must lie in (0,1), got {s}"
        )))
    }
}

/// `(-Δ)^s u` on the torus.
pub fn frac_laplacian(u: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    Ok(apply_multiplier(u, &fractional_symbol(u.spec(), s)))
}

/// `∫ u (-Δ)^s u`, evaluated through Parseval.
pub fn operator_energy(u: &Field, s: f64, reduction: Reduction) -> Result<f64> {
    check_order(s)?;
    let u = prepare(u, reduction);
    let spec = u.spec();
    let symbol = fractional_symbol(spec, s);
    let hat = forward(&u);
    let terms: Vec<f64> = hat
        .iter()
        .zip(symbol.iter())
        .map(|(c, &w)| w * c.norm_sqr())
        .collect();
    Ok(sum(&terms, reduction) * spec.cell_volume() / spec.len() as f64)
}

/// Gagliardo seminorm squared (unnormalized double integral), spectral route.
pub fn gagliardo_seminorm_sq(u: &Field, s: f64, reduction: Reduction) -> Result<f64> {
    let e = operator_energy(u, s, reduction)?;
    Ok(2.0 * e / fractional_constant(u.spec().dim(), s))
}

fn plain_kernel_table(spec: &GridSpec, s: f64) -> (usize, Vec<f64>) {
    let m = spec.points_per_dim();
    let h = spec.spacing();
    let w = 2 * m - 1;
    let exponent = -(spec.dim() as f64 + 2.0 * s) / 2.0;
    let shifted = |d: usize| (d as f64 - (m - 1) as f64) * h;
    let table = match spec.dim() {
        1 => (0..w)
            .map(|d| {
                let a = shifted(d);
                if a == 0.0 {
                    0.0
                } else {
                    (a * a).powf(exponent)
                }
            })
            .collect(),
        _ => (0..w * w)
            .map(|f| {
                let (a, b) = (shifted(f / w), shifted(f % w));
                let d2 = a * a + b * b;
                if d2 == 0.0 {
                    0.0
                } else {
                    d2.powf(exponent)
                }
            })
            .collect(),
    };
    (w, table)
}

fn plain_offset(spec: &GridSpec, w: usize, i: usize, j: usize) -> usize {
    let m = spec.points_per_dim();
    let a = spec.unflatten(i);
    let b = spec.unflatten(j);
    let da = a[0] + m - 1 - b[0];
    match spec.dim() {
        1 => da,
        _ => da * w + (a[1] + m - 1 - b[1]),
    }
}

const IMAGE_SHELLS: i64 = 6;

/// `Σ_n |d + 2Ln|^{-N-2s}` for every cell difference `d` (mod M); zero at `d = 0`.
fn periodic_kernel_table(spec: &GridSpec, s: f64) -> Vec<f64> {
    let m = spec.points_per_dim();
    let h = spec.spacing();
    let period = 2.0 * spec.half_extent();
    let sigma = spec.dim() as f64 + 2.0 * s;
    match spec.dim() {
        1 => (0..m)
            .map(|d| {
                if d == 0 {
                    return 0.0;
                }
                let a = d as f64 * h / period;
                period.powf(-sigma) * (hurwitz_zeta(sigma, a) + hurwitz_zeta(sigma, 1.0 - a))
            })
            .collect(),
        _ => {
            // images with |n|_∞ ≤ R summed, the rest integrated outside the square
            // of half-width (R + 1/2)·2L
            let half = (IMAGE_SHELLS as f64 + 0.5) * period;
            let steps = 256;
            let quad: f64 = (0..=steps)
                .map(|k| {
                    let th = std::f64::consts::FRAC_PI_4 * k as f64 / steps as f64;
                    let wgt = if k == 0 || k == steps {
                        1.0
                    } else if k % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    wgt * th.cos().powf(2.0 * s)
                })
                .sum::<f64>()
                * std::f64::consts::FRAC_PI_4
                / (3.0 * steps as f64);
            // image points have density (2L)^{-2}
            let tail = 4.0 / s * half.powf(-2.0 * s) * quad / (period * period);
            (0..m * m)
                .map(|f| {
                    if f == 0 {
                        return 0.0;
                    }
                    let (da, db) = ((f / m) as f64 * h, (f % m) as f64 * h);
                    let mut acc = Vec::with_capacity(((2 * IMAGE_SHELLS + 1) as usize).pow(2));
                    for n1 in -IMAGE_SHELLS..=IMAGE_SHELLS {
                        for n2 in -IMAGE_SHELLS..=IMAGE_SHELLS {
                            let x = da + n1 as f64 * period;
                            let y = db + n2 as f64 * period;
                            acc.push((x * x + y * y).powf(-sigma / 2.0));
                        }
                    }
                    pairwise_sum(&acc) + tail
                })
                .collect()
        }
    }
}

fn periodic_offset(spec: &GridSpec, i: usize, j: usize) -> usize {
    let m = spec.points_per_dim();
    let a = spec.unflatten(i);
    let b = spec.unflatten(j);
    let da = (a[0] + m - b[0]) % m;
    match spec.dim() {
        1 => da,
        _ => da * m + (a[1] + m - b[1]) % m,
    }
}

/// `h^N Σ_i |∇u_i|²` with centered periodic differences.
fn gradient_energy(u: &Field) -> f64 {
    let spec = u.spec();
    let m = spec.points_per_dim();
    let h = spec.spacing();
    let v = u.values();
    let terms: Vec<f64> = (0..spec.len())
        .map(|f| {
            let idx = spec.unflatten(f);
            let mut g2 = 0.0;
            for axis in 0..spec.dim() {
                let mut plus = idx;
                let mut minus = idx;
                plus[axis] = (idx[axis] + 1) % m;
                minus[axis] = (idx[axis] + m - 1) % m;
                let g = (v[spec.flatten(plus)] - v[spec.flatten(minus)]) / (2.0 * h);
                g2 += g * g;
            }
            g2
        })
        .collect();
    pairwise_sum(&terms) * spec.cell_volume()
}

/// How the sampled field is continued outside the box for direct quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Periodic continuation: the torus double integral the spectral route discretizes.
    Periodic,
    /// Zero outside the box: the whole-space double integral of the truncated field.
    Zero,
}

/// Gagliardo seminorm squared by direct quadrature over grid-point pairs
/// (periodic continuation). See [`gagliardo_seminorm_sq_direct_with`].
pub fn gagliardo_seminorm_sq_direct(u: &Field, s: f64) -> Result<f64> {
    gagliardo_seminorm_sq_direct_with(u, s, Extension::Periodic)
}

/// Direct `O(M^{2N})` quadrature of `∬ |u(x)-u(z)|² |x-z|^{-N-2s}`.
///
/// Grid-point pairs are summed with the diagonal excluded. The punctured lattice
/// sum misses the near-diagonal part of the integral by
/// `h^{2-2s} Z(N+2s-2)/N · ∫|∇u|²` to leading order (`Z` the lattice Epstein
/// zeta), which is subtracted. Pairs reaching outside the box are handled by
/// `extension`. Refused above [`DIRECT_QUADRATURE_LIMIT`] nodes.
pub fn gagliardo_seminorm_sq_direct_with(u: &Field, s: f64, extension: Extension) -> Result<f64> {
    check_order(s)?;
    let spec = *u.spec();
    let n = spec.len();
    if n > DIRECT_QUADRATURE_LIMIT {
        return Err(Error::OracleTooLarge {
            points: n,
            limit: DIRECT_QUADRATURE_LIMIT,
        });
    }
    let h = spec.spacing();
    let dim = spec.dim() as f64;
    let v = u.values();
    let pair_sum = match extension {
        Extension::Periodic => {
            let table = periodic_kernel_table(&spec, s);
            let rows: Vec<f64> = (0..n)
                .map(|i| {
                    let terms: Vec<f64> = (0..n)
                        .map(|j| {
                            let d = v[i] - v[j];
                            d * d * table[periodic_offset(&spec, i, j)]
                        })
                        .collect();
                    pairwise_sum(&terms)
                })
                .collect();
            pairwise_sum(&rows)
        }
        Extension::Zero => {
            let (w, table) = plain_kernel_table(&spec, s);
            let full_lattice = lattice_sum(spec.dim(), s) * h.powf(-dim - 2.0 * s);
            let rows: Vec<f64> = (0..n)
                .map(|i| {
                    let mut pair = Vec::with_capacity(n);
                    let mut inside_kernel = Vec::with_capacity(n);
                    for j in 0..n {
                        let k = table[plain_offset(&spec, w, i, j)];
                        let d = v[i] - v[j];
                        pair.push(d * d * k);
                        inside_kernel.push(k);
                    }
                    // lattice points outside the box carry u = 0
                    let exterior = full_lattice - pairwise_sum(&inside_kernel);
                    pairwise_sum(&pair) + 2.0 * v[i] * v[i] * exterior
                })
                .collect();
            pairwise_sum(&rows)
        }
    };
    let zeta = epstein_zeta(spec.dim(), dim + 2.0 * s - 2.0);
    let near_diagonal = h.powf(2.0 - 2.0 * s) * zeta / dim * gradient_energy(u);
    Ok(pair_sum * spec.cell_volume().powi(2) - near_diagonal)
}

/// Double integral over pairs with both points inside the mask (the `H^s(Ω)`
/// seminorm), by direct quadrature.
pub fn interior_seminorm_sq_direct(u: &Field, mask: &DomainMask, s: f64) -> Result<f64> {
    check_order(s)?;
    mask.check_grid(u)?;
    let spec = *u.spec();
    let n = spec.len();
    if n > DIRECT_QUADRATURE_LIMIT {
        return Err(Error::OracleTooLarge {
            points: n,
            limit: DIRECT_QUADRATURE_LIMIT,
        });
    }
    let (w, table) = plain_kernel_table(&spec, s);
    let inside = mask.inside();
    let v = u.values();
    let rows: Vec<f64> = (0..n)
        .map(|i| {
            if !inside[i] {
                return 0.0;
            }
            let terms: Vec<f64> = (0..n)
                .filter(|&j| inside[j])
                .map(|j| {
                    let d = v[i] - v[j];
                    d * d * table[plain_offset(&spec, w, i, j)]
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&rows) * spec.cell_volume().powi(2))
}

/// `(h^N Σ |u_i|^p)^{1/p}`.
pub fn lp_norm(u: &Field, p: f64, reduction: Reduction) -> Result<f64> {
    Ok(lp_integral(u, p, reduction)?.powf(1.0 / p))
}

/// `h^N Σ |u_i|^p`.
pub fn lp_integral(u: &Field, p: f64, reduction: Reduction) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("need p >= 1, got {p}")));
    }
    let u = prepare(u, reduction);
    let total = if p == 2.0 {
        sum_map(u.values(), reduction, |_, v| v * v)
    } else {
        sum_map(u.values(), reduction, |_, v| v.abs().powf(p))
    };
    Ok(total * u.spec().cell_volume())
}

/// Full-space `‖u‖_s²` and its parts.
pub fn norm_sq(u: &Field, s: f64, p: f64, reduction: Reduction) -> Result<EnergyBreakdown> {
    let u = prepare(u, reduction);
    let semi = operator_energy(&u, s, reduction)?;
    let l2 = lp_integral(&u, 2.0, reduction)?;
    let lp = lp_integral(&u, p, reduction)?;
    Ok(EnergyBreakdown::new(semi, l2, lp))
}

/// `‖u‖²` over `Q = R^{2N} \ (Ω^c × Ω^c)` for `u` vanishing outside `Ω`.
///
/// The seminorm part integrates over `Q`, which for such `u` is the whole-space
/// double integral; the `L²` and `L^p` parts integrate over `Ω`.
pub fn restricted_norm_sq(
    u: &Field,
    mask: &DomainMask,
    s: f64,
    p: f64,
    reduction: Reduction,
) -> Result<EnergyBreakdown> {
    mask.check_support(u)?;
    let semi = operator_energy(u, s, reduction)?;
    let inside = mask.inside();
    let l2 = sum_map(u.values(), reduction, |i, v| if inside[i] { v * v } else { 0.0 })
        * u.spec().cell_volume();
    let lp = sum_map(u.values(), reduction, |i, v| {
        if inside[i] {
            v.abs().powf(p)
        } else {
            0.0
        }
    }) * u.spec().cell_volume();
    Ok(EnergyBreakdown::new(semi, l2, lp))
}

/// `sign(u) |u|^{p-1}` pointwise.
pub fn nonlinearity(u: &Field, p: f64) -> Field {
    if p == 3.0 {
        u.map(|v| v * v.abs())
    } else {
        u.map(|v| v.signum() * v.abs().powf(p - 1.0))
    }
}

/// `(-Δ)^s u + u - |u|^{p-2} u` and its relative `L²` size `‖R‖₂ / max(‖u‖₂, 1e-30)`.
pub fn residual_field(u: &Field, params: &ProblemParams) -> Result<(Field, f64)> {
    params.validate()?;
    let lap = frac_laplacian(u, params.s)?;
    let nl = nonlinearity(u, params.p);
    let r = Field::from_raw(
        *u.spec(),
        lap.values()
            .iter()
            .zip(u.values())
            .zip(nl.values())
            .map(|((&a, &b), &c)| a + b - c)
            .collect(),
    );
    let reduction = params.reduction();
    let rn = lp_integral(&r, 2.0, reduction)?.sqrt();
    let un = lp_integral(u, 2.0, reduction)?.sqrt();
    Ok((r, rn / un.max(1e-30)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, translate};
    use std::f64::consts::PI;

    #[test]
    fn zero_field() {
        let g = make_grid(2, 4.0, 16).unwrap();
        let z = Field::zeros(g);
        assert!(frac_laplacian(&z, 0.3).unwrap().values().iter().all(|&v| v == 0.0));
        assert_eq!(gagliardo_seminorm_sq(&z, 0.3, Reduction::Deterministic).unwrap(), 0.0);
        assert_eq!(gagliardo_seminorm_sq_direct(&z, 0.3).unwrap(), 0.0);
        let b = norm_sq(&z, 0.3, 3.0, Reduction::Deterministic).unwrap();
        assert_eq!(b.norm_sq, 0.0);
        assert_eq!(lp_norm(&z, 3.0, Reduction::Deterministic).unwrap(), 0.0);
    }

    #[test]
    fn order_is_checked() {
        let g = make_grid(1, 4.0, 16).unwrap();
        let z = Field::zeros(g);
        assert!(frac_laplacian(&z, 1.0).is_err());
        assert!(gagliardo_seminorm_sq(&z, 0.0, Reduction::Deterministic).is_err());
        assert!(lp_norm(&z, 0.5, Reduction::Deterministic).is_err());
    }

    #[test]
    fn cosine_mode_is_eigenfunction() {
        let g = make_grid(2, 5.0, 32).unwrap();
        let (m1, m2) = (3.0, -2.0);
        let k = [PI * m1 / 5.0, PI * m2 / 5.0];
        let u = Field::from_fn(g, |x| (k[0] * x[0] + k[1] * x[1]).cos());
        let s = 0.37;
        let lam = (k[0] * k[0] + k[1] * k[1]).powf(s);
        let lu = frac_laplacian(&u, s).unwrap();
        for (a, b) in lu.values().iter().zip(u.values()) {
            assert!((a - lam * b).abs() < 1e-12 * lam);
        }
    }

    #[test]
    fn single_cell_lp() {
        let g = make_grid(1, 4.0, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[5] = 1.0;
        let u = Field::from_values(g, v).unwrap();
        let n = lp_norm(&u, 3.0, Reduction::Deterministic).unwrap();
        assert!((n - g.spacing().powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn translation_invariance_is_exact() {
        let g = make_grid(2, 6.0, 32).unwrap();
        let u = Field::from_fn(g, |x| (-(x[0] - 1.0).powi(2) - 0.5 * x[1] * x[1]).exp() * (1.0 + 0.3 * x[0]));
        let w = translate(&u, &[7, -3]);
        let r = Reduction::Deterministic;
        assert_eq!(norm_sq(&u, 0.5, 3.0, r).unwrap(), norm_sq(&w, 0.5, 3.0, r).unwrap());
        assert_eq!(lp_norm(&u, 2.5, r).unwrap(), lp_norm(&w, 2.5, r).unwrap());
    }

    #[test]
    fn seminorm_homogeneity() {
        let g = make_grid(1, 10.0, 256).unwrap();
        let u = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
        let a = gagliardo_seminorm_sq(&u, 0.4, Reduction::Deterministic).unwrap();
        let b = gagliardo_seminorm_sq(&u.scale(2.0), 0.4, Reduction::Deterministic).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn oracle_cost_guard() {
        let g = make_grid(2, 4.0, 128).unwrap();
        assert!(matches!(
            gagliardo_seminorm_sq_direct(&Field::zeros(g), 0.5),
            Err(Error::OracleTooLarge { .. })
        ));
    }
}
