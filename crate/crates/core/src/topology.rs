//! The barycenter map, the push-out pairing on the sphere `∂B_{r/2}(a_r)`,
//! and the Brouwer degree of sampled boundary maps.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{test_function, DomainMask};
use crate::grid::Field;
use crate::params::ProblemParams;
use crate::reduce::pairwise_sum;

/// `χ(t) = 1` on `[0, 1]`, `1/t` beyond.
pub fn chi(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("chi needs t >= 0, got {t}")));
    }
    Ok(if t <= 1.0 { 1.0 } else { 1.0 / t })
}

fn chi_unchecked(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else {
        1.0 / t
    }
}

/// `β(u) = ∫ u²(x) χ(|x|) x dx`.
pub fn barycenter(u: &Field) -> Vec<f64> {
    barycenter_about(u, &[0.0; 2][..u.spec().dim()])
}

/// `∫ u²(x) χ(|x - c|) (x - c) dx`, the barycenter taken about `c`.
pub fn barycenter_about(u: &Field, center: &[f64]) -> Vec<f64> {
    let spec = u.spec();
    let dim = spec.dim();
    let vol = spec.cell_volume();
    let mut terms = vec![Vec::with_capacity(spec.len()); dim];
    for (i, &v) in u.values().iter().enumerate() {
        let p = spec.point(i);
        let mut d = [0.0; 2];
        for a in 0..dim {
            d[a] = p[a] - center[a];
        }
        let radius = d[..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
        let w = v * v * chi_unchecked(radius);
        for a in 0..dim {
            terms[a].push(w * d[a]);
        }
    }
    terms.iter().map(|t| pairwise_sum(t) * vol).collect()
}

/// Fraction of `∫u²` carried by nodes within one cell of the box boundary.
pub fn boundary_mass_fraction(u: &Field) -> f64 {
    let spec = u.spec();
    let m = spec.points_per_dim();
    let dim = spec.dim();
    let mut edge = Vec::new();
    let mut all = Vec::with_capacity(spec.len());
    for (i, &v) in u.values().iter().enumerate() {
        let idx = spec.unflatten(i);
        let on_edge = idx[..dim].iter().any(|&k| k <= 1 || k + 1 >= m);
        all.push(v * v);
        if on_edge {
            edge.push(v * v);
        }
    }
    let total = pairwise_sum(&all);
    if total == 0.0 {
        0.0
    } else {
        pairwise_sum(&edge) / total
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BarycenterReport {
    /// Probe centre, snapped to the grid.
    pub y: Vec<f64>,
    pub beta: Vec<f64>,
    /// `⟨β(Ψ_y), y⟩`.
    pub pairing: f64,
    /// `⟨β(Ψ_y) - a_r, y - a_r⟩`.
    pub shifted_pairing: f64,
    /// Barycenter of `Ψ_y` taken about `a_r`.
    pub beta_about_hole: Vec<f64>,
    /// `∫Ψ_y²`, which bounds `|β(Ψ_y)|`.
    pub l2_sq: f64,
}

/// Builds `Ψ_y` and evaluates both pairings of its barycenter.
pub fn pushout_test(
    y: &[f64],
    phi: &Field,
    params: &ProblemParams,
    mask: &DomainMask,
) -> Result<BarycenterReport> {
    let tf = test_function(y, phi, params, mask)?;
    Ok(barycenter_report(&tf.psi, tf.y, mask.hole_center()))
}

/// Pairings of `β(u)` against the probe centre `y`.
pub fn barycenter_report(u: &Field, y: Vec<f64>, hole_center: &[f64]) -> BarycenterReport {
    let beta = barycenter(u);
    let beta_about_hole = barycenter_about(u, hole_center);
    let l2_sq = pairwise_sum(&u.values().iter().map(|v| v * v).collect::<Vec<_>>())
        * u.spec().cell_volume();
    BarycenterReport {
        pairing: dot(&beta, &y),
        shifted_pairing: dot(&sub(&beta, hole_center), &sub(&y, hole_center)),
        y,
        beta,
        beta_about_hole,
        l2_sq,
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Principal-branch angle increments of `H(y_i) - target` around the closed
/// sample loop; entry `i` is the increment from sample `i` to `i + 1`.
pub fn angle_increments(values: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>> {
    if target.len() != 2 || values.iter().any(|v| v.len() != 2) {
        return Err(Error::InvalidParameter("winding needs planar values".into()));
    }
    if values.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "winding needs at least 3 samples, got {}",
            values.len()
        )));
    }
    let mut angles = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let d = sub(v, target);
        let scale = v.iter().chain(target).fold(0.0_f64, |m, x| m.max(x.abs()));
        if d[0].hypot(d[1]) <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::HitsTarget(i));
        }
        angles.push(d[1].atan2(d[0]));
    }
    let n = angles.len();
    (0..n)
        .map(|i| {
            let inc = wrap_angle(angles[(i + 1) % n] - angles[i]);
            if inc.abs() >= PI {
                Err(Error::UndersampledBoundary { index: i, increment: inc })
            } else {
                Ok(inc)
            }
        })
        .collect()
}

/// Degree of the sampled boundary map `y_i ↦ H(y_i)` at `target`.
///
/// For `N = 2` the samples must run counterclockwise around the circle and the
/// result is the winding number of `H - target`. For `N = 1` the two samples
/// are the endpoints `[y⁻, y⁺]` and the degree is `(sgn(H(y⁺) - t) - sgn(H(y⁻) - t)) / 2`.
pub fn boundary_degree(values: &[Vec<f64>], target: &[f64]) -> Result<i64> {
    match target.len() {
        1 => {
            if values.len() != 2 || values.iter().any(|v| v.len() != 1) {
                return Err(Error::InvalidParameter(
                    "one-dimensional degree needs the two endpoint values".into(),
                ));
            }
            let sign = |i: usize| -> Result<i64> {
                let d = values[i][0] - target[0];
                if d == 0.0 {
                    Err(Error::HitsTarget(i))
                } else {
                    Ok(if d > 0.0 { 1 } else { -1 })
                }
            };
            Ok((sign(1)? - sign(0)?) / 2)
        }
        2 => {
            let total: f64 = angle_increments(values, target)?.iter().sum();
            Ok((total / (2.0 * PI)).round() as i64)
        }
        n => Err(Error::InvalidParameter(format!("degree supports N = 1 or 2, got {n}"))),
    }
}

/// Counterclockwise samples of the sphere `|y - c| = radius` (two points for `N = 1`).
pub fn sphere_samples(center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    match center.len() {
        1 => vec![vec![center[0] - radius], vec![center[0] + radius]],
        _ => (0..count)
            .map(|i| {
                let theta = 2.0 * PI * i as f64 / count as f64;
                vec![center[0] + radius * theta.cos(), center[1] + radius * theta.sin()]
            })
            .collect(),
    }
}

/// Homotopy knots `t` for `F(t, y) = (1 - t) β(Ψ_y) + t y`.
pub const HOMOTOPY_KNOTS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub angle: f64,
    #[serde(flatten)]
    pub report: BarycenterReport,
    /// Angle increment of `β(Ψ_y) - a_r` to the next sample (`N = 2`).
    pub increment: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereScan {
    pub rows: Vec<ScanRow>,
    /// Degree of `y ↦ β(Ψ_y)` at `a_r`.
    pub degree: std::result::Result<i64, String>,
    /// Degree of the hole-centred barycenter at `0`.
    pub degree_about_hole: std::result::Result<i64, String>,
    /// Degree of the identity at `a_r` over the same (snapped) samples.
    pub identity_degree: std::result::Result<i64, String>,
    pub min_pairing: f64,
    pub min_shifted_pairing: f64,
    /// `min ⟨F(t, y), y⟩` over samples and knots.
    pub min_homotopy_pairing: f64,
    /// `min |F(t, y) - a_r|` over samples and knots.
    pub min_homotopy_distance: f64,
}

impl SphereScan {
    pub fn all_pairings_positive(&self) -> bool {
        self.min_pairing > 0.0
    }

    pub fn homotopy_positive(&self) -> bool {
        self.min_homotopy_pairing > 0.0
    }
}

/// Push-out pairings, the degree at `a_r` and the homotopy certificate on
/// `count` samples of `∂B_{r/2}(a_r)`.
pub fn sphere_scan(
    phi: &Field,
    params: &ProblemParams,
    mask: &DomainMask,
    count: usize,
) -> Result<SphereScan> {
    let center = mask.hole_center().to_vec();
    let samples = sphere_samples(&center, params.r / 2.0, count);
    let reports = samples
        .par_iter()
        .map(|y| pushout_test(y, phi, params, mask))
        .collect::<Result<Vec<_>>>()?;
    let betas: Vec<Vec<f64>> = reports.iter().map(|r| r.beta.clone()).collect();
    let about: Vec<Vec<f64>> = reports.iter().map(|r| r.beta_about_hole.clone()).collect();
    let ys: Vec<Vec<f64>> = reports.iter().map(|r| r.y.clone()).collect();
    let origin = vec![0.0; center.len()];
    let increments = if center.len() == 2 {
        angle_increments(&betas, &center).ok()
    } else {
        None
    };
    let as_string = |r: Result<i64>| r.map_err(|e| e.to_string());
    let mut min_homotopy_pairing = f64::INFINITY;
    let mut min_homotopy_distance = f64::INFINITY;
    for (b, y) in betas.iter().zip(&ys) {
        for &t in &HOMOTOPY_KNOTS {
            let f: Vec<f64> = b.iter().zip(y).map(|(bi, yi)| (1.0 - t) * bi + t * yi).collect();
            min_homotopy_pairing = min_homotopy_pairing.min(dot(&f, y));
            let d = sub(&f, &center);
            min_homotopy_distance = min_homotopy_distance.min(dot(&d, &d).sqrt());
        }
    }
    let min_pairing = reports.iter().map(|r| r.pairing).fold(f64::INFINITY, f64::min);
    let min_shifted_pairing = reports
        .iter()
        .map(|r| r.shifted_pairing)
        .fold(f64::INFINITY, f64::min);
    let rows = reports
        .into_iter()
        .enumerate()
        .map(|(i, report)| {
            let d = sub(&report.y, &center);
            let angle = if d.len() == 2 { d[1].atan2(d[0]) } else { d[0].signum() * PI / 2.0 };
            ScanRow {
                angle,
                report,
                increment: increments.as_ref().map(|inc| inc[i]),
            }
        })
        .collect();
    Ok(SphereScan {
        rows,
        degree: as_string(boundary_degree(&betas, &center)),
        degree_about_hole: as_string(boundary_degree(&about, &origin)),
        identity_degree: as_string(boundary_degree(&ys, &center)),
        min_pairing,
        min_shifted_pairing,
        min_homotopy_pairing,
        min_homotopy_distance,
    })
}

/// CSV with header `angle,pairing,shifted_pairing,degree_increment`.
pub fn write_scan_csv(scan: &SphereScan, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "angle,pairing,shifted_pairing,degree_increment")?;
    for r in &scan.rows {
        let inc = r.increment.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(
            out,
            "{:e},{:e},{:e},{}",
            r.angle, r.report.pairing, r.report.shifted_pairing, inc
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn chi_branches() {
        assert_eq!(chi(0.5).unwrap(), 1.0);
        assert_eq!(chi(2.0).unwrap(), 0.5);
        assert_eq!(chi(1.0).unwrap(), 1.0);
        assert!(chi(-0.1).is_err());
        assert!(chi(f64::NAN).is_err());
    }

    #[test]
    fn even_field_has_zero_barycenter() {
        let g = make_grid(2, 8.0, 32).unwrap();
        let u = Field::from_fn(g, |x| (-(x[0] * x[0]) / 3.0 - x[1] * x[1] / 2.0).exp());
        let b = barycenter(&u);
        let mass: f64 = u.values().iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
        // the node at -L has no mirror partner; it carries ~e^{-21} weight here
        assert!(b.iter().all(|v| v.abs() < 1e-12 * mass), "{b:?}");
    }

    #[test]
    fn narrow_bump_barycenter() {
        let g = make_grid(2, 4.0, 256).unwrap();
        let z = [0.5, -0.25];
        let w = 0.05;
        let u = Field::from_fn(g, |x| (-((x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2)) / (2.0 * w * w)).exp());
        let m: f64 = u.values().iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
        let b = barycenter(&u);
        for a in 0..2 {
            assert!((b[a] - m * z[a]).abs() < 0.02 * m * z[a].abs(), "{b:?}");
        }
    }

    #[test]
    fn degree_examples() {
        let c = [0.0, 32.0];
        let ys = sphere_samples(&c, 16.0, 32);
        assert_eq!(boundary_degree(&ys, &c).unwrap(), 1);
        let konst = vec![vec![3.0, 1.0]; 32];
        assert_eq!(boundary_degree(&konst, &c).unwrap(), 0);
        let mut rev = ys.clone();
        rev.reverse();
        assert_eq!(boundary_degree(&rev, &c).unwrap(), -1);
        let hit = vec![vec![0.0, 32.0]; 4];
        assert!(matches!(boundary_degree(&hit, &c), Err(Error::HitsTarget(0))));
        let coarse = sphere_samples(&c, 16.0, 2);
        assert!(boundary_degree(&coarse, &c).is_err());
        let square: Vec<Vec<f64>> = sphere_samples(&[0.0, 0.0], 1.0, 4);
        // quarter turns are fine, half turns are ambiguous
        assert_eq!(boundary_degree(&square, &[0.0, 0.0]).unwrap(), 1);
        let doubled: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let t = 2.0 * 2.0 * PI * i as f64 / 8.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        assert_eq!(boundary_degree(&doubled, &[0.0, 0.0]).unwrap(), 2);
        let flip = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]];
        assert!(matches!(
            boundary_degree(&flip, &[0.0, 0.0]),
            Err(Error::UndersampledBoundary { .. })
        ));
    }

    #[test]
    fn one_dimensional_degree() {
        assert_eq!(boundary_degree(&[vec![-1.0], vec![2.0]], &[0.5]).unwrap(), 1);
        assert_eq!(boundary_degree(&[vec![2.0], vec![-1.0]], &[0.5]).unwrap(), -1);
        assert_eq!(boundary_degree(&[vec![2.0], vec![3.0]], &[0.5]).unwrap(), 0);
        assert!(boundary_degree(&[vec![0.5], vec![3.0]], &[0.5]).is_err());
    }

    #[test]
    fn scan_csv_header() {
        let scan = SphereScan {
            rows: vec![],
            degree: Ok(1),
            degree_about_hole: Ok(1),
            identity_degree: Ok(1),
            min_pairing: 1.0,
            min_shifted_pairing: 1.0,
            min_homotopy_pairing: 1.0,
            min_homotopy_distance: 1.0,
        };
        let mut buf = Vec::new();
        write_scan_csv(&scan, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "angle,pairing,shifted_pairing,degree_increment\n");
    }
}
