#![allow(dead_code)]

use halfspace_core::geometry::{build_domain, DomainMask};
use halfspace_core::grid::make_grid;
use halfspace_core::{Field, GridSpec, ProblemParams};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sum of three Gaussians with random centres, widths and signed amplitudes,
/// kept well inside the box so the periodic and whole-space pictures agree.
pub fn smooth_field(spec: GridSpec, rng: &mut ChaCha8Rng) -> Field {
    let l = spec.half_extent();
    let dim = spec.dim();
    let bumps: Vec<(Vec<f64>, f64, f64)> = (0..3)
        .map(|_| {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.2 * l..0.2 * l)).collect();
            let w = rng.gen_range(0.12 * l..0.25 * l);
            let a = rng.gen_range(-1.0..1.0);
            (c, w, a)
        })
        .collect();
    Field::from_fn(spec, |x| {
        bumps
            .iter()
            .map(|(c, w, a)| {
                let r2: f64 = (0..dim).map(|k| (x[k] - c[k]).powi(2)).sum();
                a * (-r2 / (w * w)).exp()
            })
            .sum()
    })
}

/// Smooth random field supported inside `Ω_r`.
pub fn masked_field(mask: &DomainMask, rng: &mut ChaCha8Rng) -> Field {
    let spec = *mask.spec();
    let l = spec.half_extent();
    let dim = spec.dim();
    let c: Vec<f64> = (0..dim)
        .map(|k| if k + 1 == dim { rng.gen_range(0.2 * l..0.6 * l) } else { rng.gen_range(-0.4 * l..0.4 * l) })
        .collect();
    let w = rng.gen_range(0.05 * l..0.12 * l);
    let a = rng.gen_range(0.5..2.0);
    let f = Field::from_fn(spec, |x| {
        let r2: f64 = (0..dim).map(|k| (x[k] - c[k]).powi(2)).sum();
        a * (-r2 / (w * w)).exp() * (1.0 + 0.3 * (x[0] / w).sin())
    });
    mask.apply(&f)
}

/// Small planar geometry: `L = 8`, `M = 32`, hole of radius ½ at height 4.
pub fn small_planar() -> (ProblemParams, GridSpec, DomainMask) {
    let spec = make_grid(2, 8.0, 32).unwrap();
    let params = ProblemParams::planar(0.5, 3.0, 0.5, 4.0);
    let mask = build_domain(&spec, &params).unwrap();
    (params, spec, mask)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
