//! FFT plumbing on the periodic box.
//!
//! Wavenumbers are `k = π m / L` with `m ∈ [-M/2, M/2)` per axis, in the usual
//! FFT ordering. Transforms are unnormalized forward, `1/M^N` on the inverse.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Field, GridSpec};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static SYMBOLS: RefCell<HashMap<(usize, usize, u64, u64), Rc<Vec<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

fn transform(spec: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let m = spec.points_per_dim();
    let fft = plan(m, inverse);
    match spec.dim() {
        1 => fft.process(data),
        _ => {
            // rows are contiguous
            fft.process(data);
            let mut column = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..m {
                for i in 0..m {
                    column[i] = data[i * m + j];
                }
                fft.process(&mut column);
                for i in 0..m {
                    data[i * m + j] = column[i];
                }
            }
        }
    }
}

/// Unnormalized forward DFT of a real field.
pub fn forward(u: &Field) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(u.spec(), &mut data, false);
    data
}

/// Inverse DFT, scaled by `1/M^N`, keeping the real part.
pub fn inverse_real(spec: &GridSpec, mut data: Vec<Complex64>) -> Field {
    transform(spec, &mut data, true);
    let scale = 1.0 / spec.len() as f64;
    Field::from_raw(*spec, data.iter().map(|c| c.re * scale).collect())
}

/// Signed mode number of FFT index `j` on an axis with `m` points.
pub fn mode_number(j: usize, m: usize) -> i64 {
    if j < m / 2 {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

/// `|k|^2` for every mode, in FFT ordering.
pub fn wavenumber_sq(spec: &GridSpec) -> Vec<f64> {
    let m = spec.points_per_dim();
    let unit = std::f64::consts::PI / spec.half_extent();
    let k = |j: usize| mode_number(j, m) as f64 * unit;
    match spec.dim() {
        1 => (0..m).map(|j| k(j).powi(2)).collect(),
        _ => (0..m * m)
            .map(|f| k(f / m).powi(2) + k(f % m).powi(2))
            .collect(),
    }
}

/// The fractional symbol `|k|^{2s}` (zero on the zero mode), cached per thread.
pub fn fractional_symbol(spec: &GridSpec, s: f64) -> Rc<Vec<f64>> {
    let key = (
        spec.dim(),
        spec.points_per_dim(),
        spec.half_extent().to_bits(),
        s.to_bits(),
    );
    SYMBOLS.with(|cache| {
        cache
            .borrow_mut()
            .entry(key)
            .or_insert_with(|| {
                Rc::new(
                    wavenumber_sq(spec)
                        .into_iter()
                        .map(|k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) })
                        .collect(),
                )
            })
            .clone()
    })
}

/// Applies a real Fourier multiplier given per mode.
pub fn apply_multiplier(u: &Field, multiplier: &[f64]) -> Field {
    let mut hat = forward(u);
    for (c, &w) in hat.iter_mut().zip(multiplier) {
        *c *= w;
    }
    inverse_real(u.spec(), hat)
}
