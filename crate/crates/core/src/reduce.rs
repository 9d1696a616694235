//! Summation policy shared by every whole-field reduction.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{translate, Field};

/// How large sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Fixed pairwise tree over a canonical rotation of the field, so results are
    /// bit-identical across reruns and under whole-cell translation.
    #[default]
    Deterministic,
    /// Free parallel reduction.
    Parallel,
}

const PAIRWISE_LEAF: usize = 32;

/// Pairwise (cascade) summation with a fixed split tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sum of `f(i, x_i)` under the given policy.
pub fn sum_map(xs: &[f64], reduction: Reduction, f: impl Fn(usize, f64) -> f64 + Sync) -> f64 {
    match reduction {
        Reduction::Deterministic => {
            let terms: Vec<f64> = xs.iter().enumerate().map(|(i, &x)| f(i, x)).collect();
            pairwise_sum(&terms)
        }
        Reduction::Parallel => xs.par_iter().enumerate().map(|(i, &x)| f(i, x)).sum(),
    }
}

/// Sum of already-computed terms under the given policy.
pub fn sum(xs: &[f64], reduction: Reduction) -> f64 {
    match reduction {
        Reduction::Deterministic => pairwise_sum(xs),
        Reduction::Parallel => xs.par_iter().sum(),
    }
}

/// Canonical representative of the translation orbit of `u`.
///
/// Among the rotations that bring a maximal sample to index 0, picks the one whose
/// sample array is lexicographically smallest. Translates of `u` therefore map to
/// the same array.
pub fn canonical_rotation(u: &Field) -> Cow<'_, Field> {
    let values = u.values();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let candidates: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == max)
        .map(|(i, _)| i)
        .collect();
    if candidates.len() == values.len() {
        return Cow::Borrowed(u);
    }
    let spec = u.spec();
    let shift_for = |flat: usize| -> [i64; 2] {
        let idx = spec.unflatten(flat);
        [-(idx[0] as i64), -(idx[1] as i64)]
    };
    let mut best = translate(u, &shift_for(candidates[0]));
    for &c in &candidates[1..] {
        let cand = translate(u, &shift_for(c));
        if lexicographic_less(cand.values(), best.values()) {
            best = cand;
        }
    }
    if best.values() == values {
        Cow::Borrowed(u)
    } else {
        Cow::Owned(best)
    }
}

fn lexicographic_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x.to_bits() != y.to_bits() {
            return x.total_cmp(y).is_lt();
        }
    }
    false
}

/// Applies the canonicalization only in deterministic mode.
pub fn prepare(u: &Field, reduction: Reduction) -> Cow<'_, Field> {
    match reduction {
        Reduction::Deterministic => canonical_rotation(u),
        Reduction::Parallel => Cow::Borrowed(u),
    }
}
