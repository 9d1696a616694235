use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::Reduction;

/// Problem data for `(-Δ)^s u + u = |u|^{p-2} u` on the half-space with a hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    /// Hole radius.
    pub rho: f64,
    /// Height of the hole centre above the boundary hyperplane.
    pub r: f64,
    /// Tangential coordinates of the hole centre (`dim - 1` entries).
    pub a: Vec<f64>,
    pub tol_residual: f64,
    pub tol_constraint: f64,
    pub max_iters: usize,
    pub deterministic_reduction: bool,
}

impl ProblemParams {
    /// Critical exponent `2N / (N - 2s)`; infinite when `N = 2s`.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.dim as f64;
        if n <= 2.0 * self.s {
            f64::INFINITY
        } else {
            2.0 * n / (n - 2.0 * self.s)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(1..=2).contains(&self.dim) {
            return bad(format!("dim must be 1 or 2, got {}", self.dim));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("s must lie in (0,1), got {}", self.s));
        }
        // N = 2s (the s = 1/2 line in one dimension) is admitted with an infinite
        // critical exponent.
        if (self.dim as f64) < 2.0 * self.s {
            return bad(format!(
                "need N >= 2s, got N = {} and s = {}",
                self.dim, self.s
            ));
        }
        if !(self.p > 2.0) {
            return bad(format!("p must exceed 2, got {}", self.p));
        }
        let crit = self.critical_exponent();
        if !(self.p < crit) {
            return bad(format!(
                "p must be below the critical exponent 2N/(N-2s) = {crit}, got {}",
                self.p
            ));
        }
        if !(self.rho > 0.0) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.r > self.rho) {
            return bad(format!(
                "hole must sit inside the half-space: need r > rho, got r = {} and rho = {}",
                self.r, self.rho
            ));
        }
        if self.a.len() != self.dim - 1 {
            return bad(format!(
                "a must have {} entries, got {}",
                self.dim - 1,
                self.a.len()
            ));
        }
        if !(self.tol_residual > 0.0 && self.tol_constraint > 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    /// Hole centre `a_r = (a, r)`.
    pub fn hole_center(&self) -> Vec<f64> {
        let mut c = self.a.clone();
        c.push(self.r);
        c
    }

    pub fn reduction(&self) -> Reduction {
        if self.deterministic_reduction {
            Reduction::Deterministic
        } else {
            Reduction::Parallel
        }
    }

    /// Default 2D configuration used by the campaigns.
    pub fn planar(s: f64, p: f64, rho: f64, r: f64) -> Self {
        Self {
            dim: 2,
            s,
            p,
            rho,
            r,
            a: vec![0.0],
            tol_residual: 1e-5,
            tol_constraint: 1e-8,
            max_iters: 20_000,
            deterministic_reduction: true,
        }
    }
}
