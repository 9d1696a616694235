//! Special functions behind the fractional-Sobolev constants.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// `C(N,s) = s 4^s Γ(N/2 + s) / (π^{N/2} Γ(1 - s))`.
///
/// With this constant `∫ u (-Δ)^s u = C(N,s)/2 · ∬ |u(x)-u(z)|² / |x-z|^{N+2s}`.
pub fn fractional_constant(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    s * 4f64.powf(s) * gamma(n / 2.0 + s) / (PI.powf(n / 2.0) * gamma(1.0 - s))
}

// B_2, B_4, ..., B_16
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta `Σ_{n≥0} (n + a)^{-σ}` for `a > 0` (Euler–Maclaurin).
///
/// For `σ < 1` this is the analytic continuation; `σ > -12` keeps the
/// truncated remainder accurate.
pub fn hurwitz_zeta(sigma: f64, a: f64) -> f64 {
    assert!(sigma != 1.0 && sigma > -12.0 && a > 0.0, "hurwitz_zeta: sigma = {sigma}, a = {a}");
    const K: usize = 24;
    let head: f64 = (0..K).map(|n| (n as f64 + a).powf(-sigma)).sum();
    let x = K as f64 + a;
    let mut tail = x.powf(1.0 - sigma) / (sigma - 1.0) + 0.5 * x.powf(-sigma);
    // rising factorial σ(σ+1)...(σ+2j-2) / (2j)!
    let mut coeff = sigma / 2.0;
    let mut power = x.powf(-sigma - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        tail += b * coeff * power;
        let k = 2.0 * (j as f64 + 1.0);
        coeff *= (sigma + k - 1.0) * (sigma + k) / ((k + 1.0) * (k + 2.0));
        power /= x * x;
    }
    head + tail
}

pub fn riemann_zeta(sigma: f64) -> f64 {
    hurwitz_zeta(sigma, 1.0)
}

/// Dirichlet beta `Σ_{n≥0} (-1)^n (2n+1)^{-σ}`.
pub fn dirichlet_beta(sigma: f64) -> f64 {
    4f64.powf(-sigma) * (hurwitz_zeta(sigma, 0.25) - hurwitz_zeta(sigma, 0.75))
}

/// Epstein zeta of the integer lattice, `Σ_{n ∈ Z^N \ 0} |n|^{-σ}` (continued
/// analytically below `σ = N`), `N ∈ {1,2}`.
pub fn epstein_zeta(dim: usize, sigma: f64) -> f64 {
    match dim {
        1 => 2.0 * riemann_zeta(sigma),
        2 => 4.0 * riemann_zeta(sigma / 2.0) * dirichlet_beta(sigma / 2.0),
        _ => panic!("epstein_zeta supports dim 1 or 2"),
    }
}

/// `Σ_{n ∈ Z^N \ 0} |n|^{-(N + 2s)}`.
pub fn lattice_sum(dim: usize, s: f64) -> f64 {
    epstein_zeta(dim, dim as f64 + 2.0 * s)
}
