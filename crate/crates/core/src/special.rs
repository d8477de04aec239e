//! Gamma-function helpers and normalized Hermite functions.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `int_0^1 (1 - s^q)^{1/2} ds = Gamma(1 + 1/q) Gamma(3/2) / Gamma(3/2 + 1/q)`.
pub fn sqrt_beta_integral(q: f64) -> f64 {
    (ln_gamma(1.0 + 1.0 / q) + ln_gamma(1.5) - ln_gamma(1.5 + 1.0 / q)).exp()
}

/// Values `psi_0(x), ..., psi_n(x)` of the harmonic-oscillator eigenfunctions
/// `pi^{-1/4} (2^n n!)^{-1/2} H_n(x) exp(-x^2/2)`.
pub fn hermite_functions(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if n == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for j in 1..n {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * x * out[j] - (jf / (jf + 1.0)).sqrt() * out[j - 1];
        out.push(next);
    }
    out
}

/// Radius beyond which `psi_n` is below ~`exp(-40)`.
pub fn hermite_support(n: usize) -> f64 {
    (2.0 * n as f64 + 1.0).sqrt() + 9.5
}
