//! Complex WKB quantization for `x^{2K}(ix)^eps` and `|x|^{2+eps}`.
//!
//! The phase integral runs along the two rays `x_- -> 0 -> x_+` on which
//! `E - V` is real and positive, so it is real for `eps >= 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PtError, Result};
use crate::potential::{Deformation, Family};
use crate::quad::{integrate, QuadOptions};
use crate::special::{gamma, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WkbOrder {
    Leading,
    Nlo,
}

impl WkbOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            WkbOrder::Leading => "leading",
            WkbOrder::Nlo => "nlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WkbFamily {
    AnalyticK1,
    AnalyticGeneralK,
    AbsPotential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WkbEstimate {
    pub n: usize,
    pub epsilon: f64,
    pub energy: f64,
    pub order: WkbOrder,
    pub family: WkbFamily,
}

fn broken_phase(epsilon: f64) -> Result<()> {
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(PtError::Domain(format!(
            "WKB path between the turning points crosses the cut for eps < 0 (eps = {epsilon})"
        )));
    }
    Ok(())
}

fn positive_energy(energy: f64) -> Result<()> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(PtError::Domain(format!("WKB needs E > 0, got {energy}")));
    }
    Ok(())
}

/// Turning points continuing from `-+E^{1/2}` as eps leaves zero (`K = 1`).
pub fn wkb_turning_pair(energy: f64, epsilon: f64) -> Result<(Complex64, Complex64)> {
    positive_energy(energy)?;
    let q = 2.0 + epsilon;
    if q <= 0.0 {
        return Err(PtError::Domain(format!("no turning points for eps <= -2, got {epsilon}")));
    }
    let r = energy.powf(1.0 / q);
    let d = 4.0 + 2.0 * epsilon;
    Ok((
        Complex64::from_polar(r, PI * (4.0 + 3.0 * epsilon) / d),
        Complex64::from_polar(r, -PI * epsilon / d),
    ))
}

/// Turning points for general `K`: `arg(ix) = -+K pi/(2K + eps)`.
/// Returns `((x_-, theta_-), (x_+, theta_+))`.
pub fn turning_rays(def: &Deformation, energy: f64) -> Result<((Complex64, f64), (Complex64, f64))> {
    let k = analytic_k(def)?;
    positive_energy(energy)?;
    let q = def.degree();
    if q <= 0.0 {
        return Err(PtError::Domain(format!("no turning points for 2K + eps <= 0, got {q}")));
    }
    let r = energy.powf(1.0 / q);
    let t = k as f64 * PI / q;
    let at = |theta: f64| (Complex64::from_polar(r, theta - 0.5 * PI), theta);
    Ok((at(-t), at(t)))
}

fn analytic_k(def: &Deformation) -> Result<u32> {
    match def.family {
        Family::Analytic { k } => Ok(k),
        Family::NonAnalytic { .. } => Err(PtError::UnsupportedMode("WKB phase integral of the nonanalytic family")),
    }
}

/// `Gamma((8+3e)/(4+2e)) sqrt(pi) (n+1/2) / Gamma((3+e)/(2+e))`, the common core of the closed forms.
fn leading_core(n: usize, epsilon: f64) -> f64 {
    let d = 4.0 + 2.0 * epsilon;
    (ln_gamma((8.0 + 3.0 * epsilon) / d) - ln_gamma((3.0 + epsilon) / (2.0 + epsilon))).exp()
        * PI.sqrt()
        * (n as f64 + 0.5)
}

fn leading_power(epsilon: f64) -> f64 {
    (4.0 + 2.0 * epsilon) / (4.0 + epsilon)
}

/// Leading-order levels of `x^2 (ix)^eps`.
pub fn wkb_leading(n: usize, epsilon: f64) -> Result<f64> {
    broken_phase(epsilon)?;
    if epsilon == 0.0 {
        return Ok(2.0 * n as f64 + 1.0);
    }
    let s = (PI / (2.0 + epsilon)).sin();
    Ok((leading_core(n, epsilon) / s).powf(leading_power(epsilon)))
}

/// Next-to-leading-order levels of `x^2 (ix)^eps`.
pub fn wkb_nlo(n: usize, epsilon: f64) -> Result<f64> {
    if n < 1 {
        return Err(PtError::Domain("NLO WKB is a large-n expansion; needs n >= 1".into()));
    }
    let lo = wkb_leading(n, epsilon)?;
    let m = n as f64 + 0.5;
    let corr = (2.0 + epsilon) * (1.0 + epsilon) * (2.0 * PI / (2.0 + epsilon)).sin()
        / (6.0 * PI * m * m * (4.0 + epsilon).powi(2));
    Ok(lo * (1.0 + corr))
}

/// Levels of the real-line potential `|x|^{2+eps}`.
pub fn abs_wkb(n: usize, epsilon: f64, order: WkbOrder) -> Result<f64> {
    if !(epsilon > -2.0) || !epsilon.is_finite() {
        return Err(PtError::Domain(format!("|x|^(2+eps) WKB needs eps > -2, got {epsilon}")));
    }
    let lo = if epsilon == 0.0 {
        2.0 * n as f64 + 1.0
    } else {
        leading_core(n, epsilon).powf(leading_power(epsilon))
    };
    Ok(match order {
        WkbOrder::Leading => lo,
        WkbOrder::Nlo => {
            let m = n as f64 + 0.5;
            let cot = 1.0 / (PI / (2.0 + epsilon)).tan();
            let cot = if epsilon == 0.0 { 0.0 } else { cot };
            lo * (1.0 + (2.0 + epsilon) * (1.0 + epsilon) * cot / (3.0 * PI * m * m * (4.0 + epsilon).powi(2)))
        }
    })
}

/// Integrand of the phase integral at ray parameter `s` in `[0, 1]`:
/// `x_+ sqrt(E - V(s x_+)) - x_- sqrt(E - V(s x_-))`.
pub fn phase_integrand(def: &Deformation, energy: f64, s: f64) -> Result<Complex64> {
    let ((xm, tm), (xp, tp)) = turning_rays(def, energy)?;
    Ok(ray_term(def, energy, xp, tp, s) - ray_term(def, energy, xm, tm, s))
}

fn ray_term(def: &Deformation, energy: f64, x_turn: Complex64, theta: f64, s: f64) -> Complex64 {
    let x = s * x_turn;
    x_turn * (energy - def.potential(x, theta)).sqrt()
}

/// The pair `(leading, correction)` whose sum is the phase integral at the requested order.
fn phase_parts(def: &Deformation, energy: f64, order: WkbOrder) -> Result<(f64, f64)> {
    let k = analytic_k(def)?;
    broken_phase(def.epsilon)?;
    let ((xm, tm), (xp, tp)) = turning_rays(def, energy)?;
    let opts = QuadOptions::default();
    // s = 1 - u^2 removes the square-root endpoint at the turning point
    let part = |pick: fn(Complex64) -> f64| {
        integrate(
            |u: f64| {
                let s = 1.0 - u * u;
                let z = ray_term(def, energy, xp, tp, s) - ray_term(def, energy, xm, tm, s);
                2.0 * u * pick(z)
            },
            0.0,
            1.0,
            opts,
        )
    };
    let re = part(|z| z.re)?;
    let im = part(|z| z.im)?;
    if im.value.abs() > 1e-9 * re.value.abs().max(1.0) {
        return Err(PtError::Domain(format!(
            "phase integral is not real along the rays (Im = {:.3e})",
            im.value
        )));
    }
    let corr = match order {
        WkbOrder::Leading => 0.0,
        WkbOrder::Nlo if k == 1 => nlo_correction(energy, def.epsilon),
        WkbOrder::Nlo => return Err(PtError::UnsupportedMode("NLO phase integral for K != 1")),
    };
    Ok((re.value, corr))
}

/// `E^{-a} (1+e)(2+e)/24 sin(pi/q) FP int_0^1 s^e (1 - s^q)^{-3/2} ds`, `a = (4+e)/(2q)`,
/// with the finite part `B((1+e)/q, -1/2)/q` in closed form.
fn nlo_correction(energy: f64, epsilon: f64) -> f64 {
    let q = 2.0 + epsilon;
    let a = (4.0 + epsilon) / (2.0 * q);
    energy.powf(-a) * (1.0 + epsilon) * (2.0 + epsilon) / 24.0 * (PI / q).sin() * nlo_finite_part(epsilon)
}

/// Finite part of `int_0^1 s^e (1 - s^{2+e})^{-3/2} ds`.
pub fn nlo_finite_part(epsilon: f64) -> f64 {
    let q = 2.0 + epsilon;
    let z = epsilon / (2.0 * q);
    // 1/Gamma(z) = z/Gamma(1+z) stays finite at eps = 0
    gamma((1.0 + epsilon) / q) * (-2.0 * PI.sqrt()) * z / (q * gamma(1.0 + z))
}

/// Phase integral `int_{x_-}^{x_+} sqrt(E - V) dx` (plus the second-order term for `order = Nlo`, `K = 1`).
pub fn phase_integral(def: &Deformation, energy: f64, order: WkbOrder) -> Result<f64> {
    let (lo, corr) = phase_parts(def, energy, order)?;
    Ok(lo + corr)
}

/// Solve `phase_integral(E) = (n + 1/2) pi` by Newton iteration in `ln E`.
///
/// The leading part scales as `E^a` and the correction as `E^{-a}`, which gives the derivative exactly.
pub fn quantize(def: &Deformation, n: usize, order: WkbOrder) -> Result<WkbEstimate> {
    let k = analytic_k(def)?;
    broken_phase(def.epsilon)?;
    let q = def.degree();
    let a = 0.5 + 1.0 / q;
    let target = (n as f64 + 0.5) * PI;
    let mut ln_e = 0.0;
    let (lo1, _) = phase_parts(def, 1.0, WkbOrder::Leading)?;
    ln_e += (target / lo1).ln() / a;
    for _ in 0..50 {
        let (lo, corr) = phase_parts(def, ln_e.exp(), order)?;
        let step = (lo + corr - target) / (a * (lo - corr));
        ln_e -= step;
        if step.abs() < 1e-14 {
            return Ok(WkbEstimate {
                n,
                epsilon: def.epsilon,
                energy: ln_e.exp(),
                order,
                family: if k == 1 {
                    WkbFamily::AnalyticK1
                } else {
                    WkbFamily::AnalyticGeneralK
                },
            });
        }
    }
    Err(PtError::NoConvergence {
        iterations: 50,
        best: Complex64::new(ln_e.exp(), 0.0),
        residual: f64::NAN,
    })
}

/// Closed-form estimate for `K = 1`.
pub fn closed_form(n: usize, epsilon: f64, order: WkbOrder) -> Result<WkbEstimate> {
    let energy = match order {
        WkbOrder::Leading => wkb_leading(n, epsilon)?,
        WkbOrder::Nlo => wkb_nlo(n, epsilon)?,
    };
    Ok(WkbEstimate {
        n,
        epsilon,
        energy,
        order,
        family: WkbFamily::AnalyticK1,
    })
}
