//! Potential families and the branch bookkeeping for `(ix)^eps`.
//!
//! The multivalued factor `(ix)^a` is made single-valued along a path by
//! carrying a continuous angle `theta = arg(ix)` and defining
//! `(ix)^a = |x|^a exp(i a theta)`. On the principal sheet `theta` lies in
//! `(-pi, pi]`, which puts the cut on the positive imaginary `x` axis.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `x^{2K} (ix)^eps`
    Analytic { k: u32 },
    /// `|x|^P (ix)^eps`, posed on the real axis only.
    NonAnalytic { p: f64 },
}

/// A member of one of the deformed potential families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub family: Family,
    pub epsilon: f64,
}

impl Deformation {
    pub fn analytic(k: u32, epsilon: f64) -> Result<Self> {
        if k < 1 {
            return domain("analytic family requires K >= 1");
        }
        if !epsilon.is_finite() {
            return domain("epsilon must be finite");
        }
        Ok(Self {
            family: Family::Analytic { k },
            epsilon,
        })
    }

    pub fn nonanalytic(p: f64, epsilon: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return domain(format!("nonanalytic family requires P > 0, got {p}"));
        }
        if !epsilon.is_finite() {
            return domain("epsilon must be finite");
        }
        Ok(Self {
            family: Family::NonAnalytic { p },
            epsilon,
        })
    }

    /// `K` for the analytic family.
    pub fn k(&self) -> Option<u32> {
        match self.family {
            Family::Analytic { k } => Some(k),
            Family::NonAnalytic { .. } => None,
        }
    }

    /// Total degree of growth: `2K + eps` or `P + eps`.
    pub fn degree(&self) -> f64 {
        match self.family {
            Family::Analytic { k } => 2.0 * k as f64 + self.epsilon,
            Family::NonAnalytic { p } => p + self.epsilon,
        }
    }

    /// True when `(ix)^eps` times the base power has no branch cut from the origin.
    pub fn is_single_valued(&self) -> bool {
        matches!(self.family, Family::Analytic { .. }) && self.epsilon.fract() == 0.0
    }

    /// Classical mode needs turning points, i.e. `eps > -2K`.
    pub fn check_classical(&self) -> Result<()> {
        match self.family {
            Family::Analytic { .. } if self.degree() > 0.0 => Ok(()),
            Family::Analytic { k } => domain(format!(
                "classical motion needs eps > -2K = {}, got {}",
                -2.0 * k as f64,
                self.epsilon
            )),
            Family::NonAnalytic { .. } => Err(crate::PtError::UnsupportedMode(
                "classical dynamics of the nonanalytic family",
            )),
        }
    }

    /// `V(x) = x^{2K} (ix)^eps = (-1)^K (ix)^{2K+eps}` on the sheet selected by `theta = arg(ix)`.
    pub fn potential(&self, x: Complex64, theta: f64) -> Complex64 {
        match self.family {
            Family::Analytic { k } => {
                let q = self.degree();
                sign_k(k) * Complex64::from_polar(x.norm().powf(q), q * theta)
            }
            Family::NonAnalytic { p } => {
                // |x|^P only makes sense on the real axis; theta = +-pi/2 there.
                Complex64::from_polar(x.norm().powf(p + self.epsilon), self.epsilon * theta)
            }
        }
    }

    /// `dV/dx` on the sheet selected by `theta`.
    pub fn force_derivative(&self, x: Complex64, theta: f64) -> Complex64 {
        match self.family {
            Family::Analytic { k } => {
                let q = self.degree();
                sign_k(k) * q * I * Complex64::from_polar(x.norm().powf(q - 1.0), (q - 1.0) * theta)
            }
            Family::NonAnalytic { p } => {
                let q = p + self.epsilon;
                let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                s * q * Complex64::from_polar(x.norm().powf(q - 1.0), self.epsilon * theta)
            }
        }
    }
}

fn sign_k(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Principal value of `arg(ix)` in `(-pi, pi]`.
pub fn principal_theta(x: Complex64) -> f64 {
    let t = (I * x).arg();
    if t <= -PI {
        t + 2.0 * PI
    } else {
        t
    }
}

/// `arg(x)` consistent with a given `theta = arg(ix)`.
pub fn arg_x_from_theta(theta: f64) -> f64 {
    theta - FRAC_PI_2
}

/// Sheet index of `theta` relative to the principal sheet `(-pi, pi]`.
pub fn sheet_index(theta: f64) -> i64 {
    ((theta + PI) / (2.0 * PI)).ceil() as i64 - 1
}

/// `|x|^a exp(i a phi)` for an explicit continuous angle `phi` of `x`.
pub fn branch_pow(r: f64, phi: f64, a: f64) -> Complex64 {
    Complex64::from_polar(r.powf(a), a * phi)
}
