//! Pinch points, ground-state asymptotics near `eps = -K`, and the isolated
//! real-spectrum points of `K >= 2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PtError, Result};
use crate::potential::Deformation;
use crate::shooting::{
    find_eigenvalue, is_real, lowest_real, scan_real, EigenvalueRecord, Method, ShootControls, Shooter,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinchPoint {
    pub level_pair: (usize, usize),
    pub epsilon_star: f64,
    pub energy_star: f64,
}

/// The pair at one `eps`: `mid = (E_lo + E_hi)/2` and `d = (E_hi - E_lo)^2`, both real.
#[derive(Debug, Clone, Copy)]
struct PairSample {
    epsilon: f64,
    mid: f64,
    d: f64,
}

fn solve_pair(def: &Deformation, mid: f64, d_guess: f64, ctl: &ShootControls) -> Option<PairSample> {
    let eps = def.epsilon;
    let real_pair = |half: f64| -> Option<PairSample> {
        let a = find_eigenvalue(def, Complex64::new(mid - half, 0.0), ctl).ok()?;
        let b = find_eigenvalue(def, Complex64::new(mid + half, 0.0), ctl).ok()?;
        let (a, b) = if a.re <= b.re { (a, b) } else { (b, a) };
        (is_real(a) && is_real(b) && (b.re - a.re) > 1e-7 * b.re.abs().max(1.0)).then(|| PairSample {
            epsilon: eps,
            mid: 0.5 * (a.re + b.re),
            d: (b.re - a.re).powi(2),
        })
    };
    let complex_pair = |half: f64| -> Option<PairSample> {
        let e = find_eigenvalue(def, Complex64::new(mid, half), ctl).ok()?;
        (!is_real(e) && (e.re - mid).abs() < 4.0 * half + 0.05).then(|| PairSample {
            epsilon: eps,
            mid: e.re,
            d: -4.0 * e.im * e.im,
        })
    };
    let half = 0.5 * d_guess.abs().sqrt().max(1e-3);
    if d_guess >= 0.0 {
        real_pair(half).or_else(|| complex_pair(half))
    } else {
        complex_pair(half).or_else(|| real_pair(half))
    }
}

/// Locate where real levels `level_pair` (indices among the real levels at the
/// upper end of `bracket`) coalesce, by regula falsi on the squared gap, which
/// passes linearly through zero at a square-root branch point.
pub fn locate_pinch(
    k: u32,
    level_pair: (usize, usize),
    bracket: (f64, f64),
    ctl: &ShootControls,
) -> Result<PinchPoint> {
    let (lo_eps, hi_eps) = bracket;
    let (n_lo, n_hi) = level_pair;
    if !(hi_eps > lo_eps) || n_hi <= n_lo {
        return Err(PtError::Bracket(format!(
            "need lo < hi and n_lo < n_hi, got {bracket:?} and {level_pair:?}"
        )));
    }
    let start_def = Deformation::analytic(k, hi_eps)?;
    let levels = lowest_real(&start_def, n_hi + 1, ctl)?;
    let (ea, eb) = (levels[n_lo], levels[n_hi]);
    let mut real = PairSample {
        epsilon: hi_eps,
        mid: 0.5 * (ea + eb),
        d: (eb - ea).powi(2),
    };
    let mut prev: Option<PairSample> = None;
    let h = (hi_eps - lo_eps) / 16.0;
    let mut complex = None;
    let mut eps = hi_eps;
    while complex.is_none() {
        eps -= h;
        if eps < lo_eps - 1e-12 {
            return Err(PtError::Bracket(format!(
                "levels {level_pair:?} stay real across [{lo_eps}, {hi_eps}]"
            )));
        }
        let (mid_g, d_g) = match prev {
            Some(p) => {
                let t = (eps - real.epsilon) / (real.epsilon - p.epsilon);
                (real.mid + (real.mid - p.mid) * t, real.d + (real.d - p.d) * t)
            }
            None => (real.mid, real.d),
        };
        let def = Deformation::analytic(k, eps)?;
        let s = solve_pair(&def, mid_g, d_g, ctl).ok_or_else(|| {
            PtError::Bracket(format!("lost levels {level_pair:?} at eps = {eps}"))
        })?;
        if s.d < 0.0 {
            complex = Some(s);
        } else {
            prev = Some(real);
            real = s;
        }
    }
    let mut neg = complex.expect("loop exits with a complex sample");
    let mut pos = real;
    // Illinois-modified regula falsi on d(eps)
    let (mut wpos, mut wneg) = (1.0, 1.0);
    let mut side = 0i8;
    for _ in 0..60 {
        if (pos.epsilon - neg.epsilon).abs() < 1e-7 {
            break;
        }
        let (dp, dn) = (wpos * pos.d, wneg * neg.d);
        let eps = pos.epsilon - dp * (neg.epsilon - pos.epsilon) / (dn - dp);
        let t = (eps - pos.epsilon) / (neg.epsilon - pos.epsilon);
        let mid_g = pos.mid + (neg.mid - pos.mid) * t;
        let d_g = pos.d + (neg.d - pos.d) * t;
        let def = Deformation::analytic(k, eps)?;
        let Some(s) = solve_pair(&def, mid_g, d_g, ctl) else {
            break;
        };
        if s.d >= 0.0 {
            pos = s;
            wpos = 1.0;
            if side == 1 {
                wneg *= 0.5;
            }
            side = 1;
        } else {
            neg = s;
            wneg = 1.0;
            if side == -1 {
                wpos *= 0.5;
            }
            side = -1;
        }
    }
    let eps_star = pos.epsilon - pos.d * (neg.epsilon - pos.epsilon) / (neg.d - pos.d);
    let t = (eps_star - pos.epsilon) / (neg.epsilon - pos.epsilon);
    Ok(PinchPoint {
        level_pair,
        epsilon_star: eps_star,
        energy_star: pos.mid + (neg.mid - pos.mid) * t,
    })
}

/// Leading small-`delta` ground-state law at `eps = -K + delta`.
pub fn ground_asymptote(k: u32, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(PtError::Domain(format!("asymptote needs 0 < delta <= 0.1, got {delta}")));
    }
    match k {
        1 => Ok((-0.75 * delta.ln()).powf(2.0 / 3.0)),
        2 => Ok(-2.0 / PI * delta.ln()),
        _ => Err(PtError::Domain(format!("asymptote known for K = 1, 2 only, got {k}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteRow {
    pub delta: f64,
    pub e_exact: f64,
    pub e_formula: f64,
    pub ratio: f64,
}

/// Real ground state at `eps = -K + delta` for each `delta`, by continuation in
/// `ln delta` from the largest value in quarter-decade steps.
pub fn boundary_ground_states(k: u32, deltas: &[f64], ctl: &ShootControls) -> Result<Vec<(f64, f64)>> {
    if deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
        return Err(PtError::Domain("deltas must lie in (0, 1)".into()));
    }
    let mut order: Vec<f64> = deltas.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();
    let Some(&first) = order.first() else {
        return Ok(Vec::new());
    };
    let def_of = |d: f64| Deformation::analytic(k, -(k as f64) + d);
    let mut e = lowest_real(&def_of(first)?, 1, ctl)?[0];
    let mut hist: Vec<(f64, f64)> = vec![(first.ln(), e)];
    let mut out = vec![(first, e)];
    for &target in &order[1..] {
        let mut ld = hist.last().expect("seeded").0;
        while ld > target.ln() + 1e-12 {
            ld = (ld - 0.25 * std::f64::consts::LN_10).max(target.ln());
            let guess = match hist.len() {
                1 => e,
                n => {
                    let (l0, e0) = hist[n - 2];
                    let (l1, e1) = hist[n - 1];
                    e1 + (e1 - e0) * (ld - l1) / (l1 - l0)
                }
            };
            let z = find_eigenvalue(&def_of(ld.exp())?, Complex64::new(guess, 0.0), ctl)?;
            if !is_real(z) {
                return Err(PtError::NoConvergence {
                    iterations: ctl.max_iter,
                    best: z,
                    residual: f64::NAN,
                });
            }
            e = z.re;
            hist.push((ld, e));
        }
        out.push((target, e));
    }
    Ok(deltas
        .iter()
        .map(|d| *out.iter().find(|(x, _)| x == d).expect("every delta solved"))
        .collect())
}

/// Smallest `delta` resolvable in double precision: the mismatch signal scales like `delta`.
pub const MIN_DELTA: f64 = 1e-7;

/// Ground state near `eps = -1` against the leading asymptotic law.
pub fn table1(deltas: &[f64], ctl: &ShootControls) -> Result<Vec<AsymptoteRow>> {
    if let Some(d) = deltas.iter().find(|&&d| d < MIN_DELTA * (1.0 - 1e-9)) {
        return Err(PtError::Precision(format!(
            "delta = {d:e} is below {MIN_DELTA:e}; needs extended precision"
        )));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d <= 0.1)) {
        return Err(PtError::Domain(format!("delta must be at most 0.1, got {d}")));
    }
    boundary_ground_states(1, deltas, ctl)?
        .into_iter()
        .map(|(delta, e_exact)| {
            let e_formula = ground_asymptote(1, delta)?;
            Ok(AsymptoteRow {
                delta,
                e_exact,
                e_formula,
                ratio: e_exact / e_formula,
            })
        })
        .collect()
}

/// `E_exact - E_formula = c1 + c2 ln(ln(1/delta))` fitted by least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteFit {
    pub k: u32,
    pub rows: Vec<AsymptoteRow>,
    pub c1: f64,
    pub c2: f64,
    pub max_residual: f64,
}

pub fn asymptote_fit(k: u32, deltas: &[f64], ctl: &ShootControls) -> Result<AsymptoteFit> {
    if deltas.len() < 3 {
        return Err(PtError::Domain("a two-parameter fit needs at least three deltas".into()));
    }
    let rows: Vec<AsymptoteRow> = boundary_ground_states(k, deltas, ctl)?
        .into_iter()
        .map(|(delta, e_exact)| {
            let e_formula = ground_asymptote(k, delta)?;
            Ok(AsymptoteRow {
                delta,
                e_exact,
                e_formula,
                ratio: e_exact / e_formula,
            })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.delta).ln().ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.e_exact - r.e_formula).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let c2 = sxy / sxx;
    let c1 = my - c2 * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - c1 - c2 * x).abs())
        .fold(0.0, f64::max);
    Ok(AsymptoteFit {
        k,
        rows,
        c1,
        c2,
        max_residual,
    })
}

/// Real levels below `e_top` together with the total number of eigenvalues in
/// the box `Re E in [-1, e_top]`, `|Im E| <= e_top/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealityCheck {
    pub epsilon: f64,
    pub e_top: f64,
    pub real_levels: Vec<f64>,
    pub zero_count: usize,
}

impl RealityCheck {
    pub fn all_real(&self) -> bool {
        self.real_levels.len() == self.zero_count
    }
}

pub fn reality_check(def: &Deformation, e_top: f64, ctl: &ShootControls) -> Result<RealityCheck> {
    let real_levels = scan_real(def, 1e-3, e_top, 0.02 * e_top.max(1.0).sqrt(), ctl)?;
    let half = 0.5 * e_top.max(2.0);
    let shooter = Shooter::new(def, Complex64::new(e_top + half, 0.0), ctl)?;
    let zero_count = shooter.count_zeros(Complex64::new(-1.0, -half), Complex64::new(e_top, half))?;
    Ok(RealityCheck {
        epsilon: def.epsilon,
        e_top,
        real_levels,
        zero_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub k: u32,
    pub epsilon: f64,
    pub spectrum: Vec<EigenvalueRecord>,
    pub check: RealityCheck,
}

/// Spectra at the negative integers `eps = -1, ..., -(K-1)`, each checked for
/// complex eigenvalues below the top computed level.
pub fn special_real_points(k: u32, n_levels: usize, ctl: &ShootControls) -> Result<Vec<SpecialPoint>> {
    if k < 2 {
        return Err(PtError::Domain(format!("special real points need K >= 2, got {k}")));
    }
    if n_levels < 1 {
        return Err(PtError::Domain("need at least one level".into()));
    }
    (1..k)
        .into_par_iter()
        .map(|m| {
            let eps = -(m as f64);
            let def = Deformation::analytic(k, eps)?;
            let levels = lowest_real(&def, n_levels + 1, ctl)?;
            let e_top = 0.5 * (levels[n_levels - 1] + levels[n_levels]);
            let check = reality_check(&def, e_top, ctl)?;
            let spectrum = levels[..n_levels]
                .iter()
                .enumerate()
                .map(|(n, &e)| EigenvalueRecord::new(eps, n, Complex64::new(e, 0.0), Method::Shooting))
                .collect();
            Ok(SpecialPoint {
                k,
                epsilon: eps,
                spectrum,
                check,
            })
        })
        .collect()
}

/// Level-by-level gap between the `K = 2, eps = -1` and `K = 1, eps = 1` spectra.
pub fn cross_identity(n_levels: usize, ctl: &ShootControls) -> Result<Vec<(f64, f64)>> {
    let a = lowest_real(&Deformation::analytic(2, -1.0)?, n_levels, ctl)?;
    let b = lowest_real(&Deformation::analytic(1, 1.0)?, n_levels, ctl)?;
    Ok(a.into_iter().zip(b).collect())
}
