//! Continuation of eigenvalues across an `eps` grid, following real levels
//! through pinch points into complex-conjugate pairs and back.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::potential::{Deformation, Family};
use crate::shooting::{find_eigenvalue, is_real, lowest_real, EigenvalueRecord, Method, ShootControls};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepControls {
    pub shoot: ShootControls,
    /// Relative gap below which two real levels are treated as merging.
    pub merge_tol: f64,
    /// `eps` at which the whole tracked spectrum is real and the march starts.
    pub start_epsilon: f64,
}

impl Default for SweepControls {
    fn default() -> Self {
        Self {
            shoot: ShootControls::default(),
            merge_tol: 1e-4,
            start_epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinchKind {
    /// Two real levels leave the real axis as a conjugate pair.
    Merge,
    /// A conjugate pair returns to the real axis.
    Reemerge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinchAnnotation {
    pub level_pair: (usize, usize),
    pub epsilon_star: f64,
    pub energy_star: f64,
    pub kind: PinchKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: Family,
    pub n_levels: usize,
    pub grid: Vec<f64>,
    /// Ordered by grid index, then level.
    pub records: Vec<EigenvalueRecord>,
    pub pinches: Vec<PinchAnnotation>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn at(&self, epsilon: f64) -> impl Iterator<Item = &EigenvalueRecord> {
        self.records.iter().filter(move |r| r.epsilon == epsilon)
    }

    pub fn level(&self, n: usize) -> impl Iterator<Item = &EigenvalueRecord> {
        self.records.iter().filter(move |r| r.level == n)
    }
}

#[derive(Debug, Clone, Copy)]
struct Level {
    energy: Complex64,
    /// Index of the conjugate partner while the level is complex.
    partner: Option<usize>,
    lost: bool,
}

#[derive(Debug, Clone)]
struct State {
    epsilon: f64,
    levels: Vec<Level>,
}

struct Chain {
    states: Vec<State>,
    pinches: Vec<PinchAnnotation>,
    warnings: Vec<String>,
}

fn deformation(family: Family, epsilon: f64) -> Result<Deformation> {
    match family {
        Family::Analytic { k } => Deformation::analytic(k, epsilon),
        Family::NonAnalytic { p } => Deformation::nonanalytic(p, epsilon),
    }
}

/// Extra levels tracked above the requested ones so the top level's partner is known.
const GUARD_LEVELS: usize = 2;
const GUARD_TAG: &str = "(guard)";

/// `(E_b - E_a)^2`, analytic through a coalescence and linear in `eps` near it.
fn gap_sq(a: Complex64, b: Complex64) -> f64 {
    ((b - a) * (b - a)).re
}

/// Zero of the line through `(x0, y0)` and `(x1, y1)`.
fn linear_root(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    x0 - y0 * (x1 - x0) / (y1 - y0)
}

/// Track `n_levels` eigenvalues across `grid` (monotone).
///
/// The march starts at the grid point nearest `start_epsilon`, where the lowest
/// `n_levels` eigenvalues are found by a real scan, and proceeds outward in
/// both directions with linear predictors.
pub fn sweep(family: Family, grid: &[f64], n_levels: usize, controls: &SweepControls) -> Result<SweepResult> {
    if n_levels < 1 || grid.is_empty() {
        return domain("sweep needs n_levels >= 1 and a nonempty grid");
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return domain("sweep grid must be strictly monotone");
    }
    let i0 = grid
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - controls.start_epsilon)
                .abs()
                .total_cmp(&(b.1 - controls.start_epsilon).abs())
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let def0 = deformation(family, grid[i0])?;
    let start = State {
        epsilon: grid[i0],
        levels: lowest_real(&def0, n_levels + GUARD_LEVELS, &controls.shoot)?
            .into_iter()
            .map(|e| Level {
                energy: Complex64::new(e, 0.0),
                partner: None,
                lost: false,
            })
            .collect(),
    };
    let forward: Vec<f64> = grid[i0 + 1..].to_vec();
    let backward: Vec<f64> = grid[..i0].iter().rev().copied().collect();
    let (fw, bw) = rayon::join(
        || march(family, start.clone(), &forward, controls),
        || march(family, start.clone(), &backward, controls),
    );
    let (fw, bw) = (fw?, bw?);
    let mut states: Vec<&State> = bw.states.iter().skip(1).rev().collect();
    states.extend(fw.states.iter());
    let mut records = Vec::new();
    for st in &states {
        for (n, lv) in st.levels.iter().enumerate().take(n_levels) {
            if !lv.lost {
                records.push(EigenvalueRecord::new(st.epsilon, n, lv.energy, Method::Shooting));
            }
        }
    }
    let mut pinches: Vec<PinchAnnotation> = bw.pinches;
    pinches.extend(fw.pinches);
    pinches.retain(|p| p.level_pair.0 < n_levels);
    pinches.sort_by(|a, b| a.epsilon_star.total_cmp(&b.epsilon_star));
    let mut warnings = bw.warnings;
    warnings.extend(fw.warnings);
    warnings.retain(|w| !w.contains(GUARD_TAG));
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(SweepResult {
        family,
        n_levels,
        grid: grid.to_vec(),
        records,
        pinches,
        warnings,
    })
}

fn march(family: Family, start: State, path: &[f64], controls: &SweepControls) -> Result<Chain> {
    let mut chain = Chain {
        states: vec![start],
        pinches: Vec::new(),
        warnings: Vec::new(),
    };
    for &eps in path {
        let next = step(family, &chain.states, eps, controls, &mut chain.pinches, &mut chain.warnings)?;
        chain.states.push(next);
    }
    Ok(chain)
}

fn predict(states: &[State], n: usize, eps: f64) -> Complex64 {
    let cur = &states[states.len() - 1];
    let e1 = cur.levels[n].energy;
    if states.len() < 2 {
        return e1;
    }
    let prev = &states[states.len() - 2];
    let same_kind = prev.levels[n].partner == cur.levels[n].partner && !prev.levels[n].lost && !cur.levels[n].lost;
    if !same_kind {
        return e1;
    }
    let t = (eps - cur.epsilon) / (cur.epsilon - prev.epsilon);
    e1 + (e1 - prev.levels[n].energy) * t
}

/// Linear extrapolation of `(E_b - E_a)^2` to `eps` from the last two states.
fn gap_sq_predict(states: &[State], a: usize, b: usize, eps: f64) -> f64 {
    let cur = &states[states.len() - 1];
    let d1 = gap_sq(cur.levels[a].energy, cur.levels[b].energy);
    if states.len() < 2 {
        return d1;
    }
    let prev = &states[states.len() - 2];
    if prev.levels[a].lost || prev.levels[b].lost || cur.levels[a].lost || cur.levels[b].lost {
        return d1;
    }
    let d0 = gap_sq(prev.levels[a].energy, prev.levels[b].energy);
    let t = (eps - cur.epsilon) / (cur.epsilon - prev.epsilon);
    d1 + (d1 - d0) * t
}

fn step(
    family: Family,
    states: &[State],
    eps: f64,
    controls: &SweepControls,
    pinches: &mut Vec<PinchAnnotation>,
    warnings: &mut Vec<String>,
) -> Result<State> {
    let def = deformation(family, eps)?;
    let ctl = &controls.shoot;
    let cur = &states[states.len() - 1];
    let n = cur.levels.len();
    let preds: Vec<Complex64> = (0..n).map(|i| predict(states, i, eps)).collect();

    // real levels and the upper member of each pair are solved independently
    let leaders: Vec<usize> = (0..n)
        .filter(|&i| match cur.levels[i].partner {
            None => true,
            Some(p) => cur.levels[i].energy.im > 0.0 || (cur.levels[i].energy.im == 0.0 && i < p),
        })
        .collect();
    let solved: Vec<(usize, Option<Complex64>)> = leaders
        .par_iter()
        .map(|&i| (i, find_eigenvalue(&def, preds[i], ctl).ok()))
        .collect();
    let mut next: Vec<Level> = cur.levels.clone();
    let mut fresh = vec![None; n];
    for (i, e) in solved {
        fresh[i] = e;
    }

    // pairs: follow the upper member, test for re-emergence
    for i in 0..n {
        let Some(p) = cur.levels[i].partner else { continue };
        if !leaders.contains(&i) {
            continue;
        }
        let old = cur.levels[i].energy;
        let d_old = gap_sq(old, old.conj());
        let d_pred = gap_sq_predict(states, i, p, eps);
        let got = fresh[i].filter(|e| !is_real(*e) && (e - preds[i]).norm() < 0.5 * old.im.abs().max(0.1) + 0.5);
        match got {
            Some(e) if d_pred < 0.0 => {
                let e = if e.im > 0.0 { e } else { e.conj() };
                next[i] = Level { energy: e, partner: Some(p), lost: false };
                next[p] = Level { energy: e.conj(), partner: Some(i), lost: false };
            }
            _ => {
                let half = old.im.abs().max(1e-3);
                let lo = find_eigenvalue(&def, Complex64::new(old.re - half, 0.0), ctl).ok();
                let hi = find_eigenvalue(&def, Complex64::new(old.re + half, 0.0), ctl).ok();
                match (lo, hi) {
                    (Some(a), Some(b))
                        if is_real(a) && is_real(b) && (b.re - a.re) > controls.merge_tol * a.re.abs().max(1.0) =>
                    {
                        let d_new = gap_sq(a, b);
                        let (a_idx, b_idx) = (i.min(p), i.max(p));
                        next[a_idx] = Level { energy: Complex64::new(a.re, 0.0), partner: None, lost: false };
                        next[b_idx] = Level { energy: Complex64::new(b.re, 0.0), partner: None, lost: false };
                        pinches.push(PinchAnnotation {
                            level_pair: (a_idx, b_idx),
                            epsilon_star: linear_root(cur.epsilon, d_old, eps, d_new),
                            energy_star: 0.5 * (old.re + 0.5 * (a.re + b.re)),
                            kind: PinchKind::Reemerge,
                        });
                    }
                    _ => match fresh[i] {
                        Some(e) if !is_real(e) => {
                            let e = if e.im > 0.0 { e } else { e.conj() };
                            next[i] = Level { energy: e, partner: Some(p), lost: false };
                            next[p] = Level { energy: e.conj(), partner: Some(i), lost: false };
                        }
                        _ => {
                            let tag = if i.max(p) >= n - GUARD_LEVELS { GUARD_TAG } else { "" };
                            warnings.push(format!("lost pair ({i}, {p}) at eps = {eps} {tag}"));
                            next[i].lost = true;
                            next[p].lost = true;
                        }
                    },
                }
            }
        }
    }

    // real levels: accept, then look for merging neighbours
    let mut real_idx: Vec<usize> = (0..n).filter(|&i| cur.levels[i].partner.is_none()).collect();
    for &i in &real_idx {
        next[i] = match fresh[i] {
            Some(e) if is_real(e) => Level { energy: Complex64::new(e.re, 0.0), partner: None, lost: false },
            _ => Level { energy: cur.levels[i].energy, partner: None, lost: true },
        };
    }
    real_idx.sort_by(|&a, &b| cur.levels[a].energy.re.total_cmp(&cur.levels[b].energy.re));
    let mut candidates: Vec<(usize, usize, f64)> = real_idx
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (w[0], w[1]);
            let d_pred = gap_sq_predict(states, a, b, eps);
            let scale = cur.levels[b].energy.re.abs().max(1.0);
            let collided = !next[a].lost
                && !next[b].lost
                && (next[b].energy.re - next[a].energy.re) < controls.merge_tol * scale;
            let failed = next[a].lost || next[b].lost;
            let d_old = gap_sq(cur.levels[a].energy, cur.levels[b].energy);
            // a lost level only counts when the squared gap is closing fast
            let closing = d_pred < d_old;
            let imminent = d_pred < 0.5 * d_old;
            (closing && (collided || d_pred < 0.0 || (failed && imminent))).then_some((a, b, d_pred))
        })
        .collect();
    // the closest pair is the one pinching
    candidates.sort_by(|x, y| x.2.total_cmp(&y.2));
    let mut used = vec![false; n];
    for (a, b, d_pred) in candidates {
        if used[a] || used[b] {
            continue;
        }
        let (ea, eb) = (cur.levels[a].energy, cur.levels[b].energy);
        let d_old = gap_sq(ea, eb);
        let scale = eb.re.abs().max(1.0);
        let mid = 0.5 * (preds[a] + preds[b]);
        let spread = if d_pred < 0.0 { 0.5 * (-d_pred).sqrt() } else { 0.5 * d_old.sqrt() };
        let seed = Complex64::new(mid.re, spread.max(1e-3));
        match find_eigenvalue(&def, seed, ctl) {
            Ok(e) if !is_real(e) && (e.re - mid.re).abs() < 0.5 * d_old.sqrt() => {
                let e = if e.im > 0.0 { e } else { e.conj() };
                let (lo, hi) = (a.min(b), a.max(b));
                next[lo] = Level { energy: e, partner: Some(hi), lost: false };
                next[hi] = Level { energy: e.conj(), partner: Some(lo), lost: false };
                used[a] = true;
                used[b] = true;
                pinches.push(PinchAnnotation {
                    level_pair: (lo, hi),
                    epsilon_star: linear_root(cur.epsilon, d_old, eps, gap_sq(e, e.conj())),
                    energy_star: 0.5 * ((0.5 * (ea + eb)).re + e.re),
                    kind: PinchKind::Merge,
                });
            }
            _ => {
                // still real: re-solve both from split guesses
                let half = 0.5 * d_old.sqrt().max(1e-3);
                let ra = find_eigenvalue(&def, Complex64::new(mid.re - half, 0.0), ctl).ok();
                let rb = find_eigenvalue(&def, Complex64::new(mid.re + half, 0.0), ctl).ok();
                if let (Some(x), Some(y)) = (ra, rb) {
                    if is_real(x) && is_real(y) && (y.re - x.re) > controls.merge_tol * scale {
                        next[a] = Level { energy: Complex64::new(x.re, 0.0), partner: None, lost: false };
                        next[b] = Level { energy: Complex64::new(y.re, 0.0), partner: None, lost: false };
                    }
                }
            }
        }
    }
    let reported = n - GUARD_LEVELS;
    for (i, lv) in next.iter().enumerate() {
        if lv.lost && lv.partner.is_none() {
            let tag = if i >= reported { GUARD_TAG } else { "" };
            warnings.push(format!("lost level {i} at eps = {eps} {tag}"));
        }
    }
    Ok(State { epsilon: eps, levels: next })
}

/// Uniform grid of `steps + 1` points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_phase_levels_rise() {
        let grid = uniform_grid(0.0, 1.0, 10);
        let res = sweep(Family::Analytic { k: 1 }, &grid, 6, &SweepControls::default()).unwrap();
        assert!(res.warnings.is_empty(), "{:?}", res.warnings);
        assert_eq!(res.records.len(), 66);
        for n in 0..6 {
            let es: Vec<f64> = res.level(n).map(|r| r.energy.re).collect();
            assert!(es.windows(2).all(|w| w[1] >= w[0]), "level {n}: {es:?}");
            assert!(res.level(n).all(|r| r.is_real));
        }
        let top: Vec<f64> = res.at(1.0).map(|r| r.energy.re).collect();
        assert!((top[0] - 1.156_267_072).abs() < 1e-6);
        assert!((top[1] - 4.109_228_752).abs() < 1e-6);
    }

    #[test]
    fn broken_phase_leaves_one_real_level() {
        let grid = uniform_grid(-0.7, 0.0, 70);
        let res = sweep(Family::Analytic { k: 1 }, &grid, 6, &SweepControls::default()).unwrap();
        for &eps in &grid {
            let recs: Vec<_> = res.at(eps).collect();
            // the top level's partner lies above the reported window
            for r in recs.iter().filter(|r| !r.is_real && r.level < 5) {
                assert!(recs.iter().any(|s| (s.energy - r.energy.conj()).norm() < 1e-8 * r.energy.norm()));
            }
            if eps <= -0.58 {
                assert_eq!(recs.iter().filter(|r| r.is_real).count(), 1, "eps = {eps}");
            }
        }
        let last = res.pinches.iter().map(|p| p.epsilon_star).fold(f64::INFINITY, f64::min);
        assert!((last + 0.578).abs() < 5e-3, "{last}");
        assert!(res.pinches.iter().all(|p| p.kind == PinchKind::Merge));
    }

    #[test]
    fn rejects_bad_grid() {
        let c = SweepControls::default();
        assert!(sweep(Family::Analytic { k: 1 }, &[0.0, 0.2, 0.1], 2, &c).is_err());
        assert!(sweep(Family::Analytic { k: 1 }, &[0.0, 0.2], 0, &c).is_err());
    }
}
