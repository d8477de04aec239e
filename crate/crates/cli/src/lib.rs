//! Job runner behind the `ptspec` binary: validates a [`JobConfig`], dispatches
//! to the engines in `ptspec-core`, and writes plot-ready tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod figures;
pub mod output;

use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use ptspec_core::basis::truncation_sequence;
use ptspec_core::dynamics::{integrate, turning_points, Branch, IntegrateControls, Trajectory};
use ptspec_core::flow::{locate_pinch, special_real_points, table1};
use ptspec_core::shooting::{is_real, lowest_real, ShootControls};
use ptspec_core::sweep::{sweep, uniform_grid, SweepControls, SweepResult};
use ptspec_core::wkb::{abs_wkb, closed_form, quantize, WkbOrder};
use ptspec_core::{Deformation, Family, PtError, Result};

use config::{Command, EpsParam, FamilyParam, JobConfig};
use output::Artifact;

pub use config::{parse_pairs, Format};
pub use figures::{emit_figure, FIGURE_IDS};

/// What a finished job produced.
#[derive(Debug)]
pub struct Outcome {
    pub artifact: Artifact,
    pub summary: String,
}

/// Run a job and write its artifact; returns the one-line summary.
pub fn run(cfg: &JobConfig) -> Result<String> {
    let mut outcome = execute(cfg)?;
    let mut params = cfg.header();
    params.insert(0, ("command".into(), cfg.command.to_string()));
    for (k, v) in std::mem::take(&mut outcome.artifact.params) {
        if !params.iter().any(|(have, _)| *have == k) {
            params.push((k, v));
        }
    }
    outcome.artifact.params = params;
    let out = match (&cfg.out, cfg.command, &cfg.figure) {
        (Some(p), _, _) => Some(p.clone()),
        (None, Command::EmitFigure, Some(id)) => Some(PathBuf::from(format!(
            "{id}.{}",
            match cfg.format {
                Format::Csv => "csv",
                Format::Json => "json",
            }
        ))),
        _ => None,
    };
    outcome.artifact.write(out.as_deref(), cfg.format)?;
    Ok(match out {
        Some(p) => format!("{}; wrote {}", outcome.summary, p.display()),
        None => outcome.summary,
    })
}

/// Compute a job's artifact without writing it.
pub fn execute(cfg: &JobConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Trajectory => trajectory_job(cfg),
        Command::Spectrum => spectrum_job(cfg),
        Command::Matrix => matrix_job(cfg),
        Command::Wkb => wkb_job(cfg),
        Command::Table1 => table1_job(cfg),
        Command::Pinch => pinch_job(cfg),
        Command::SpecialPoints => special_job(cfg),
        Command::EmitFigure => {
            let id = cfg
                .figure
                .as_deref()
                .ok_or_else(|| PtError::Config("emit-figure needs a figure id".into()))?;
            emit_figure(id, &cfg.shoot)
        }
    }
}

pub(crate) const TRAJECTORY_COLUMNS: [&str; 7] = ["curve", "t", "re_x", "im_x", "re_p", "im_p", "theta"];

pub(crate) fn push_trajectory(art: &mut Artifact, curve: usize, traj: &Trajectory) {
    for s in &traj.states {
        art.push(vec![
            curve.into(),
            s.t.into(),
            s.x.re.into(),
            s.x.im.into(),
            s.p.re.into(),
            s.p.im.into(),
            s.theta.into(),
        ]);
    }
    let period = traj.period.map_or("none".to_string(), |p| format!("{p:.16e}"));
    art.notes.push(format!(
        "curve {curve}: x0 = {:.6}{:+.6}i, termination = {}, period = {period}, winding = {}, max |H - E| = {:.3e}",
        traj.states[0].x.re,
        traj.states[0].x.im,
        traj.termination.as_str(),
        traj.winding,
        traj.max_energy_drift()
    ));
}

fn trajectory_job(cfg: &JobConfig) -> Result<Outcome> {
    let k = cfg.analytic_k()?;
    let eps = cfg.single_eps()?.unwrap_or(0.0);
    let energy = cfg.energy.unwrap_or(1.0);
    let def = Deformation::analytic(k, eps)?;
    let x0 = match cfg.x0 {
        Some((re, im)) => Complex64::new(re, im),
        None => turning_points(&def, energy)?
            .into_iter()
            .filter(|t| t.primary)
            .max_by(|a, b| a.x.re.total_cmp(&b.x.re))
            .map(|t| t.x)
            .ok_or_else(|| PtError::Domain("no primary turning point".into()))?,
    };
    let ctl = IntegrateControls {
        t_max: cfg.t_max.unwrap_or(IntegrateControls::default().t_max),
        ..Default::default()
    };
    let branch = if cfg.branch_minus { Branch::Minus } else { Branch::Plus };
    let traj = integrate(&def, energy, x0, branch, &ctl)?;
    let mut art = Artifact::new(&TRAJECTORY_COLUMNS);
    push_trajectory(&mut art, 0, &traj);
    let summary = format!(
        "trajectory: {} states, {}, period {}, max |H - E| {:.2e}",
        traj.states.len(),
        traj.termination.as_str(),
        traj.period.map_or("n/a".into(), |p| format!("{p:.10}")),
        traj.max_energy_drift()
    );
    Ok(Outcome { artifact: art, summary })
}

pub(crate) const SPECTRUM_COLUMNS: [&str; 6] = ["epsilon", "level", "re_E", "im_E", "is_real", "method"];

/// Grid padded with a lead-in from `eps = 0`, where the march starts from a real spectrum.
fn with_lead_in(grid: &[f64]) -> Vec<f64> {
    const STEP: f64 = 0.01;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let ramp = |from: f64, to: f64| -> Vec<f64> {
        let n = ((to - from).abs() / STEP).ceil() as usize;
        (0..n).map(|i| from + (to - from) * i as f64 / n as f64).collect()
    };
    if lo > STEP {
        let mut g = ramp(0.0, lo);
        g.extend_from_slice(grid);
        g
    } else if hi < -STEP {
        let mut g = grid.to_vec();
        let mut tail = ramp(0.0, hi);
        tail.reverse();
        g.extend(tail.into_iter().filter(|&e| e > hi));
        g
    } else {
        grid.to_vec()
    }
}

/// Sweep `grid` and keep only its own points.
pub(crate) fn sweep_on(family: Family, grid: &[f64], levels: usize, shoot: &ShootControls) -> Result<SweepResult> {
    let full = with_lead_in(grid);
    let ctl = SweepControls {
        shoot: *shoot,
        ..Default::default()
    };
    let mut res = sweep(family, &full, levels, &ctl)?;
    if full.len() != grid.len() {
        res.records.retain(|r| grid.contains(&r.epsilon));
        let (lo, hi) = (grid[0], grid[grid.len() - 1]);
        res.pinches.retain(|p| p.epsilon_star >= lo && p.epsilon_star <= hi);
        res.grid = grid.to_vec();
    }
    Ok(res)
}

pub(crate) fn spectrum_artifact(res: &SweepResult) -> Artifact {
    let mut art = Artifact::new(&SPECTRUM_COLUMNS);
    for r in &res.records {
        art.push(vec![
            r.epsilon.into(),
            r.level.into(),
            r.energy.re.into(),
            r.energy.im.into(),
            r.is_real.into(),
            r.method.as_str().into(),
        ]);
    }
    let pinches: Vec<Value> = res
        .pinches
        .iter()
        .map(|p| {
            json!({
                "level_pair": [p.level_pair.0, p.level_pair.1],
                "epsilon_star": p.epsilon_star,
                "E_star": p.energy_star,
                "kind": p.kind,
            })
        })
        .collect();
    art.extras.insert("pinches".into(), Value::Array(pinches));
    art.extras.insert("warnings".into(), json!(res.warnings));
    art
}

fn spectrum_summary(res: &SweepResult) -> String {
    let (lo, hi) = (res.grid[0], res.grid[res.grid.len() - 1]);
    let stars: Vec<String> = res
        .pinches
        .iter()
        .map(|p| format!("({},{})@{:.6}", p.level_pair.0, p.level_pair.1, p.epsilon_star))
        .collect();
    format!(
        "spectrum: {} records, {} levels, eps in [{lo}, {hi}], {} real, pinches [{}], {} warnings",
        res.records.len(),
        res.n_levels,
        res.records.iter().filter(|r| r.is_real).count(),
        stars.join(" "),
        res.warnings.len()
    )
}

fn spectrum_job(cfg: &JobConfig) -> Result<Outcome> {
    let family = match cfg.family {
        None => Family::Analytic { k: 1 },
        Some(FamilyParam::K(k)) => Family::Analytic { k },
        Some(FamilyParam::P(p)) => Family::NonAnalytic { p },
    };
    let levels = cfg.levels.unwrap_or(10);
    if levels == 0 {
        return Err(PtError::Config("levels must be at least 1".into()));
    }
    let grid = match cfg.eps.unwrap_or(EpsParam::Single(0.0)) {
        EpsParam::Single(e) => vec![e],
        EpsParam::Grid { min, max, steps } => uniform_grid(min, max, steps),
    };
    let res = sweep_on(family, &grid, levels, &cfg.shoot)?;
    let summary = spectrum_summary(&res);
    Ok(Outcome {
        artifact: spectrum_artifact(&res),
        summary,
    })
}

pub(crate) fn matrix_artifact(k_trunc: usize, eps: f64) -> Result<(Artifact, usize)> {
    let orders: Vec<usize> = (0..=k_trunc).collect();
    let seq = truncation_sequence(&orders, eps)?;
    let mut art = Artifact::new(&["trunc_order", "eig_index", "re_E", "im_E"]);
    let mut top_real = 0;
    for (order, mut eigs) in seq {
        eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        if order == k_trunc {
            top_real = eigs.iter().filter(|e| is_real(**e)).count();
        }
        for (i, e) in eigs.iter().enumerate() {
            art.push(vec![order.into(), i.into(), e.re.into(), e.im.into()]);
        }
    }
    Ok((art, top_real))
}

fn matrix_job(cfg: &JobConfig) -> Result<Outcome> {
    if cfg.analytic_k()? != 1 {
        return Err(PtError::Config("the oscillator-basis matrix is built for K = 1".into()));
    }
    let eps = cfg.require_eps()?;
    let k_trunc = cfg.trunc.unwrap_or(17);
    let (art, top_real) = matrix_artifact(k_trunc, eps)?;
    let summary = format!(
        "matrix: orders 0..={k_trunc} at eps = {eps}, {} eigenvalues, {top_real} real at the top order",
        art.rows.len()
    );
    Ok(Outcome { artifact: art, summary })
}

fn wkb_job(cfg: &JobConfig) -> Result<Outcome> {
    let levels = cfg.levels.unwrap_or(10);
    if levels == 0 {
        return Err(PtError::Config("levels must be at least 1".into()));
    }
    let mut art = Artifact::new(&["n", "epsilon", "E_lo", "E_nlo", "E_shooting"]);
    let nan = f64::NAN;
    let (eps, rows): (f64, Vec<(f64, f64)>) = match cfg.family {
        Some(FamilyParam::P(p)) => {
            if cfg.single_eps()?.is_some_and(|e| e != 0.0) {
                return Err(PtError::Config("WKB for |x|^P is real-line only; eps must be 0".into()));
            }
            let rows = (0..levels)
                .map(|n| Ok((abs_wkb(n, p - 2.0, WkbOrder::Leading)?, abs_wkb(n, p - 2.0, WkbOrder::Nlo)?)))
                .collect::<Result<_>>()?;
            (0.0, rows)
        }
        _ => {
            let k = cfg.analytic_k()?;
            let eps = cfg.require_eps()?;
            let def = Deformation::analytic(k, eps)?;
            let rows = (0..levels)
                .map(|n| {
                    if k == 1 {
                        let lo = closed_form(n, eps, WkbOrder::Leading)?.energy;
                        let nlo = if n >= 1 { closed_form(n, eps, WkbOrder::Nlo)?.energy } else { nan };
                        Ok((lo, nlo))
                    } else {
                        Ok((quantize(&def, n, WkbOrder::Leading)?.energy, nan))
                    }
                })
                .collect::<Result<_>>()?;
            (eps, rows)
        }
    };
    let def = match cfg.family {
        Some(FamilyParam::P(p)) => Deformation::nonanalytic(p, 0.0)?,
        _ => Deformation::analytic(cfg.analytic_k()?, eps)?,
    };
    let exact = lowest_real(&def, levels, &cfg.shoot)?;
    let mut worst_lo: f64 = 0.0;
    for (n, ((lo, nlo), ex)) in rows.into_iter().zip(exact).enumerate() {
        worst_lo = worst_lo.max((lo - ex).abs() / ex);
        art.push(vec![n.into(), eps.into(), lo.into(), nlo.into(), ex.into()]);
    }
    let summary = format!("wkb: {levels} levels at eps = {eps}, worst leading-order relative error {worst_lo:.3e}");
    Ok(Outcome { artifact: art, summary })
}

/// Default deltas of the ground-state table near `eps = -1`.
pub const TABLE1_DELTAS: [f64; 7] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];

fn table1_job(cfg: &JobConfig) -> Result<Outcome> {
    let deltas = cfg.deltas.clone().unwrap_or_else(|| TABLE1_DELTAS.to_vec());
    let rows = table1(&deltas, &cfg.shoot)?;
    let mut art = Artifact::new(&["delta", "E_exact", "E_formula"]);
    for r in &rows {
        art.push(vec![r.delta.into(), r.e_exact.into(), r.e_formula.into()]);
    }
    art.notes
        .push("E_formula = (-(3/4) ln delta)^(2/3), the bare leading law".into());
    let summary = format!(
        "table1: {} rows, E_exact from {:.6} to {:.6}",
        rows.len(),
        rows.first().map_or(f64::NAN, |r| r.e_exact),
        rows.last().map_or(f64::NAN, |r| r.e_exact)
    );
    Ok(Outcome { artifact: art, summary })
}

fn pinch_job(cfg: &JobConfig) -> Result<Outcome> {
    let k = cfg.analytic_k()?;
    let pair = cfg.pair.unwrap_or((1, 2));
    let bracket = match cfg.eps {
        Some(EpsParam::Grid { min, max, .. }) => (min, max),
        None if k == 1 && pair == (1, 2) => (-0.7, -0.5),
        _ => {
            return Err(PtError::Config(
                "pinch needs a bracket via eps_min and eps_max".into(),
            ))
        }
    };
    let p = locate_pinch(k, pair, bracket, &cfg.shoot)?;
    let mut art = Artifact::new(&["n_lo", "n_hi", "epsilon_star", "E_star"]);
    art.push(vec![
        p.level_pair.0.into(),
        p.level_pair.1.into(),
        p.epsilon_star.into(),
        p.energy_star.into(),
    ]);
    let summary = format!(
        "pinch: levels ({}, {}) of K = {k} coalesce at eps* = {:.7}, E* = {:.6}",
        pair.0, pair.1, p.epsilon_star, p.energy_star
    );
    Ok(Outcome { artifact: art, summary })
}

fn special_job(cfg: &JobConfig) -> Result<Outcome> {
    let k = match cfg.family {
        None => 2,
        _ => cfg.analytic_k()?,
    };
    let levels = cfg.levels.unwrap_or(8);
    let points = special_real_points(k, levels, &cfg.shoot)?;
    let mut art = Artifact::new(&["K", "epsilon", "level", "re_E", "im_E", "is_real"]);
    let mut checks = Vec::new();
    for sp in &points {
        for r in &sp.spectrum {
            art.push(vec![
                (sp.k as usize).into(),
                r.epsilon.into(),
                r.level.into(),
                r.energy.re.into(),
                r.energy.im.into(),
                r.is_real.into(),
            ]);
        }
        checks.push(json!({
            "epsilon": sp.epsilon,
            "e_top": sp.check.e_top,
            "real_levels": sp.check.real_levels.len(),
            "zero_count": sp.check.zero_count,
            "all_real": sp.check.all_real(),
        }));
    }
    let verdicts: Vec<String> = points
        .iter()
        .map(|p| format!("eps={} {}", p.epsilon, if p.check.all_real() { "all real" } else { "complex levels" }))
        .collect();
    art.extras.insert("reality_checks".into(), Value::Array(checks));
    let summary = format!("special-points: K = {k}, {}", verdicts.join(", "));
    Ok(Outcome { artifact: art, summary })
}

/// Cap the global rayon pool from `PTSPEC_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("PTSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| PtError::Config(format!("PTSPEC_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(PtError::Config("PTSPEC_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| PtError::Config(e.to_string()))
}

/// Evaluate `f` over `items` in parallel, keeping input order.
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    items.par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::Cell;
    use std::collections::BTreeMap;

    fn cfg(items: &[(&str, &str)]) -> JobConfig {
        let m: BTreeMap<String, String> = items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        JobConfig::from_pairs(m).unwrap()
    }

    #[test]
    fn lead_in_reaches_zero() {
        let g = with_lead_in(&[0.5, 0.6]);
        assert_eq!(g[0], 0.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let g = with_lead_in(&[-1.9, -1.5]);
        assert_eq!(*g.last().unwrap(), 0.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(with_lead_in(&[-0.5, 0.5]), vec![-0.5, 0.5]);
    }

    #[test]
    fn spectrum_single_point_is_deterministic() {
        let c = cfg(&[("command", "spectrum"), ("eps", "0.3"), ("levels", "3")]);
        let a = execute(&c).unwrap().artifact.to_csv();
        let b = execute(&c).unwrap().artifact.to_csv();
        assert_eq!(a, b);
        let rows: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], SPECTRUM_COLUMNS.join(","));
        assert_eq!(rows.len(), 4);
        let eps: f64 = rows[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(eps, 0.3);
    }

    #[test]
    fn wkb_rows_hold_all_methods() {
        let out = execute(&cfg(&[("command", "wkb"), ("eps", "1"), ("levels", "4")])).unwrap();
        assert_eq!(out.artifact.rows.len(), 4);
        let Cell::Float(lo) = out.artifact.rows[3][2] else { panic!() };
        let Cell::Float(ex) = out.artifact.rows[3][4] else { panic!() };
        assert!((lo - ex).abs() / ex < 0.01);
    }

    #[test]
    fn harmonic_trajectory_closes() {
        let out = execute(&cfg(&[("command", "trajectory"), ("x0_im", "0.5")])).unwrap();
        assert!(out.summary.contains("closed"), "{}", out.summary);
        assert!(out.artifact.notes[0].contains("period = 6.28"));
    }

    #[test]
    fn bad_jobs_are_usage_errors() {
        let e = execute(&cfg(&[("command", "matrix"), ("K", "2"), ("eps", "0.5")])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = execute(&cfg(&[("command", "matrix")])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = execute(&cfg(&[("command", "emit-figure"), ("figure", "fig99")])).unwrap_err();
        assert!(matches!(e, PtError::UnknownFigure(_)));
        assert_eq!(e.exit_code(), 2);
        let e = execute(&cfg(&[("command", "pinch"), ("pair", "3,4")])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = execute(&cfg(&[("command", "table1"), ("deltas", "1e-9")])).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn matrix_header_and_counts() {
        let (art, top_real) = matrix_artifact(5, -0.5).unwrap();
        assert_eq!(art.rows.len(), (1..=6).sum::<usize>());
        assert!(top_real >= 1);
    }
}
