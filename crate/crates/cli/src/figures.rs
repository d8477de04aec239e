//! Fixed parameter sets for the standard datasets.

use num_complex::Complex64;

use ptspec_core::dynamics::{integrate, turning_points, Branch, ExactCase, IntegrateControls};
use ptspec_core::shooting::{lowest_real, ShootControls};
use ptspec_core::sweep::uniform_grid;
use ptspec_core::{Deformation, Family, PtError, Result};

use crate::output::Artifact;
use crate::{matrix_artifact, par_map, push_trajectory, spectrum_artifact, sweep_on, Outcome, TRAJECTORY_COLUMNS};

pub const FIGURE_IDS: [&str; 12] = [
    "fig1", "fig2", "fig4", "fig6", "fig10", "fig11", "fig13", "fig16", "fig17", "fig18", "fig19", "fig115",
];

/// Produce the dataset for figure `id`.
pub fn emit_figure(id: &str, shoot: &ShootControls) -> Result<Outcome> {
    let mut out = match id {
        "fig1" => orbits(
            0.0,
            &[Complex64::new(1.0, 0.0)],
            &[0.25, 0.5, 0.75, 1.0, 1.5].map(|y| Complex64::new(0.0, y)),
            "H = p^2 + x^2 at E = 1: nested ellipses with foci at the turning points x = +-1, \
             the real segment between them being the degenerate one; every closed path has period 2 pi",
        )?,
        "fig2" => orbits(
            1.0,
            &[],
            &[
                Complex64::new(0.0, -0.25),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, -1.25),
                Complex64::new(0.0, -1.5),
                Complex64::new(0.0, 2.0),
            ],
            "H = p^2 + i x^3 at E = 1: the oscillatory path joining the turning points x+- \
             inside closed nested orbits; a start on the imaginary axis above x0 = i runs off to i infinity",
        )?,
        "fig4" => orbits(
            2.0,
            &[],
            &[-1.5, -2.0, 1.5, 2.0].map(|y| Complex64::new(0.0, y)),
            "H = p^2 - x^4 at E = 1: oscillatory paths joining x1, x2 in the lower half plane and x3, x4 \
             in the upper half plane, each surrounded by closed orbits of the same period",
        )?,
        "fig6" => orbits(
            5.0,
            &[],
            &[-1.5, -2.0, 2.0].map(|y| Complex64::new(0.0, y)),
            "H = p^2 + i x^7 at E = 1: oscillatory paths surrounded by periodic orbits; \
             starts on the imaginary axis above x = i are unbounded",
        )?,
        "fig10" => parabolas(),
        "fig11" => spectrum_figure(
            Family::Analytic { k: 1 },
            (-0.99, 3.0, 399),
            10,
            shoot,
            "levels of H = p^2 + x^2 (ix)^eps versus eps: real and rising for eps >= 0 with E_n = 2n + 1 at eps = 0; \
             finitely many real levels for -1 < eps < 0, pairs merging into complex conjugates; \
             the grid stops short of eps = -1 where the ground state diverges",
        )?,
        "fig13" => spectrum_figure(
            Family::Analytic { k: 2 },
            (-1.95, 3.0, 495),
            10,
            shoot,
            "levels of H = p^2 + x^4 (ix)^eps versus eps: real for eps >= 0, pairs go complex below 0, \
             the whole spectrum returns to the real axis at eps = -1",
        )?,
        "fig16" => spectrum_figure(
            Family::Analytic { k: 3 },
            (-2.9, 2.0, 490),
            10,
            shoot,
            "levels of H = p^2 + x^6 (ix)^eps versus eps: real for eps >= 0, \
             entirely real again at eps = -1 and eps = -2",
        )?,
        "fig17" => abs_family(shoot)?,
        "fig18" => spectrum_figure(
            Family::NonAnalytic { p: 1.0 },
            (-0.5, 1.0, 75),
            10,
            shoot,
            "levels of H = p^2 + |x| (ix)^eps on the real line versus eps: entirely real only at eps = 0",
        )?,
        "fig19" => spectrum_figure(
            Family::NonAnalytic { p: 3.0 },
            (-1.0, 1.0, 100),
            10,
            shoot,
            "levels of H = p^2 + |x|^3 (ix)^eps on the real line versus eps: real at eps = 0 and eps = -1/2",
        )?,
        "fig115" => {
            let (mut art, top_real) = matrix_artifact(17, -0.5)?;
            art.notes.push(
                "eigenvalues of the truncated oscillator-basis matrix of orders 0..17 at eps = -1/2; \
                 the three lowest real ones converge while higher real ones vanish in pairs"
                    .into(),
            );
            Outcome {
                artifact: art,
                summary: format!("18 truncations, {top_real} real eigenvalues at order 17"),
            }
        }
        other => return Err(PtError::UnknownFigure(other.to_string())),
    };
    out.artifact.params.insert(0, ("figure".into(), id.to_string()));
    out.summary = format!("{id}: {}", out.summary);
    Ok(out)
}

/// Closed and open classical paths of `x^2 (ix)^eps` at `E = 1` from every turning
/// point (or the ones listed) plus extra starting points.
fn orbits(eps: f64, tp_override: &[Complex64], extra: &[Complex64], note: &str) -> Result<Outcome> {
    let def = Deformation::analytic(1, eps)?;
    let energy = 1.0;
    let mut starts: Vec<Complex64> = if tp_override.is_empty() {
        turning_points(&def, energy)?
            .into_iter()
            .map(|t| t.x)
            .filter(|x| !(x.re.abs() < 1e-12 && x.im > 0.0))
            .collect()
    } else {
        tp_override.to_vec()
    };
    starts.extend_from_slice(extra);
    let ctl = IntegrateControls {
        t_max: 40.0,
        ..Default::default()
    };
    let trajs = par_map(&starts, |&x0| integrate(&def, energy, x0, Branch::Plus, &ctl))?;
    let mut art = Artifact::new(&TRAJECTORY_COLUMNS);
    art.param("K", 1);
    art.param("eps", eps);
    art.param("energy", energy);
    art.param("t_max", ctl.t_max);
    art.notes.push(note.to_string());
    for (i, t) in trajs.iter().enumerate() {
        push_trajectory(&mut art, i, t);
    }
    let closed = trajs.iter().filter(|t| t.closed).count();
    Ok(Outcome {
        artifact: art,
        summary: format!("{} trajectories at eps = {eps}, {closed} closed", trajs.len()),
    })
}

fn parabolas() -> Outcome {
    let bs: Vec<f64> = (1..=8).flat_map(|j| [-0.25 * j as f64, 0.25 * j as f64]).collect();
    let mut art = Artifact::new(&["curve", "b", "t", "re_x", "im_x"]);
    art.param("K", 1);
    art.param("eps", -1.0);
    art.param("energy", 1.0);
    art.notes.push(
        "H = p^2 - i x at E = 1: closed-form parabolas x(t) = (1 - b^2 + t^2/4) i + b t, all unbounded, \
         and the turning point at x = i"
            .into(),
    );
    for (i, &b) in bs.iter().enumerate() {
        let path = ExactCase::Parabola { b };
        for (t, x) in path.sample(-10.0, 10.0, 401) {
            art.push(vec![i.into(), b.into(), t.into(), x.re.into(), x.im.into()]);
        }
    }
    Outcome {
        artifact: art,
        summary: format!("{} parabolas at eps = -1", bs.len()),
    }
}

fn spectrum_figure(
    family: Family,
    (lo, hi, steps): (f64, f64, usize),
    levels: usize,
    shoot: &ShootControls,
    note: &str,
) -> Result<Outcome> {
    let grid = uniform_grid(lo, hi, steps);
    let res = sweep_on(family, &grid, levels, shoot)?;
    let mut art = spectrum_artifact(&res);
    match family {
        Family::Analytic { k } => art.param("K", k),
        Family::NonAnalytic { p } => art.param("P", p),
    }
    art.param("eps_min", lo);
    art.param("eps_max", hi);
    art.param("eps_steps", steps);
    art.param("levels", levels);
    art.notes.push(note.to_string());
    let summary = format!(
        "{} records over eps in [{lo}, {hi}], {} pinches, {} warnings",
        res.records.len(),
        res.pinches.len(),
        res.warnings.len()
    );
    Ok(Outcome { artifact: art, summary })
}

fn abs_family(shoot: &ShootControls) -> Result<Outcome> {
    let ps = uniform_grid(0.5, 6.0, 55);
    let levels = 10;
    let spectra = par_map(&ps, |&p| lowest_real(&Deformation::nonanalytic(p, 0.0)?, levels, shoot))?;
    let mut art = Artifact::new(&["P", "level", "E"]);
    art.param("eps", 0.0);
    art.param("P_min", 0.5);
    art.param("P_max", 6.0);
    art.param("P_steps", 55);
    art.param("levels", levels);
    art.notes.push(
        "levels of the Hermitian H = p^2 + |x|^P versus P: no pinching, the spectrum crowds together as P falls toward 0"
            .into(),
    );
    for (&p, es) in ps.iter().zip(&spectra) {
        for (n, &e) in es.iter().enumerate() {
            art.push(vec![p.into(), n.into(), e.into()]);
        }
    }
    Ok(Outcome {
        artifact: art,
        summary: format!("{} values of P, {} levels each", ps.len(), levels),
    })
}
