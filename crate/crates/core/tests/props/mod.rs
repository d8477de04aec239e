//! Invariant checks shared by the property suite and the acceptance harness.

#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use ptspec_core::basis::{truncated_spectrum, TruncatedMatrix};
use ptspec_core::dynamics::{energy_drift, integrate, pt_mirror_distance, Branch, IntegrateControls};
use ptspec_core::shooting::{find_eigenvalue, ShootControls, Shooter};
use ptspec_core::wkb::{closed_form, WkbOrder};
use ptspec_core::Deformation;

pub type Check = std::result::Result<(), TestCaseError>;

fn fail<T: std::fmt::Display>(msg: T) -> TestCaseError {
    TestCaseError::fail(msg.to_string())
}

/// Every stored state satisfies `|p^2 + V - E| <= tol max(1, |E|, |V|)`.
pub fn energy_conservation(k: u32, eps: f64, x0: Complex64, branch: Branch) -> Check {
    let def = Deformation::analytic(k, eps).map_err(fail)?;
    let ctl = IntegrateControls { t_max: 10.0, ..Default::default() };
    let traj = integrate(&def, 1.0, x0, branch, &ctl).map_err(fail)?;
    for s in &traj.states {
        let scale = def.potential(s.x, s.theta).norm().max(1.0);
        let d = energy_drift(&def, s, 1.0);
        prop_assert!(d <= ctl.tol_energy * scale, "drift {d:e} at x = {} (eps = {eps})", s.x);
    }
    Ok(())
}

/// A closed orbit started on the negative imaginary axis equals its reflection `-conj(x)`.
pub fn pt_mirror(eps: f64, depth: f64) -> Check {
    let def = Deformation::analytic(1, eps).map_err(fail)?;
    let ctl = IntegrateControls { t_max: 60.0, ..Default::default() };
    let traj = integrate(&def, 1.0, Complex64::new(0.0, -depth), Branch::Plus, &ctl).map_err(fail)?;
    prop_assume!(traj.closed);
    let d = pt_mirror_distance(&traj);
    let diam = traj.diameter();
    prop_assert!(d <= 1e-4 * diam, "mirror distance {d:e}, diameter {diam} (eps = {eps}, start -{depth}i)");
    Ok(())
}

/// `M_{mn} = M_{nm}`, real when `m + n` is even and imaginary when odd.
pub fn matrix_structure(k_trunc: usize, eps: f64) -> Check {
    let m = TruncatedMatrix::new(k_trunc, eps).map_err(fail)?.entries;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let a = m[(i, j)];
            prop_assert_eq!(a, m[(j, i)]);
            if (i + j) % 2 == 0 {
                prop_assert_eq!(a.im, 0.0, "entry ({}, {}) = {}", i, j, a);
            } else {
                prop_assert_eq!(a.re, 0.0, "entry ({}, {}) = {}", i, j, a);
            }
        }
    }
    Ok(())
}

/// Complex eigenvalues come in conjugate pairs, for the truncated matrix and
/// for shooting refinements of its pairs.
pub fn conjugate_pairing(eps: f64) -> Check {
    let spec = truncated_spectrum(24, eps).map_err(fail)?;
    for z in &spec {
        let partner = spec.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(partner <= 1e-8 * z.norm().max(1.0), "no partner for {z} (eps = {eps})");
    }
    let guess = spec
        .iter()
        .filter(|z| z.im > 1e-3 && z.re < 12.0)
        .min_by(|a, b| a.re.total_cmp(&b.re))
        .copied();
    let guess = guess.ok_or_else(|| fail(format!("no complex pair below 12 at eps = {eps}")))?;
    let def = Deformation::analytic(1, eps).map_err(fail)?;
    let ctl = ShootControls::default();
    let up = find_eigenvalue(&def, guess, &ctl).map_err(fail)?;
    prop_assume!(up.im > 1e-6);
    let down = find_eigenvalue(&def, up.conj(), &ctl).map_err(fail)?;
    prop_assert!((down - up.conj()).norm() <= 1e-6 * up.norm(), "{up} pairs with {down} (eps = {eps})");
    Ok(())
}

/// Rescaling the seeds rescales `W` by the same constants and leaves roots fixed.
pub fn mismatch_scale(eps: f64, n: usize, cl: Complex64, cr: Complex64) -> Check {
    let def = Deformation::analytic(1, eps).map_err(fail)?;
    let guess = Complex64::new(closed_form(n, eps, WkbOrder::Leading).map_err(fail)?.energy, 0.0);
    let ctl = ShootControls::default();
    let plain = Shooter::new(&def, guess, &ctl).map_err(fail)?;
    let scaled = Shooter::new(&def, guess, &ctl).and_then(|s| s.with_seed_scale(cl, cr)).map_err(fail)?;
    let probe = guess + Complex64::new(0.05, 0.01);
    let w0 = plain.matching(probe).map_err(fail)?.raw;
    let w1 = scaled.matching(probe).map_err(fail)?.raw;
    let rel = (w1 - cl * cr * w0).norm() / (cl * cr * w0).norm();
    prop_assert!(rel <= 1e-10, "W ratio off by {rel:e}");
    let e0 = plain.find(guess).map_err(fail)?;
    let e1 = scaled.find(guess).map_err(fail)?;
    prop_assert!((e1 - e0).norm() <= 1e-10 * e0.norm(), "roots {e0} and {e1}");
    Ok(())
}

fn complex_scale() -> impl Strategy<Value = Complex64> {
    (-6.0f64..6.0, -std::f64::consts::PI..std::f64::consts::PI)
        .prop_map(|(lg, ph)| Complex64::from_polar(10f64.powf(lg), ph))
}

fn start_point() -> impl Strategy<Value = Complex64> {
    (0.2f64..2.0, -std::f64::consts::PI..std::f64::consts::PI).prop_map(|(r, a)| Complex64::from_polar(r, a))
}

pub fn energy_strategy() -> impl Strategy<Value = (u32, f64, Complex64, bool)> {
    (1u32..=2, -0.9f64..3.0, start_point(), any::<bool>())
}

pub fn mirror_strategy() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..2.0, 0.2f64..1.5)
}

pub fn matrix_strategy() -> impl Strategy<Value = (usize, f64)> {
    (1usize..30, -0.99f64..2.0)
}

pub fn pairing_strategy() -> impl Strategy<Value = f64> {
    -0.85f64..-0.35
}

pub fn scale_strategy() -> impl Strategy<Value = (f64, usize, Complex64, Complex64)> {
    (0.0f64..2.0, 0usize..6, complex_scale(), complex_scale())
}

pub fn branch(plus: bool) -> Branch {
    if plus {
        Branch::Plus
    } else {
        Branch::Minus
    }
}

/// Run every property for `cases` deterministic cases; one entry per property.
pub fn run_all(cases: u32) -> Vec<(&'static str, std::result::Result<(), String>)> {
    let cfg = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut out = Vec::new();
    let mut go = |name: &'static str, r: std::result::Result<(), String>| out.push((name, r));
    let mut runner = TestRunner::new_with_rng(cfg.clone(), proptest::test_runner::TestRng::deterministic_rng(cfg.rng_algorithm));
    go(
        "energy conservation",
        runner
            .run(&energy_strategy(), |(k, e, x0, b)| energy_conservation(k, e, x0, branch(b)))
            .map_err(|e| e.to_string()),
    );
    go(
        "PT mirror of closed orbits",
        runner.run(&mirror_strategy(), |(e, d)| pt_mirror(e, d)).map_err(|e| e.to_string()),
    );
    go(
        "conjugate pairing",
        runner.run(&pairing_strategy(), conjugate_pairing).map_err(|e| e.to_string()),
    );
    go(
        "matrix symmetry and parity",
        runner.run(&matrix_strategy(), |(k, e)| matrix_structure(k, e)).map_err(|e| e.to_string()),
    );
    go(
        "mismatch scale invariance",
        runner
            .run(&scale_strategy(), |(e, n, cl, cr)| mismatch_scale(e, n, cl, cr))
            .map_err(|e| e.to_string()),
    );
    out
}
