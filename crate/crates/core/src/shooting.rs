//! Eigenvalues of `-psi'' + V(x) psi = E psi` by shooting inward along the
//! centerlines of the PT-symmetric Stokes wedges and matching on the imaginary axis.
//!
//! Along a ray `x = r e^{i alpha}` the potential is `c r^q` for a constant `c`,
//! so both the analytic family and the real-line problem for `|x|^P (ix)^eps`
//! reduce to the same radial equation
//! `psi_rr = e^{2 i alpha} (c r^q - E) psi`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, PtError, Result};
use crate::potential::{principal_theta, Deformation, Family};

/// Angles of the PT-symmetric pair of wedges in which eigenfunctions decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeGeometry {
    pub theta_right: f64,
    pub theta_left: f64,
    pub opening: f64,
}

pub fn wedges(k: u32, epsilon: f64) -> Result<WedgeGeometry> {
    let d = 2.0 * k as f64 + epsilon + 2.0;
    if !(d > 0.0) {
        return Err(PtError::DegenerateWedge(d));
    }
    let theta_right = -epsilon * PI / (2.0 * d);
    Ok(WedgeGeometry {
        theta_right,
        theta_left: -PI - theta_right,
        opening: 2.0 * PI / d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// A straight integration path `x = r e^{i alpha}` on which `V = coeff * r^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub alpha: f64,
    pub coeff: Complex64,
    pub power: f64,
}

impl Ray {
    /// Rate `kappa` of the decaying controlling factor `exp(-kappa r^m / m)`, `m = power/2 + 1`.
    fn kappa(&self) -> Result<Complex64> {
        let k = (Complex64::from_polar(1.0, 2.0 * self.alpha) * self.coeff).sqrt();
        let k = if k.re < 0.0 { -k } else { k };
        if k.re <= 1e-8 * k.norm() {
            return domain(format!("ray at angle {} lies on a Stokes line", self.alpha));
        }
        Ok(k)
    }

    fn exponent(&self) -> f64 {
        0.5 * self.power + 1.0
    }

    /// `(psi, dpsi/dr)` of the decaying controlling factor at radius `r`.
    fn seed(&self, r: f64) -> Result<(Complex64, Complex64)> {
        let k = self.kappa()?;
        let m = self.exponent();
        let psi = (-k * r.powf(m) / m).exp();
        Ok((psi, -k * r.powf(m - 1.0) * psi))
    }

    /// Radius at which the WKB action beyond the turning radius reaches `action`.
    pub fn start_radius(&self, energy: Complex64, action: f64, r_min: f64) -> f64 {
        let q = self.power;
        let a = self.coeff.norm();
        let rt = (energy.norm() / a).powf(1.0 / q);
        let s = |r: f64| -> f64 {
            // int_rt^r sqrt(a s^q - a rt^q) ds by the midpoint rule on 64 panels
            if r <= rt {
                return 0.0;
            }
            let n = 64;
            let h = (r - rt) / n as f64;
            (0..n)
                .map(|i| {
                    let x = rt + (i as f64 + 0.5) * h;
                    (a * (x.powf(q) - rt.powf(q))).max(0.0).sqrt() * h
                })
                .sum()
        };
        let mut hi = rt.max(1.0) * 2.0;
        while s(hi) < action {
            hi *= 1.5;
        }
        let mut lo = rt;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if s(mid) < action {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi.max(r_min)
    }
}

/// The left and right rays of the eigenvalue problem for `def`, on the wedge centerlines.
pub fn rays(def: &Deformation) -> Result<(Ray, Ray)> {
    rays_with_offset(def, 0.0)
}

/// Rays turned by `offset` (right) and `-offset` (left) from the centerlines.
pub fn rays_with_offset(def: &Deformation, offset: f64) -> Result<(Ray, Ray)> {
    match def.family {
        Family::Analytic { k } => {
            let w = wedges(k, def.epsilon)?;
            let q = def.degree();
            if !(q > 0.0) {
                return domain(format!("shooting needs 2K + eps > 0, got {q}"));
            }
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            let ray = |alpha: f64| Ray {
                alpha,
                coeff: sign * Complex64::from_polar(1.0, q * (alpha + FRAC_PI_2)),
                power: q,
            };
            if offset.abs() >= 0.5 * w.opening {
                return domain(format!("ray offset {offset} leaves the wedge"));
            }
            Ok((ray(w.theta_left - offset), ray(w.theta_right + offset)))
        }
        Family::NonAnalytic { .. } => {
            let e = def.epsilon;
            if !(e.abs() < 2.0) {
                return domain(format!(
                    "real-axis boundary condition needs |eps| < 2, got {e}"
                ));
            }
            let q = def.degree();
            if !(q > 0.0) {
                return domain(format!("real-line problem needs P + eps > 0, got {q}"));
            }
            Ok((
                Ray {
                    alpha: -PI,
                    coeff: Complex64::from_polar(1.0, -FRAC_PI_2 * e),
                    power: q,
                },
                Ray {
                    alpha: 0.0,
                    coeff: Complex64::from_polar(1.0, FRAC_PI_2 * e),
                    power: q,
                },
            ))
        }
    }
}

/// Controlling factor `exp(-i^{eps/2} x^m / m)`, `m = K + 1 + eps/2`, with the sign
/// fixed so it decays outward along the ray through `x`.
///
/// Powers of `x` use the branch continuous from the positive real axis through
/// negative angles, `arg x` in `(-3pi/2, pi/2]`. Returns `(psi, dpsi/dx)`.
pub fn asymptotic_seed(
    x: Complex64,
    k: u32,
    epsilon: f64,
    decaying: bool,
) -> Result<(Complex64, Complex64)> {
    if !decaying {
        return Err(PtError::GrowingSeed);
    }
    let def = Deformation::analytic(k, epsilon)?;
    let r = x.norm();
    if r == 0.0 {
        return domain("seed radius must be positive");
    }
    let mut alpha = x.arg();
    if alpha > FRAC_PI_2 {
        alpha -= 2.0 * PI;
    }
    let q = def.degree();
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let ray = Ray {
        alpha,
        coeff: sign * Complex64::from_polar(1.0, q * (alpha + FRAC_PI_2)),
        power: q,
    };
    let (psi, dpsi_dr) = ray.seed(r)?;
    Ok((psi, dpsi_dr * Complex64::from_polar(1.0, -alpha)))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShootControls {
    /// Fixed RK4 steps per ray.
    pub steps: usize,
    /// WKB action between the turning radius and the starting radius.
    pub action: f64,
    pub r_min: f64,
    pub tol_e: f64,
    pub tol_w: f64,
    pub max_iter: usize,
    pub overflow_guard: f64,
    /// Rotation of both rays away from the wedge centerlines, mirrored so the
    /// pair stays PT symmetric. Positive values turn the right ray counterclockwise.
    pub ray_offset: f64,
}

impl Default for ShootControls {
    fn default() -> Self {
        Self {
            steps: 10_000,
            action: 30.0,
            r_min: 4.0,
            tol_e: 1e-10,
            tol_w: 1e-15,
            max_iter: 60,
            overflow_guard: 1e200,
            ray_offset: 0.0,
        }
    }
}
/// One straight piece `x = end + r dir`, `r` running from `len` down to 0, with
/// `dir V` sampled on the RK4 nodes and midpoints.
struct Segment {
    dir: Complex64,
    h: f64,
    dir_v: Vec<Complex64>,
}

impl Segment {
    fn new(start: Complex64, end: Complex64, steps: usize, v: impl Fn(Complex64) -> Complex64) -> Self {
        let len = (start - end).norm();
        let dir = (start - end) / len;
        let h = len / steps as f64;
        let dir_v = (0..=2 * steps)
            .map(|j| {
                let r = (len - 0.5 * h * j as f64).max(0.0);
                dir * v(end + r * dir)
            })
            .collect();
        Self { dir, h, dir_v }
    }
}

/// The inward path for one side, independent of `E`. When the turning point
/// lies below the real axis the path runs down the ray to the turning radius,
/// over to the turning point and then horizontally to the imaginary axis, where
/// the two decaying solutions are matched. Along that last stretch `E - V` is
/// nearly real, so neither WKB branch swamps the other and the mismatch keeps
/// its relative precision at high energy. Otherwise the ray runs to the origin.
struct RayGrid {
    ray: Ray,
    radius: f64,
    segments: Vec<Segment>,
    seed: (Complex64, Complex64),
}

impl RayGrid {
    fn new(def: &Deformation, ray: Ray, radius: f64, turning: Option<Complex64>, steps: usize) -> Result<Self> {
        let u = Complex64::from_polar(1.0, ray.alpha);
        let on_ray = move |x: Complex64| ray.coeff * x.norm().powf(ray.power);
        let off = |x: Complex64| def.potential(x, principal_theta(x));
        let start = radius * u;
        let mut nodes: Vec<(Complex64, bool)> = vec![(start, true)];
        match turning {
            Some(xt) if xt.norm() < radius => {
                nodes.push((xt.norm() * u, true));
                nodes.push((xt, false));
                nodes.push((Complex64::new(0.0, xt.im), false));
            }
            _ => nodes.push((Complex64::new(0.0, 0.0), true)),
        }
        nodes.dedup_by(|b, a| (b.0 - a.0).norm() < 1e-12 * radius);
        let lens: Vec<f64> = nodes.windows(2).map(|w| (w[1].0 - w[0].0).norm()).collect();
        let total: f64 = lens.iter().sum();
        let segments = nodes
            .windows(2)
            .zip(&lens)
            .map(|(w, &len)| {
                let n = if nodes.len() == 2 {
                    steps
                } else {
                    ((steps as f64 * len / total).ceil() as usize).max(16)
                };
                // a segment belongs to the ray only if it ends on it
                if w[1].1 {
                    Segment::new(w[0].0, w[1].0, n, on_ray)
                } else {
                    Segment::new(w[0].0, w[1].0, n, off)
                }
            })
            .collect();
        let (psi, dpsi_dr) = ray.seed(radius)?;
        Ok(Self {
            ray,
            radius,
            segments,
            seed: (psi, dpsi_dr / u),
        })
    }

    /// Integrate from `R` to the matching point; returns `(psi, dpsi/dx)` there and the
    /// accumulated log of rescalings.
    fn shoot(&self, energy: Complex64, guard: f64) -> Result<(Complex64, Complex64, f64)> {
        let (mut y, mut z) = self.seed;
        let mut log_scale = 0.0;
        for seg in &self.segments {
            let d = seg.dir;
            let de = d * energy;
            let h = -seg.h;
            let n = (seg.dir_v.len() - 1) / 2;
            for i in 0..n {
                let u0 = seg.dir_v[2 * i] - de;
                let um = seg.dir_v[2 * i + 1] - de;
                let u1 = seg.dir_v[2 * i + 2] - de;
                let k1y = d * z;
                let k1z = u0 * y;
                let k2y = d * (z + 0.5 * h * k1z);
                let k2z = um * (y + 0.5 * h * k1y);
                let k3y = d * (z + 0.5 * h * k2z);
                let k3z = um * (y + 0.5 * h * k2y);
                let k4y = d * (z + h * k3z);
                let k4z = u1 * (y + h * k3y);
                y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
                z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
                let mag = y.norm().max(z.norm());
                if mag > guard {
                    y /= mag;
                    z /= mag;
                    log_scale += mag.ln();
                }
            }
        }
        if !(y.is_finite() && z.is_finite()) {
            return Err(PtError::Overflow(format!(
                "non-finite solution on the ray at angle {} from R = {}",
                self.ray.alpha, self.radius
            )));
        }
        Ok((y, z, log_scale))
    }
}

/// Right turning point `E^{1/q} exp(i(K pi/q - pi/2))` of the analytic family
/// when it lies strictly below the real axis.
fn lower_turning_point(def: &Deformation, energy: f64) -> Option<Complex64> {
    let Family::Analytic { k } = def.family else { return None };
    let q = def.degree();
    let beta = k as f64 * PI / q - FRAC_PI_2;
    (beta < -1e-9).then(|| Complex64::from_polar(energy.powf(1.0 / q), beta))
}

/// Matching data at the end of the inward paths for one energy.
#[derive(Debug, Clone, Copy)]
pub struct Matching {
    pub left: (Complex64, Complex64),
    pub right: (Complex64, Complex64),
    /// `psi_L psi_R' - psi_R psi_L'`, analytic in `E` for a fixed grid.
    pub raw: Complex64,
    /// `raw` divided by `|(psi_L, psi_L')| |(psi_R, psi_R')|`; at most 1 in modulus.
    pub normalized: Complex64,
}

/// A shooting problem with the integration radius frozen, so the mismatch is an
/// analytic function of `E`.
pub struct Shooter {
    pub deformation: Deformation,
    pub controls: ShootControls,
    left: RayGrid,
    right: RayGrid,
}

impl Shooter {
    /// Prepare grids for energies near `energy`.
    pub fn new(def: &Deformation, energy: Complex64, controls: &ShootControls) -> Result<Self> {
        let (l, r) = rays_with_offset(def, controls.ray_offset)?;
        let e = Complex64::new(energy.norm().max(1.0), 0.0);
        let radius = l
            .start_radius(e, controls.action, controls.r_min)
            .max(r.start_radius(e, controls.action, controls.r_min));
        let turning = lower_turning_point(def, e.re);
        Ok(Self {
            deformation: *def,
            controls: *controls,
            left: RayGrid::new(def, l, radius, turning.map(|x| -x.conj()), controls.steps)?,
            right: RayGrid::new(def, r, radius, turning, controls.steps)?,
        })
    }

    pub fn radius(&self) -> f64 {
        self.right.radius
    }

    /// Multiply the left and right seeds by nonzero constants.
    pub fn with_seed_scale(mut self, left: Complex64, right: Complex64) -> Result<Self> {
        if left.norm() == 0.0 || right.norm() == 0.0 || !(left.is_finite() && right.is_finite()) {
            return domain("seed scale must be finite and nonzero");
        }
        self.left.seed = (self.left.seed.0 * left, self.left.seed.1 * left);
        self.right.seed = (self.right.seed.0 * right, self.right.seed.1 * right);
        Ok(self)
    }

    pub fn integrate_ray(&self, energy: Complex64, side: Side) -> Result<(Complex64, Complex64)> {
        let grid = match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        };
        let (psi, dpsi, _) = grid.shoot(energy, self.controls.overflow_guard)?;
        Ok((psi, dpsi))
    }

    pub fn matching(&self, energy: Complex64) -> Result<Matching> {
        let (pl, dl, sl) = self.left.shoot(energy, self.controls.overflow_guard)?;
        let (pr, dr, sr) = self.right.shoot(energy, self.controls.overflow_guard)?;
        let w = pl * dr - pr * dl;
        let norm = (pl.norm_sqr() + dl.norm_sqr()).sqrt() * (pr.norm_sqr() + dr.norm_sqr()).sqrt();
        let normalized = if norm > 0.0 { w / norm } else { w };
        Ok(Matching {
            left: (pl, dl),
            right: (pr, dr),
            raw: w * (sl + sr).exp(),
            normalized,
        })
    }

    /// Complex secant on the raw mismatch from `guess`.
    pub fn find(&self, guess: Complex64) -> Result<Complex64> {
        let c = &self.controls;
        let scale = guess.norm().max(1.0);
        let mut e0 = guess;
        let mut e1 = guess + Complex64::new(1e-4, 1e-5) * scale;
        let m0 = self.matching(e0)?;
        if m0.normalized.norm() < c.tol_w * 1e-2 {
            return Ok(e0);
        }
        let mut w0 = m0.raw;
        let mut best = (e0, m0.normalized.norm());
        for _ in 0..c.max_iter {
            let m1 = self.matching(e1)?;
            let w1 = m1.raw;
            let res = m1.normalized.norm();
            if res < best.1 {
                best = (e1, res);
            }
            if res < c.tol_w {
                return Ok(e1);
            }
            let dw = w1 - w0;
            if dw.norm() == 0.0 || !dw.is_finite() {
                break;
            }
            let step = w1 * (e1 - e0) / dw;
            if !step.is_finite() {
                break;
            }
            e0 = e1;
            w0 = w1;
            e1 -= step;
            if step.norm() < c.tol_e * e1.norm().max(1.0) {
                return Ok(e1);
            }
        }
        Err(PtError::NoConvergence {
            iterations: c.max_iter,
            best: best.0,
            residual: best.1,
        })
    }
}

impl Shooter {
    /// Number of eigenvalues inside the rectangle with corners `lower_left` and
    /// `upper_right`, from the winding of `W` around its boundary.
    pub fn count_zeros(&self, lower_left: Complex64, upper_right: Complex64) -> Result<usize> {
        let (a, b) = (lower_left, upper_right);
        if !(b.re > a.re && b.im > a.im) {
            return domain("zero-count rectangle must have positive width and height");
        }
        let corners = [
            a,
            Complex64::new(b.re, a.im),
            b,
            Complex64::new(a.re, b.im),
            a,
        ];
        let min_len = 1e-9 * (b - a).norm();
        let mut total = 0.0;
        for w in corners.windows(2) {
            let pts: Vec<Complex64> = (0..=32).map(|j| w[0] + (w[1] - w[0]) * (j as f64 / 32.0)).collect();
            let vals: Vec<Complex64> = pts
                .iter()
                .map(|&z| self.matching(z).map(|m| m.normalized))
                .collect::<Result<_>>()?;
            for j in 0..32 {
                total += self.arg_change(pts[j], pts[j + 1], vals[j], vals[j + 1], min_len)?;
            }
        }
        let turns = total / (2.0 * std::f64::consts::PI);
        if (turns - turns.round()).abs() > 0.1 || turns.round() < 0.0 {
            return Err(PtError::Precision(format!("winding of W is not an integer: {turns}")));
        }
        Ok(turns.round() as usize)
    }

    /// Phase increment of `W` from `za` to `zb`, bisecting until each piece
    /// turns by less than a quarter turn and agrees with its halves.
    fn arg_change(&self, za: Complex64, zb: Complex64, wa: Complex64, wb: Complex64, min_len: f64) -> Result<f64> {
        let zm = 0.5 * (za + zb);
        let wm = self.matching(zm)?.normalized;
        let d = (wb / wa).arg();
        let (d1, d2) = ((wm / wa).arg(), (wb / wm).arg());
        let quarter = 0.25 * std::f64::consts::PI;
        if d1.abs() < quarter && d2.abs() < quarter && (d1 + d2 - d).abs() < 1e-6 {
            return Ok(d);
        }
        if (zb - za).norm() < min_len {
            return Err(PtError::Precision(format!("eigenvalue on the counting contour near {za}")));
        }
        Ok(self.arg_change(za, zm, wa, wm, min_len)? + self.arg_change(zm, zb, wm, wb, min_len)?)
    }
}

/// Normalized mismatch `W(E)`; zero exactly at eigenvalues.
pub fn mismatch(def: &Deformation, energy: Complex64) -> Result<Complex64> {
    let s = Shooter::new(def, energy, &ShootControls::default())?;
    Ok(s.matching(energy)?.normalized)
}

/// `(psi, dpsi/dx)` at the matching point of the solution decaying along the `side` ray.
pub fn integrate_ray(
    def: &Deformation,
    energy: Complex64,
    side: Side,
    controls: &ShootControls,
) -> Result<(Complex64, Complex64)> {
    Shooter::new(def, energy, controls)?.integrate_ray(energy, side)
}

/// Refine an eigenvalue from a nearby guess.
pub fn find_eigenvalue(def: &Deformation, guess: Complex64, controls: &ShootControls) -> Result<Complex64> {
    Shooter::new(def, guess, controls)?.find(guess)
}

/// Difference of the normalized mismatch between `N` and `2N` RK4 steps.
pub fn halving_check(def: &Deformation, energy: Complex64, controls: &ShootControls) -> Result<f64> {
    let coarse = Shooter::new(def, energy, controls)?.matching(energy)?.normalized;
    let fine_ctl = ShootControls {
        steps: 2 * controls.steps,
        ..*controls
    };
    let fine = Shooter::new(def, energy, &fine_ctl)?.matching(energy)?.normalized;
    Ok((coarse - fine).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shooting,
    Matrix,
    WkbLo,
    WkbNlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Shooting => "shooting",
            Method::Matrix => "matrix",
            Method::WkbLo => "wkb_lo",
            Method::WkbNlo => "wkb_nlo",
        }
    }
}

/// Relative size of `Im E` below which an eigenvalue counts as real.
pub const TOL_REAL: f64 = 1e-6;

pub fn is_real(energy: Complex64) -> bool {
    energy.im.abs() <= TOL_REAL * energy.norm().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub epsilon: f64,
    pub level: usize,
    pub energy: Complex64,
    pub is_real: bool,
    pub method: Method,
}

impl EigenvalueRecord {
    pub fn new(epsilon: f64, level: usize, energy: Complex64, method: Method) -> Self {
        Self {
            epsilon,
            level,
            energy,
            is_real: is_real(energy),
            method,
        }
    }
}

/// Real eigenvalues in `[e_min, e_max]`, located from local minima of `|W|` on a
/// grid of spacing `de` and refined by secant iteration.
pub fn scan_real(
    def: &Deformation,
    e_min: f64,
    e_max: f64,
    de: f64,
    controls: &ShootControls,
) -> Result<Vec<f64>> {
    if !(e_max > e_min) || !(de > 0.0) {
        return domain("scan needs e_max > e_min and de > 0");
    }
    let shooter = Shooter::new(def, Complex64::new(e_max, 0.0), controls)?;
    let n = ((e_max - e_min) / de).ceil() as usize + 1;
    let grid: Vec<f64> = (0..=n).map(|i| e_min + de * i as f64).collect();
    let w: Vec<f64> = grid
        .iter()
        .map(|&e| shooter.matching(Complex64::new(e, 0.0)).map(|m| m.normalized.norm()))
        .collect::<Result<_>>()?;
    let mut found: Vec<f64> = Vec::new();
    for j in 1..n {
        if !(w[j] < w[j - 1] && w[j] <= w[j + 1]) {
            continue;
        }
        // a grid frozen at e_max stretches the forbidden region at low energy
        let Ok(e) = find_eigenvalue(def, Complex64::new(grid[j], 0.0), controls) else {
            continue;
        };
        if is_real(e)
            && e.re >= grid[j - 1]
            && e.re <= grid[j + 1]
            && found.iter().all(|f| (f - e.re).abs() > 1e-8 * e.re.abs().max(1.0))
        {
            found.push(e.re);
        }
    }
    found.sort_by(f64::total_cmp);
    Ok(found)
}

/// Lowest `n` real eigenvalues, scanning upward until enough are found.
pub fn lowest_real(def: &Deformation, n: usize, controls: &ShootControls) -> Result<Vec<f64>> {
    let mut lo = 1e-3;
    let mut de = 0.05;
    let mut out: Vec<f64> = Vec::new();
    let mut rounds = 0;
    while out.len() < n {
        let hi = lo + 200.0 * de;
        for e in scan_real(def, lo, hi, de, controls)? {
            if out.iter().all(|f| (f - e).abs() > 1e-8 * e.abs().max(1.0)) {
                out.push(e);
            }
        }
        out.sort_by(f64::total_cmp);
        if out.len() >= 2 {
            let gaps = out.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            de = (0.1 * gaps).max(de);
        }
        lo = hi - de;
        rounds += 1;
        if rounds > 200 {
            return Err(PtError::NoConvergence {
                iterations: rounds,
                best: Complex64::new(lo, 0.0),
                residual: f64::NAN,
            });
        }
    }
    out.truncate(n);
    Ok(out)
}

/// Eigenvalues of `p^2 + |x|^P (ix)^eps` posed on the real axis.
///
/// The Hermitian spectrum at `eps = 0` is located by a scan and continued in
/// `eps` steps of at most 0.05.
pub fn real_line_solve(
    p: f64,
    epsilon: f64,
    n_levels: usize,
    controls: &ShootControls,
) -> Result<Vec<EigenvalueRecord>> {
    if !(epsilon.abs() < 2.0) {
        return domain(format!(
            "real-axis boundary condition undefined for |eps| >= 2, got {epsilon}"
        ));
    }
    let base = Deformation::nonanalytic(p, 0.0)?;
    let mut levels: Vec<Complex64> = lowest_real(&base, n_levels, controls)?
        .into_iter()
        .map(|e| Complex64::new(e, 0.0))
        .collect();
    let steps = (epsilon.abs() / 0.05).ceil() as usize;
    for s in 1..=steps {
        let eps = epsilon * s as f64 / steps as f64;
        let def = Deformation::nonanalytic(p, eps)?;
        levels = levels
            .iter()
            .map(|&g| find_eigenvalue(&def, g, controls))
            .collect::<Result<_>>()?;
    }
    levels.sort_by(|a, b| a.re.total_cmp(&b.re));
    Ok(levels
        .into_iter()
        .enumerate()
        .map(|(n, e)| EigenvalueRecord::new(epsilon, n, e, Method::Shooting))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn wedge_angles() {
        let w = wedges(1, 0.0).unwrap();
        assert_relative_eq!(w.theta_right, 0.0);
        assert_relative_eq!(w.opening, FRAC_PI_2);
        let w = wedges(1, -1.0).unwrap();
        assert_relative_eq!(w.theta_right, PI / 6.0, epsilon = 1e-15);
        assert_relative_eq!(w.theta_left, -PI - PI / 6.0, epsilon = 1e-15);
        assert_relative_eq!(wedges(2, 0.0).unwrap().opening, PI / 3.0);
        assert!(matches!(wedges(1, -4.0), Err(PtError::DegenerateWedge(_))));
    }

    #[test]
    fn seed_values() {
        let (psi, dpsi) = asymptotic_seed(c(3.0), 1, 0.0, true).unwrap();
        assert_relative_eq!(psi.norm(), (-4.5f64).exp(), max_relative = 1e-14);
        assert!((dpsi + 3.0 * psi).norm() < 1e-14);
        assert!(matches!(asymptotic_seed(c(3.0), 1, 0.0, false), Err(PtError::GrowingSeed)));
    }

    #[test]
    fn seed_decays_along_cubic_wedge() {
        let w = wedges(1, 1.0).unwrap();
        assert_relative_eq!(w.theta_right, -PI / 10.0, epsilon = 1e-15);
        let at = |r: f64| asymptotic_seed(Complex64::from_polar(r, w.theta_right), 1, 1.0, true).unwrap();
        let mut prev = at(2.0).0.norm();
        for r in [2.5, 3.0, 4.0, 6.0] {
            let now = at(r).0.norm();
            assert!(now < prev);
            prev = now;
        }
        // the derivative is consistent with a difference quotient along the ray
        let x = Complex64::from_polar(3.0, w.theta_right);
        let h = 1e-6 * Complex64::from_polar(1.0, w.theta_right);
        let fd = (asymptotic_seed(x + h, 1, 1.0, true).unwrap().0
            - asymptotic_seed(x - h, 1, 1.0, true).unwrap().0)
            / (2.0 * h);
        let d = at(3.0).1;
        assert!((fd - d).norm() < 1e-6 * d.norm());
    }

    #[test]
    fn rays_agree_with_potential() {
        for (k, e) in [(1, 0.0), (1, 1.0), (2, -0.7), (3, 0.4)] {
            let def = Deformation::analytic(k, e).unwrap();
            let (l, r) = rays(&def).unwrap();
            for ray in [l, r] {
                let x = Complex64::from_polar(1.7, ray.alpha);
                let theta = ray.alpha + FRAC_PI_2;
                let v = def.potential(x, theta);
                assert!((v - ray.coeff * 1.7f64.powf(ray.power)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn harmonic_mismatch() {
        let def = Deformation::analytic(1, 0.0).unwrap();
        assert!(mismatch(&def, c(1.0)).unwrap().norm() < 1e-6);
        assert!(mismatch(&def, c(3.0)).unwrap().norm() < 1e-6);
        assert!(mismatch(&def, c(2.0)).unwrap().norm() > 0.1);
    }

    #[test]
    fn harmonic_levels() {
        let def = Deformation::analytic(1, 0.0).unwrap();
        let ctl = ShootControls::default();
        for n in 0..=10 {
            let e = find_eigenvalue(&def, c(2.0 * n as f64 + 1.3), &ctl).unwrap();
            assert!((e - c(2.0 * n as f64 + 1.0)).norm() < 1e-6, "n={n}: {e}");
        }
    }

    #[test]
    fn cubic_ground_state() {
        let def = Deformation::analytic(1, 1.0).unwrap();
        let e = find_eigenvalue(&def, c(1.1), &ShootControls::default()).unwrap();
        assert!((e - c(1.156_267_072)).norm() < 1e-7, "{e}");
    }

    #[test]
    fn quartic_ground_state() {
        let def = Deformation::analytic(2, 0.0).unwrap();
        let e = find_eigenvalue(&def, c(1.0), &ShootControls::default()).unwrap();
        assert!((e - c(1.060_362_090)).norm() < 1e-7, "{e}");
        assert!(mismatch(&def, e).unwrap().norm() < 1e-5);
    }

    #[test]
    fn halving_is_small() {
        let def = Deformation::analytic(1, 1.0).unwrap();
        let d = halving_check(&def, c(4.1), &ShootControls::default()).unwrap();
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn scan_finds_harmonic_levels() {
        let def = Deformation::analytic(1, 0.0).unwrap();
        let found = scan_real(&def, 0.2, 8.0, 0.1, &ShootControls::default()).unwrap();
        assert_eq!(found.len(), 4);
        for (n, e) in found.iter().enumerate() {
            assert_relative_eq!(*e, 2.0 * n as f64 + 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn real_line_harmonic_and_pt() {
        let ctl = ShootControls::default();
        let recs = real_line_solve(2.0, 0.0, 4, &ctl).unwrap();
        for r in &recs {
            assert_relative_eq!(r.energy.re, 2.0 * r.level as f64 + 1.0, epsilon = 1e-7);
        }
        let recs = real_line_solve(3.0, -0.5, 4, &ctl).unwrap();
        assert!(recs.iter().all(|r| r.is_real), "{recs:?}");
        assert!(real_line_solve(2.0, 2.0, 2, &ctl).is_err());
    }

    #[test]
    fn zero_count_matches_harmonic_levels() {
        let def = Deformation::analytic(1, 0.0).unwrap();
        let sh = Shooter::new(&def, c(12.0), &ShootControls::default()).unwrap();
        let n = sh
            .count_zeros(Complex64::new(-2.0, -4.0), Complex64::new(10.0, 4.0))
            .unwrap();
        assert_eq!(n, 5);
    }
}
