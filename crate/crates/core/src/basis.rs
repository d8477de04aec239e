//! Harmonic-oscillator basis representation of `H = p^2 + x^2 (ix)^eps`,
//! dense diagonalization of its truncations, and the two-level pinch model.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PtError, Result};
use crate::quad::kronrod_nodes;
use crate::special::{hermite_functions, hermite_support, ln_gamma, EULER_GAMMA};

/// Half-line moments `int_0^inf psi_m psi_n x^a dx` for `0 <= m, n <= n_max`.
#[derive(Debug, Clone)]
pub struct HalfMoments {
    n_max: usize,
    table: Vec<f64>,
}

impl HalfMoments {
    pub fn new(n_max: usize, a: f64) -> Result<Self> {
        if !(a > -1.0) {
            return Err(PtError::Domain(format!("moment power must exceed -1, got {a}")));
        }
        let mut breaks = vec![0.0];
        // geometric grading toward the x^a kink at the origin
        breaks.extend((1..=24).rev().map(|k| 0.5f64.powi(k)));
        let top = hermite_support(n_max);
        let width = 0.125;
        let mut x = 1.0;
        while x < top {
            x += width;
            breaks.push(x);
        }
        let n = n_max + 1;
        let mut table = vec![0.0; n * n];
        for w in breaks.windows(2) {
            for (x, wt) in kronrod_nodes(w[0], w[1]) {
                let psi = hermite_functions(n_max, x);
                let f = wt * x.powf(a);
                for i in 0..n {
                    let fi = f * psi[i];
                    for j in i..n {
                        table[i * n + j] += fi * psi[j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                table[i * n + j] = table[j * n + i];
            }
        }
        Ok(Self { n_max, table })
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.table[m * (self.n_max + 1) + n]
    }
}

/// `<m|p^2|n>` in the oscillator basis.
pub fn kinetic_element(m: usize, n: usize) -> f64 {
    let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
    if lo == hi {
        lo as f64 + 0.5
    } else if hi == lo + 2 {
        -0.5 * (((lo + 1) * (lo + 2)) as f64).sqrt()
    } else {
        0.0
    }
}

/// `<m| x^2 (ix)^eps |n>` from a half-line moment `h = int_0^inf psi_m psi_n x^{2+eps}`.
///
/// Equals `i^{m+n} cos(pi (eps - m - n)/2) 2h`; written by parity so that even
/// entries are exactly real and odd entries exactly imaginary.
fn potential_element(m: usize, n: usize, epsilon: f64, h: f64) -> Complex64 {
    let half = 0.5 * PI * epsilon;
    if (m + n).is_multiple_of(2) {
        Complex64::new(2.0 * half.cos() * h, 0.0)
    } else {
        Complex64::new(0.0, 2.0 * half.sin() * h)
    }
}

/// Single matrix element `<m|H|n>`.
pub fn matrix_element(m: usize, n: usize, epsilon: f64) -> Result<Complex64> {
    let hm = HalfMoments::new(m.max(n), 2.0 + epsilon)?;
    Ok(kinetic_element(m, n) + potential_element(m, n, epsilon, hm.get(m, n)))
}

/// `<n| x^2 ln|x| |n> = a_n - (gamma/2 + ln 2)(n + 1/2)`.
pub fn log_diag_element(n: usize) -> f64 {
    let nf = n as f64;
    let sum: f64 = (0..=n.div_ceil(2)).map(|k| 1.0 / (2.0 * k as f64 - 1.0)).sum();
    let a_n = nf + 1.0 + (n / 2) as f64 + (nf + 0.5) * sum;
    a_n - (0.5 * EULER_GAMMA + std::f64::consts::LN_2) * (nf + 0.5)
}

/// `<2n-1| (i pi/2) x^2 sgn(x) |2n> = (i/3)(8n+1) [Gamma(n+1/2)^2 / (n! (n-1)!)]^{1/2}`.
/// Returns the imaginary part.
pub fn sgn_offdiag_element(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(PtError::Domain("off-diagonal element needs n >= 1".into()));
    }
    let nf = n as f64;
    let log_ratio = 2.0 * ln_gamma(nf + 0.5) - ln_gamma(nf + 1.0) - ln_gamma(nf);
    Ok((8.0 * nf + 1.0) / 3.0 * (0.5 * log_ratio).exp())
}

/// `M_{m,n} = <m|H|n>` for `0 <= m, n <= k_trunc`.
#[derive(Debug, Clone)]
pub struct TruncatedMatrix {
    pub order: usize,
    pub epsilon: f64,
    pub entries: DMatrix<Complex64>,
}

impl TruncatedMatrix {
    pub fn new(k_trunc: usize, epsilon: f64) -> Result<Self> {
        let order = k_trunc + 1;
        let hm = HalfMoments::new(k_trunc, 2.0 + epsilon)?;
        let entries = DMatrix::from_fn(order, order, |m, n| {
            kinetic_element(m, n) + potential_element(m, n, epsilon, hm.get(m, n))
        });
        Ok(Self {
            order,
            epsilon,
            entries,
        })
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// An eigenpair with its residual `|M v - lambda v|` for unit `v`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

/// Diagonal similarity `D^{-1} M D` equalizing row and column norms (Parlett-Reinsch).
fn balance(m: &mut DMatrix<Complex64>) -> Vec<f64> {
    let n = m.nrows();
    let mut d = vec![1.0; n];
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].norm();
                    r += m[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut c2, mut r2) = (c, r);
            while c2 < r2 / radix {
                c2 *= radix;
                r2 /= radix;
                f *= radix;
            }
            while c2 >= r2 * radix {
                c2 /= radix;
                r2 *= radix;
                f /= radix;
            }
            if (c2 + r2) < 0.95 * s {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
    d
}

/// All eigenpairs of a dense complex matrix, sorted by real part.
///
/// Balancing, Hessenberg reduction and shifted QR to complex Schur form `Q T Q^*`;
/// eigenvectors by back-substitution in `T`. Each pair is checked against the
/// original matrix: `|M v - lambda v| <= 1e-8 |M|`.
pub fn eigen_decompose(m: &DMatrix<Complex64>) -> Result<Vec<EigenPair>> {
    let n = m.nrows();
    let norm = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut b = m.clone();
    let d = balance(&mut b);
    let schur = nalgebra::linalg::Schur::try_new(b, f64::EPSILON, 100 * n.max(1))
        .ok_or_else(|| PtError::Eigen(format!("QR iteration cap reached for order {n}")))?;
    let (q, t) = schur.unpack();
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: Complex64 = (i + 1..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut den = t[(i, i)] - lambda;
            if den.norm() < f64::EPSILON * norm {
                den = Complex64::new(f64::EPSILON * norm, 0.0);
            }
            y[i] = -s / den;
        }
        // v = D Q y, undoing the balancing
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| d[i] * (0..=k).map(|j| q[(i, j)] * y[j]).sum::<Complex64>())
            .collect();
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= vn);
        let residual = (0..n)
            .map(|i| {
                let mv: Complex64 = (0..n).map(|j| m[(i, j)] * v[j]).sum();
                (mv - lambda * v[i]).norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        if residual > 1e-8 * norm.max(1.0) {
            return Err(PtError::Eigen(format!(
                "eigenpair {k} residual {residual:.3e} exceeds 1e-8 |M| = {:.3e}",
                1e-8 * norm
            )));
        }
        pairs.push(EigenPair {
            value: lambda,
            vector: v,
            residual,
        });
    }
    pairs.sort_by(|a, b| a.value.re.total_cmp(&b.value.re));
    Ok(pairs)
}

/// Eigenvalues of the `(k_trunc + 1)`-dimensional truncation, sorted by real part.
pub fn truncated_spectrum(k_trunc: usize, epsilon: f64) -> Result<Vec<Complex64>> {
    if !(epsilon > -1.0 && epsilon < 2.0) {
        return Err(PtError::Domain(format!(
            "matrix representation needs -1 < eps < 2, got {epsilon}"
        )));
    }
    let tm = TruncatedMatrix::new(k_trunc, epsilon)?;
    Ok(eigen_decompose(&tm.entries)?.into_iter().map(|p| p.value).collect())
}

/// Spectra of several truncation orders in parallel.
pub fn truncation_sequence(orders: &[usize], epsilon: f64) -> Result<Vec<(usize, Vec<Complex64>)>> {
    orders
        .par_iter()
        .map(|&k| truncated_spectrum(k, epsilon).map(|s| (k, s)))
        .collect()
}

/// 2x2 model of the `(2n-1, 2n)` pair: `[[A - E, iB], [iB, C - E]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelModel {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TwoLevelModel {
    /// Large-`n`, small-`eps` entries.
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        if n < 1 {
            return Err(PtError::Domain("two-level model needs n >= 1".into()));
        }
        let nf = n as f64;
        let l = (2.0 * nf).ln();
        Ok(Self {
            n,
            a: 4.0 * nf - 1.0 + epsilon * (nf - 0.5) * l,
            b: 8.0 / 3.0 * epsilon * nf,
            c: 4.0 * nf + 1.0 + epsilon * nf * l,
        })
    }

    /// `(E+, E-) = ((A + C) +- sqrt((A - C)^2 - 4 B^2)) / 2`.
    pub fn energies(&self) -> (Complex64, Complex64) {
        let disc = Complex64::new((self.a - self.c).powi(2) - 4.0 * self.b * self.b, 0.0).sqrt();
        let mid = 0.5 * (self.a + self.c);
        (mid + 0.5 * disc, mid - 0.5 * disc)
    }
}

pub fn two_level_energies(n: usize, epsilon: f64) -> Result<(Complex64, Complex64)> {
    Ok(TwoLevelModel::new(n, epsilon)?.energies())
}

/// Magnitude `3/(8n)` of `eps` at which the two-level model degenerates.
pub fn pinch_epsilon_model(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(PtError::Domain("pinch model needs n >= 1".into()));
    }
    Ok(3.0 / (8.0 * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};
    use approx::assert_relative_eq;

    /// Independent oracle: adaptive quadrature of psi_m psi_n w(x) over the real line.
    fn oracle<W: Fn(f64) -> f64>(m: usize, n: usize, w: W) -> f64 {
        let f = |x: f64| {
            let h = hermite_functions(m.max(n), x);
            h[m] * h[n] * w(x)
        };
        let l = hermite_support(m.max(n)) + 2.0;
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-14,
            max_intervals: 20_000,
        };
        integrate(&f, -l, 0.0, opts).unwrap().value + integrate(&f, 0.0, l, opts).unwrap().value
    }

    #[test]
    fn harmonic_limit_is_diagonal() {
        assert_relative_eq!(matrix_element(0, 0, 0.0).unwrap().re, 1.0, epsilon = 1e-12);
        let tm = TruncatedMatrix::new(12, 0.0).unwrap();
        for m in 0..=12 {
            for n in 0..=12 {
                let want = if m == n { 2.0 * n as f64 + 1.0 } else { 0.0 };
                assert!((tm.entries[(m, n)] - want).norm() < 1e-12, "({m},{n})");
            }
        }
        let spec = truncated_spectrum(12, 0.0).unwrap();
        for (n, e) in spec.iter().enumerate() {
            assert!((e - (2.0 * n as f64 + 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn element_matches_quadrature_oracle() {
        for (m, n, eps) in [(0, 0, 0.5), (1, 2, 0.5), (3, 7, -0.5), (10, 12, 1.3), (17, 17, -0.5)] {
            let re = oracle(m, n, |x: f64| x.abs().powf(2.0 + eps) * (0.5 * PI * eps).cos());
            let im = oracle(m, n, |x: f64| x.abs().powf(2.0 + eps) * x.signum() * (0.5 * PI * eps).sin());
            let want = Complex64::new(re, im) + kinetic_element(m, n);
            let got = matrix_element(m, n, eps).unwrap();
            assert!((got - want).norm() < 1e-10, "({m},{n},{eps}): {got} vs {want}");
        }
    }

    #[test]
    fn kinetic_ladder() {
        // <n|p^2 + x^2|n> = 2n + 1 with <n|x^2|n> = n + 1/2
        for n in 0..6 {
            assert_relative_eq!(kinetic_element(n, n), n as f64 + 0.5);
        }
        assert_relative_eq!(kinetic_element(0, 2), -(2f64).sqrt() / 2.0);
        assert_eq!(kinetic_element(1, 2), 0.0);
    }

    #[test]
    fn log_diagonal_matches_oracle() {
        assert_relative_eq!(
            log_diag_element(0),
            0.5 - EULER_GAMMA / 4.0 - std::f64::consts::LN_2 / 2.0,
            epsilon = 1e-15
        );
        for n in 0..=12 {
            let want = oracle(n, n, |x: f64| if x == 0.0 { 0.0 } else { x * x * x.abs().ln() });
            assert!((log_diag_element(n) - want).abs() < 1e-9, "n={n}: {} vs {want}", log_diag_element(n));
        }
    }

    #[test]
    fn sgn_offdiagonal_matches_oracle() {
        let s1 = sgn_offdiag_element(1).unwrap();
        assert_relative_eq!(s1, 1.5 * PI.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(s1, 2.6587, epsilon = 1e-4);
        for n in [1, 2, 5, 8] {
            let want = 0.5 * PI * oracle(2 * n - 1, 2 * n, |x: f64| x * x * x.signum());
            assert!((sgn_offdiag_element(n).unwrap() - want).abs() < 1e-8, "n={n}");
        }
        assert!(sgn_offdiag_element(0).is_err());
    }

    #[test]
    fn cubic_ground_state_from_matrix() {
        let spec = truncated_spectrum(40, 1.0).unwrap();
        assert!((spec[0] - 1.156_267_072).norm() < 1e-3, "{}", spec[0]);
    }

    #[test]
    fn broken_phase_eigenvalues_pair_up() {
        let spec = truncated_spectrum(17, -0.5).unwrap();
        for e in &spec {
            if e.im.abs() > 1e-8 * e.norm() {
                assert!(spec.iter().any(|f| (f - e.conj()).norm() < 1e-8 * e.norm()), "{e}");
            }
        }
    }

    #[test]
    fn two_level_model() {
        let (p, m) = two_level_energies(3, 0.0).unwrap();
        assert_eq!((p.re, m.re), (13.0, 11.0));
        assert_relative_eq!(pinch_epsilon_model(4).unwrap(), 0.09375);
        assert_relative_eq!(pinch_epsilon_model(1).unwrap(), 0.375);
        // discriminant changes sign near |eps| = 3/(8n); the log terms shift it slightly
        let n = 4;
        let disc = |e: f64| {
            let t = TwoLevelModel::new(n, e).unwrap();
            (t.a - t.c).powi(2) - 4.0 * t.b * t.b
        };
        assert!(disc(-0.05) > 0.0 && disc(-0.15) < 0.0);
        let (p, m) = two_level_energies(n, -0.15).unwrap();
        assert!((p - m.conj()).norm() < 1e-12 && p.im.abs() > 0.0);
    }
}
