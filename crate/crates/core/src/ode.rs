//! Dormand-Prince 5(4) embedded Runge-Kutta step for small state vectors.

/// State vectors the embedded stepper can operate on.
pub trait OdeState: Copy {
    /// `self + a * other`
    fn axpy(&self, a: f64, other: &Self) -> Self;
    /// Weighted RMS norm of `err` relative to the magnitudes of `a` and `b`.
    fn error_norm(err: &Self, a: &Self, b: &Self, rtol: f64, atol: f64) -> f64;
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Result of one trial step.
pub struct Step<S> {
    pub y: S,
    pub err: S,
}

/// One Dormand-Prince step of size `h` from `(t, y)`. The right-hand side may
/// fail (e.g. near a singular point); the failure is propagated.
pub fn dopri_step<S, E, F>(f: &mut F, t: f64, y: &S, h: f64) -> Result<Step<S>, E>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S, E> + ?Sized,
{
    let k1 = f(t, y)?;
    let k2 = f(t + C2 * h, &y.axpy(h * A21, &k1))?;
    let y3 = y.axpy(h * A31, &k1).axpy(h * A32, &k2);
    let k3 = f(t + C3 * h, &y3)?;
    let y4 = y.axpy(h * A41, &k1).axpy(h * A42, &k2).axpy(h * A43, &k3);
    let k4 = f(t + C4 * h, &y4)?;
    let y5 = y
        .axpy(h * A51, &k1)
        .axpy(h * A52, &k2)
        .axpy(h * A53, &k3)
        .axpy(h * A54, &k4);
    let k5 = f(t + C5 * h, &y5)?;
    let y6 = y
        .axpy(h * A61, &k1)
        .axpy(h * A62, &k2)
        .axpy(h * A63, &k3)
        .axpy(h * A64, &k4)
        .axpy(h * A65, &k5);
    let k6 = f(t + h, &y6)?;
    let y_new = y
        .axpy(h * B1, &k1)
        .axpy(h * B3, &k3)
        .axpy(h * B4, &k4)
        .axpy(h * B5, &k5)
        .axpy(h * B6, &k6);
    let k7 = f(t + h, &y_new)?;
    let zero = y.axpy(-1.0, y);
    let err = zero
        .axpy(h * E1, &k1)
        .axpy(h * E3, &k3)
        .axpy(h * E4, &k4)
        .axpy(h * E5, &k5)
        .axpy(h * E6, &k6)
        .axpy(h * E7, &k7);
    Ok(Step { y: y_new, err })
}

/// Step-size update factor for a 5(4) pair.
pub fn step_factor(err_norm: f64) -> f64 {
    if err_norm == 0.0 {
        5.0
    } else {
        (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Copy, Debug)]
    struct V2([f64; 2]);

    impl OdeState for V2 {
        fn axpy(&self, a: f64, o: &Self) -> Self {
            V2([self.0[0] + a * o.0[0], self.0[1] + a * o.0[1]])
        }
        fn error_norm(err: &Self, a: &Self, b: &Self, rtol: f64, atol: f64) -> f64 {
            let mut s = 0.0;
            for i in 0..2 {
                let sc = atol + rtol * a.0[i].abs().max(b.0[i].abs());
                s += (err.0[i] / sc).powi(2);
            }
            (s / 2.0).sqrt()
        }
    }

    #[test]
    fn fifth_order_on_oscillator() {
        // y'' = -y over one unit of time with 10 and 20 steps
        let mut f = |_t: f64, y: &V2| -> Result<V2, ()> { Ok(V2([y.0[1], -y.0[0]])) };
        let run = |n: usize, f: &mut dyn FnMut(f64, &V2) -> Result<V2, ()>| {
            let h = 1.0 / n as f64;
            let mut y = V2([1.0, 0.0]);
            for i in 0..n {
                y = dopri_step(f, i as f64 * h, &y, h).unwrap().y;
            }
            (y.0[0] - 1f64.cos()).abs()
        };
        let e1 = run(10, &mut f);
        let e2 = run(20, &mut f);
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed order {order}");
    }
}
