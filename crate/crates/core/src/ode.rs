//! Adaptive Dormand–Prince 5(4) integration for matrix- and vector-valued
//! ODEs.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// State of an ODE that the integrator can advance.
pub trait OdeState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);

    fn scale(&mut self, a: f64);

    /// RMS of `err` measured against `atol + rtol * max(|y0|, |y1|)` per
    /// component.
    fn error_norm(err: &Self, y0: &Self, y1: &Self, tol: &Tolerances) -> f64;
}

impl OdeState for DMatrix<Complex64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x.iter()) {
            *s += v * a;
        }
    }

    fn scale(&mut self, a: f64) {
        *self *= Complex64::new(a, 0.0);
    }

    fn error_norm(err: &Self, y0: &Self, y1: &Self, tol: &Tolerances) -> f64 {
        let mut acc = 0.0;
        for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
            let sc = tol.atol + tol.rtol * a.norm().max(b.norm());
            acc += (e.norm() / sc).powi(2);
        }
        (acc / err.len().max(1) as f64).sqrt()
    }
}

impl OdeState for Vector3<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }

    fn scale(&mut self, a: f64) {
        *self *= a;
    }

    fn error_norm(err: &Self, y0: &Self, y1: &Self, tol: &Tolerances) -> f64 {
        let mut acc = 0.0;
        for k in 0..3 {
            let sc = tol.atol + tol.rtol * y0[k].abs().max(y1[k].abs());
            acc += (err[k] / sc).powi(2);
        }
        (acc / 3.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub tol: Tolerances,
    /// Give up once a step shrinks below this fraction of `max(1, |t|)`.
    pub min_step_rel: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            tol: Tolerances::default(),
            min_step_rel: 1e-14,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        IntegratorOptions {
            tol: Tolerances {
                rtol,
                atol: rtol * 1e-3,
            },
            ..Default::default()
        }
    }
}

// Dormand–Prince tableau.
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
// b - b* (fifth minus embedded fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo<S: OdeState>(y: &S, h: f64, terms: &[(f64, &S)]) -> S {
    let mut out = y.clone();
    for &(c, k) in terms {
        if c != 0.0 {
            out.axpy(h * c, k);
        }
    }
    out
}

/// Integrate `dy/dt = rhs(t, y)` from `(t0, y0)` and hand the solution at
/// every time in `grid` to `observe`, in order.
///
/// Steps are truncated to land exactly on grid points, so no interpolation is
/// involved. `grid` must be non-decreasing and start at or after `t0`.
pub fn integrate<S, F, O>(
    mut rhs: F,
    t0: f64,
    y0: S,
    grid: &[f64],
    opts: &IntegratorOptions,
    mut observe: O,
) -> Result<()>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
    O: FnMut(usize, f64, &S) -> Result<()>,
{
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.first().is_some_and(|&t| t < t0) {
        return Err(Error::validation("time grid must be non-decreasing and start at t0"));
    }
    let Some(&t_end) = grid.last() else {
        return Ok(());
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&mut rhs, t, &y, &k1, &opts.tol, t_end - t0);
    let mut steps = 0usize;

    for (idx, &target) in grid.iter().enumerate() {
        while t < target {
            let remaining = target - t;
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };

            let k2 = rhs(t + C2 * h_try, &combo(&y, h_try, &[(A21, &k1)]));
            let k3 = rhs(t + C3 * h_try, &combo(&y, h_try, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(
                t + C4 * h_try,
                &combo(&y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = rhs(
                t + C5 * h_try,
                &combo(&y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                t + h_try,
                &combo(
                    &y,
                    h_try,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = combo(
                &y,
                h_try,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = rhs(t + h_try, &y_new);

            let mut err = k1.clone();
            err.scale(E1);
            for (c, k) in [(E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)] {
                err.axpy(c, k);
            }
            err.scale(h_try);
            let err_norm = S::error_norm(&err, &y, &y_new, &opts.tol);

            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepUnderflow { t, step: h_try });
            }

            if err_norm <= 1.0 {
                t = if last { target } else { t + h_try };
                y = y_new;
                k1 = k7;
                let fac = if err_norm == 0.0 {
                    5.0
                } else {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a truncated final step says nothing about the natural size
                if !last || fac < 1.0 {
                    h = h_try * fac;
                }
            } else {
                let fac = if err_norm.is_finite() {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.1, 1.0)
                } else {
                    0.1
                };
                h = h_try * fac;
            }
            if h < opts.min_step_rel * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, step: h });
            }
        }
        observe(idx, t, &y)?;
    }
    Ok(())
}

/// Starting step from the Hairer–Nørsett–Wanner heuristic.
fn initial_step<S, F>(rhs: &mut F, t: f64, y: &S, f0: &S, tol: &Tolerances, span: f64) -> f64
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    if span <= 0.0 {
        return 1.0;
    }
    let mut zero = y.clone();
    zero.scale(0.0);
    let d0 = S::error_norm(y, &zero, &zero, tol);
    let d1 = S::error_norm(f0, &zero, &zero, tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = combo(y, h0, &[(1.0, f0)]);
    let f1 = rhs(t + h0, &y1);
    let mut df = f1;
    df.axpy(-1.0, f0);
    let d2 = S::error_norm(&df, &zero, &zero, tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}
