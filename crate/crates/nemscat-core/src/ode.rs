//! Small fixed-size Runge-Kutta steppers for complex state vectors.
//!
//! The closed forms elsewhere in the crate are validated against these
//! integrators, so they stay deliberately plain: classic RK4 plus
//! step-doubling error control with local extrapolation.

use core::fmt;

use num_complex::Complex64 as C64;
// Inherent f64 math lives in std; no_std builds get it from the trait.
#[allow(unused_imports)]
use num_traits::Float;

/// Options for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Per-step relative tolerance.
    pub rel_tol: f64,
    /// Per-step absolute tolerance floor.
    pub abs_tol: f64,
    /// First trial step as a fraction of the span.
    pub initial_step_fraction: f64,
    /// Below `min_step_fraction * span` the step has underflowed.
    pub min_step_fraction: f64,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            initial_step_fraction: 1e-3,
            min_step_fraction: 1e-13,
            max_steps: 20_000_000,
        }
    }
}

/// Integration failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeError {
    /// Step control pushed the step below the useful resolution at `t`.
    StepUnderflow { t: f64, step: f64 },
    /// The step budget ran out before reaching the end of the span.
    MaxStepsExceeded { t: f64 },
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::StepUnderflow { t, step } => {
                write!(f, "step size underflow at t = {t} (step {step:e})")
            }
            OdeError::MaxStepsExceeded { t } => {
                write!(f, "step budget exhausted at t = {t}")
            }
        }
    }
}

impl core::error::Error for OdeError {}

/// One classic RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[C64; N], h: f64) -> [C64; N]
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &offset(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &offset(y, &k2, 0.5 * h));
    let k4 = f(t + h, &offset(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn offset<const N: usize>(y: &[C64; N], k: &[C64; N], h: f64) -> [C64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1 >= t0` with step-doubling RK4.
///
/// Each trial step is taken once at `h` and twice at `h/2`; the difference
/// estimates the local error, the accepted value is the Richardson
/// extrapolation of the half-step result.
pub fn integrate_adaptive<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: [C64; N],
    t1: f64,
    opts: &AdaptiveOptions,
) -> Result<[C64; N], OdeError>
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    let span = t1 - t0;
    debug_assert!(span >= 0.0, "adaptive integration runs forward only");
    if span == 0.0 {
        return Ok(y0);
    }

    let mut t = t0;
    let mut y = y0;
    let mut h = span * opts.initial_step_fraction;
    let h_min = span * opts.min_step_fraction;
    let mut steps = 0usize;

    while t < t1 {
        if steps >= opts.max_steps {
            return Err(OdeError::MaxStepsExceeded { t });
        }
        steps += 1;
        if h < h_min {
            return Err(OdeError::StepUnderflow { t, step: h });
        }
        let h_eff = h.min(t1 - t);

        let full = rk4_step(f, t, &y, h_eff);
        let half = rk4_step(f, t, &y, 0.5 * h_eff);
        let halves = rk4_step(f, t + 0.5 * h_eff, &half, 0.5 * h_eff);

        // Error norm relative to tolerance: <= 1 accepts the step.
        let mut err_norm = 0.0f64;
        for i in 0..N {
            let scale = opts.abs_tol
                + opts.rel_tol * y[i].norm().max(halves[i].norm()).max(1.0);
            let e = (full[i] - halves[i]).norm() / scale;
            if e > err_norm {
                err_norm = e;
            }
        }

        if err_norm <= 1.0 {
            t += h_eff;
            y = halves;
            for i in 0..N {
                // Fifth-order local extrapolation.
                y[i] += (halves[i] - full[i]) / 15.0;
            }
        }

        let factor: f64 = if err_norm > 0.0 {
            0.9 * err_norm.powf(-0.2)
        } else {
            5.0
        };
        h = h_eff * factor.clamp(0.2, 5.0);
    }

    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_matches_exponential() {
        // dy/dt = i y, y(0) = 1 -> y(t) = e^{it}.
        let f = |_t: f64, y: &[C64; 1]| [C64::i() * y[0]];
        let mut y = [C64::new(1.0, 0.0)];
        let n = 1000;
        let h = 1.0 / n as f64;
        for k in 0..n {
            y = rk4_step(&f, k as f64 * h, &y, h);
        }
        let expect = C64::new(0.0, 1.0).exp();
        assert!((y[0] - expect).norm() < 1e-12);
    }

    #[test]
    fn adaptive_matches_closed_solution() {
        // Damped rotation: y' = (i - 0.1) y over a long span.
        let f = |_t: f64, y: &[C64; 1]| [C64::new(-0.1, 1.0) * y[0]];
        let y = integrate_adaptive(&f, 0.0, [C64::new(1.0, 0.5)], 20.0, &Default::default())
            .unwrap();
        let expect = C64::new(1.0, 0.5) * (C64::new(-0.1, 1.0) * 20.0).exp();
        assert!((y[0] - expect).norm() < 1e-9, "err {}", (y[0] - expect).norm());
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let f = |_t: f64, y: &[C64; 2]| [y[1], -y[0]];
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        let y = integrate_adaptive(&f, 1.5, y0, 1.5, &Default::default()).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn step_budget_is_enforced() {
        let f = |_t: f64, y: &[C64; 1]| [y[0]];
        let opts = AdaptiveOptions {
            max_steps: 3,
            ..Default::default()
        };
        let got = integrate_adaptive(&f, 0.0, [C64::new(1.0, 0.0)], 1.0, &opts);
        assert!(matches!(got, Err(OdeError::MaxStepsExceeded { .. })));
    }
}
