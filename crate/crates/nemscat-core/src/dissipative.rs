//! Damped branch amplitudes and the decoherence function `f(t)`.
//!
//! At zero temperature the dissipative dynamics still maps coherent states to
//! coherent states, so each qubit branch reduces to a damped linear flow of
//! its amplitude pair,
//!
//! ```text
//! d alpha/dt = -+ i (chi alpha + kappa beta) - (gamma_a / 2) alpha
//! d beta/dt  = -+ i (kappa alpha + omega beta) - (gamma_b / 2) beta
//! ```
//!
//! and the qubit off-diagonal block carries one extra scalar `f(t)` obeying
//! `df/dt = f G(t)`. Both the amplitudes and `log f` have closed forms built
//! from the eigenmodes of the damped flow; every closed expression here is
//! cross-checked against direct integration in the tests and against the
//! Fock-space oracle in `crate::oracle`.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;
// Inherent f64 math lives in std; no_std builds get it from the trait.
#[allow(unused_imports)]
use num_traits::Float;

use crate::coherent::{coherent_overlap, Branch, DynamicsError, InitialAmplitudes};
use crate::ode::{self, AdaptiveOptions};
use crate::params::EffectiveModel;

/// Mode damping rates together with the damped eigenmode data they induce on
/// a given [`EffectiveModel`].
///
/// `mode_decay` is the common decay `(gamma_a + gamma_b)/4` of both
/// eigenmodes and `mode_splitting` the complex splitting
/// `w = sqrt(4 kappa^2 - (gamma_a - gamma_b + 2 i Delta)^2 / 4)` between
/// them (principal square root).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingParams {
    /// Cavity energy decay rate `gamma_a` (1/time).
    pub cavity_rate: f64,
    /// Resonator energy decay rate `gamma_b` (1/time).
    pub nems_rate: f64,
    /// `(gamma_a + gamma_b) / 4`.
    pub mode_decay: f64,
    /// Complex eigenmode splitting `w`.
    pub mode_splitting: C64,
}

impl DampingParams {
    pub fn for_model(
        cavity_rate: f64,
        nems_rate: f64,
        model: &EffectiveModel,
    ) -> Result<Self, DynamicsError> {
        for (name, rate) in [("cavity_rate", cavity_rate), ("nems_rate", nems_rate)] {
            if !rate.is_finite() {
                return Err(DynamicsError::NonFinite { name });
            }
            if rate < 0.0 {
                return Err(DynamicsError::NegativeRate { name, value: rate });
            }
        }
        let z = C64::new(cavity_rate - nems_rate, 2.0 * model.delta());
        let w = (C64::new(4.0 * model.kappa * model.kappa, 0.0) - 0.25 * z * z).sqrt();
        Ok(Self {
            cavity_rate,
            nems_rate,
            mode_decay: 0.25 * (cavity_rate + nems_rate),
            mode_splitting: w,
        })
    }

    pub fn lossless(model: &EffectiveModel) -> Self {
        Self::for_model(0.0, 0.0, model).expect("zero rates are valid")
    }

    pub fn is_lossless(&self) -> bool {
        self.cavity_rate == 0.0 && self.nems_rate == 0.0
    }

    /// Magnitude scale of the quantities `w` is built from; `|w|` is compared
    /// against this to decide whether the splitting is degenerate.
    pub fn splitting_scale(&self, model: &EffectiveModel) -> f64 {
        let z = C64::new(self.cavity_rate - self.nems_rate, 2.0 * model.delta());
        (4.0 * model.kappa * model.kappa + 0.25 * z.norm_sqr()).sqrt() + f64::MIN_POSITIVE
    }
}

/// Relative `|w|` threshold below which the literal eigenmode coefficients are
/// abandoned for numerical integration.
const DEGENERATE_SPLITTING_TOL: f64 = 1e-14;

/// Relative `|w|` threshold below which the closed `log f`, whose coefficients
/// carry `1/w^2`, loses too much precision and quadrature is used instead.
const LOG_F_SPLITTING_TOL: f64 = 1e-4;

/// Eigenmode-decomposition coefficients of the minus branch: the amplitude
/// pair evolves as `U e1 + V e2` (cavity) and `X e1 + Y e2` (resonator) on the
/// two damped eigenmodes `e1`, `e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients {
    pub u: C64,
    pub v: C64,
    pub x: C64,
    pub y: C64,
}

/// Right-hand side of the damped amplitude flow for one branch.
pub fn damped_ode_rhs(
    alpha: C64,
    beta: C64,
    branch: Branch,
    model: &EffectiveModel,
    damping: &DampingParams,
) -> (C64, C64) {
    let rot = C64::new(0.0, -branch.sign());
    let d_alpha = rot * (model.chi * alpha + model.kappa * beta) - 0.5 * damping.cavity_rate * alpha;
    let d_beta = rot * (model.kappa * alpha + model.omega * beta) - 0.5 * damping.nems_rate * beta;
    (d_alpha, d_beta)
}

/// Minus-branch eigenmode coefficients.
///
/// Fails when `|w|` is degenerate relative to its natural scale, since every
/// coefficient divides by `w`.
pub fn mode_coefficients(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
) -> Result<ModeCoefficients, DynamicsError> {
    let w = damping.mode_splitting;
    if w.norm() < DEGENERATE_SPLITTING_TOL * damping.splitting_scale(model) {
        return Err(DynamicsError::DegenerateSplitting { magnitude: w.norm() });
    }
    let a0 = init.cavity;
    let b0 = init.nems;
    let delta = model.delta();
    let kappa = model.kappa;
    let rate_skew = C64::new(0.0, 0.25 * (damping.nems_rate - damping.cavity_rate));
    let u = (a0 / w) * (0.5 * (w + delta) + rate_skew) - kappa * b0 / w;
    let v = (a0 / w) * (0.5 * (w - delta) - rate_skew) + kappa * b0 / w;
    let x = (b0 / w) * (0.5 * (w - delta) - rate_skew) - kappa * a0 / w;
    let y = (b0 / w) * (0.5 * (w + delta) + rate_skew) + kappa * a0 / w;
    Ok(ModeCoefficients { u, v, x, y })
}

/// The two damped eigenmode exponents of the minus branch: the first pairs
/// with `U`/`X` and carries `-(gamma_+ - i(omega_bar - w/2))`, the second with
/// `V`/`Y` at `-(gamma_+ - i(omega_bar + w/2))`.
fn minus_branch_exponents(model: &EffectiveModel, damping: &DampingParams) -> (C64, C64) {
    let base = C64::new(-damping.mode_decay, model.omega_bar());
    let rotated_half_w = C64::i() * (0.5 * damping.mode_splitting);
    (base - rotated_half_w, base + rotated_half_w)
}

/// Closed-form damped amplitudes plus a flag marking the degenerate-splitting
/// fallback to direct integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedAmplitudes {
    pub cavity: C64,
    pub nems: C64,
    pub used_ode_fallback: bool,
}

/// Damped branch amplitudes at `t >= 0` in closed form.
///
/// The minus branch is assembled from the eigenmode coefficients; the plus
/// branch solves the sign-flipped linear system by the same eigenmode method.
/// If the splitting is degenerate (defective generator) the amplitudes come
/// from adaptive integration instead and the flag is set.
pub fn damped_amplitudes_closed(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
    branch: Branch,
) -> ClosedAmplitudes {
    let w_ok = damping.mode_splitting.norm()
        >= DEGENERATE_SPLITTING_TOL * damping.splitting_scale(model);
    if !w_ok {
        let (cavity, nems) = integrate_amplitudes(init, model, damping, t, branch);
        return ClosedAmplitudes {
            cavity,
            nems,
            used_ode_fallback: true,
        };
    }
    let (cavity, nems) = match branch {
        Branch::Minus => {
            let mc = mode_coefficients(init, model, damping).expect("splitting checked above");
            let (z1, z2) = minus_branch_exponents(model, damping);
            let e1 = (z1 * t).exp();
            let e2 = (z2 * t).exp();
            (mc.u * e1 + mc.v * e2, mc.x * e1 + mc.y * e2)
        }
        Branch::Plus => eigenmode_amplitudes(init, model, damping, t, Branch::Plus),
    };
    ClosedAmplitudes {
        cavity,
        nems,
        used_ode_fallback: false,
    }
}

/// Eigenmode evolution of either branch written in the splitting-free form
/// `e^{mu t} [cosh(theta t) I + t sinhc(theta t) S]`, where `mu` is half the
/// generator's trace, `S` its traceless part and `theta^2 = S11^2 + S12^2`.
fn eigenmode_amplitudes(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
    branch: Branch,
) -> (C64, C64) {
    let s = branch.sign();
    let mu = C64::new(
        -damping.mode_decay,
        -s * model.omega_bar(),
    );
    let s11 = C64::new(
        0.25 * (damping.nems_rate - damping.cavity_rate),
        s * 0.5 * model.delta(),
    );
    let c = C64::new(0.0, -s * model.kappa);
    let theta = (s11 * s11 + c * c).sqrt();
    let z = theta * t;
    let cosh = z.cosh();
    let sinhc_t = t * sinhc(z);
    let prefactor = (mu * t).exp();
    let alpha = prefactor * (cosh * init.cavity + sinhc_t * (s11 * init.cavity + c * init.nems));
    let beta = prefactor * (cosh * init.nems + sinhc_t * (c * init.cavity - s11 * init.nems));
    (alpha, beta)
}

/// `sinh(z)/z`, stable through the origin.
fn sinhc(z: C64) -> C64 {
    if z.norm() < 1e-2 {
        let z2 = z * z;
        C64::new(1.0, 0.0) + z2 / 6.0 * (C64::new(1.0, 0.0) + z2 / 20.0)
    } else {
        z.sinh() / z
    }
}

/// `(1 - e^{-z}) / z`, stable through the origin.
fn ecf(z: C64) -> C64 {
    if z.norm() < 0.25 {
        // sum_k (-z)^k / (k+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut acc = term;
        for k in 1..=14 {
            term *= -z / (k as f64 + 1.0);
            acc += term;
        }
        acc
    } else {
        (C64::new(1.0, 0.0) - (-z).exp()) / z
    }
}

fn integrate_amplitudes(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
    branch: Branch,
) -> (C64, C64) {
    debug_assert!(t >= 0.0, "damped evolution runs forward only");
    let rhs = |_t: f64, y: &[C64; 2]| {
        let (da, db) = damped_ode_rhs(y[0], y[1], branch, model, damping);
        [da, db]
    };
    let out = ode::integrate_adaptive(
        &rhs,
        0.0,
        [init.cavity, init.nems],
        t,
        &AdaptiveOptions::default(),
    )
    .expect("amplitude flow is globally smooth");
    (out[0], out[1])
}

/// One branch sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DampedTrajectory {
    pub t_start: f64,
    pub dt: f64,
    pub cavity: Vec<C64>,
    pub nems: Vec<C64>,
}

pub fn sample_damped_trajectory(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    branch: Branch,
    t_start: f64,
    dt: f64,
    points: usize,
) -> DampedTrajectory {
    let mut cavity = Vec::with_capacity(points);
    let mut nems = Vec::with_capacity(points);
    for k in 0..points {
        let t = t_start + dt * k as f64;
        let amps = damped_amplitudes_closed(init, model, damping, t, branch);
        cavity.push(amps.cavity);
        nems.push(amps.nems);
    }
    DampedTrajectory {
        t_start,
        dt,
        cavity,
        nems,
    }
}

/// Worst violation of the energy decay law
/// `d/dt (|alpha|^2 + |beta|^2) = -(gamma_a |alpha|^2 + gamma_b |beta|^2)`
/// over the grid, by second-order finite differences.
pub fn energy_decay_residual(
    trajectory: &DampedTrajectory,
    damping: &DampingParams,
) -> Result<f64, DynamicsError> {
    let n = trajectory.cavity.len();
    if n < 3 || trajectory.nems.len() != n {
        return Err(DynamicsError::GridTooCoarse {
            len: n.min(trajectory.nems.len()),
        });
    }
    let dt = trajectory.dt;
    let energy: Vec<f64> = trajectory
        .cavity
        .iter()
        .zip(trajectory.nems.iter())
        .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
        .collect();
    let loss = |k: usize| {
        damping.cavity_rate * trajectory.cavity[k].norm_sqr()
            + damping.nems_rate * trajectory.nems[k].norm_sqr()
    };
    let mut worst = 0.0f64;
    for k in 0..n {
        let derivative = if k == 0 {
            (-3.0 * energy[0] + 4.0 * energy[1] - energy[2]) / (2.0 * dt)
        } else if k == n - 1 {
            (3.0 * energy[n - 1] - 4.0 * energy[n - 2] + energy[n - 3]) / (2.0 * dt)
        } else {
            (energy[k + 1] - energy[k - 1]) / (2.0 * dt)
        };
        worst = worst.max((derivative + loss(k)).abs());
    }
    Ok(worst)
}

/// Decoherence rate `G(t)` of `df/dt = f G(t)` in the branch-symmetric form
/// the ansatz substitution actually produces:
/// `G = gamma_a [alpha_- conj(alpha_+) - (|alpha_-|^2 + |alpha_+|^2)/2]
///    + gamma_b [beta_- conj(beta_+) - (|beta_-|^2 + |beta_+|^2)/2]`.
///
/// When the branches are conjugates of each other (real initial amplitudes)
/// the two magnitudes coincide and this reduces to the familiar
/// `gamma_a (alpha_- conj(alpha_+) - |alpha_-|^2) + ...` form; for complex
/// starts only the symmetric version keeps `|f| <= 1`, which the Fock-space
/// oracle confirms.
pub fn decoherence_rate(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
) -> C64 {
    let plus = damped_amplitudes_closed(init, model, damping, t, Branch::Plus);
    let minus = damped_amplitudes_closed(init, model, damping, t, Branch::Minus);
    decoherence_rate_from_amplitudes(
        (plus.cavity, plus.nems),
        (minus.cavity, minus.nems),
        damping,
    )
}

fn decoherence_rate_from_amplitudes(
    plus: (C64, C64),
    minus: (C64, C64),
    damping: &DampingParams,
) -> C64 {
    damping.cavity_rate
        * (minus.0 * plus.0.conj() - 0.5 * (minus.0.norm_sqr() + plus.0.norm_sqr()))
        + damping.nems_rate
            * (minus.1 * plus.1.conj() - 0.5 * (minus.1.norm_sqr() + plus.1.norm_sqr()))
}

/// Equivalent form of `G(t)` built from the minus branch alone,
/// `gamma_a alpha_-^2 + gamma_b beta_-^2 + d/dt(|alpha_-|^2 + |beta_-|^2)`,
/// valid when the branches are conjugates (real initial amplitudes). The
/// derivative term is eliminated through the energy decay law.
pub fn decoherence_rate_minus_form(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
) -> C64 {
    let minus = damped_amplitudes_closed(init, model, damping, t, Branch::Minus);
    let a = minus.cavity;
    let b = minus.nems;
    damping.cavity_rate * (a * a - a.norm_sqr())
        + damping.nems_rate * (b * b - b.norm_sqr())
}

/// How `f(t)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoherenceMethod {
    /// Closed form of `log f` from the eigenmode coefficients.
    Closed,
    /// Adaptive integration of the amplitude flow together with
    /// `d(log f)/dt = G(t)`.
    Quadrature,
}

/// The decoherence function at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceRecord {
    pub t: f64,
    pub f: C64,
    pub log_f: C64,
    /// Short-time approximation, populated for the symmetric scenario it is
    /// derived for (cavity vacuum, real resonator amplitude, equal rates).
    pub f_short_time: Option<C64>,
}

/// Evaluate `f(t)`.
///
/// `Closed` uses the eigenmode expression for `log f`; near a degenerate
/// splitting (where its coefficients lose precision as `1/|w|^2`) it silently
/// falls back to quadrature, which is always available.
pub fn decoherence_f(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
    method: DecoherenceMethod,
) -> Result<DecoherenceRecord, DynamicsError> {
    let closed_ok = damping.mode_splitting.norm()
        >= LOG_F_SPLITTING_TOL * damping.splitting_scale(model);
    let log_f = match (method, closed_ok) {
        (DecoherenceMethod::Closed, true) => {
            log_f_closed(init, model, damping, t, damping.mode_splitting)?
        }
        _ => log_f_quadrature(init, model, damping, t)?,
    };
    let f_short_time = short_time_scenario(init, damping)
        .map(|(b, gamma)| short_time_f(t, b, model.kappa, gamma));
    Ok(DecoherenceRecord {
        t,
        f: log_f.exp(),
        log_f,
        f_short_time,
    })
}

fn short_time_scenario(init: &InitialAmplitudes, damping: &DampingParams) -> Option<(f64, f64)> {
    let symmetric = init.cavity == C64::new(0.0, 0.0)
        && init.nems.im == 0.0
        && damping.cavity_rate == damping.nems_rate;
    symmetric.then_some((init.nems.re, damping.cavity_rate))
}

/// Closed `log f(t)`: the quadratic forms of the eigenmode coefficients
/// against the integrated exponentials `x_+-`, `y`, plus the boundary energy
/// difference of the minus branch.
///
/// The integrand is `alpha_- conj(alpha_+)`, and for real mode rates the
/// conjugated plus branch equals the minus-branch flow started from the
/// conjugated initial amplitudes. The quadratic forms therefore pair each
/// coefficient with its counterpart from the conjugated start (`U Ubar`
/// instead of `U^2`); for real initial amplitudes the two coincide and the
/// expression reduces to the plain squares.
fn log_f_closed(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
    splitting: C64,
) -> Result<C64, DynamicsError> {
    let override_damping = DampingParams {
        mode_splitting: splitting,
        ..*damping
    };
    let mc = mode_coefficients(init, model, &override_damping)?;
    let conj_init = InitialAmplitudes {
        cavity: init.cavity.conj(),
        nems: init.nems.conj(),
    };
    let mc_bar = mode_coefficients(&conj_init, model, &override_damping)?;
    let (z1, z2) = minus_branch_exponents(model, &override_damping);
    // x_+- = int_0^t e^{2 z t'} dt' for the two eigenmode exponents, and y the
    // same for their mean; ecf keeps them finite as the exponents vanish.
    let x_plus = t * ecf(-2.0 * z1 * t);
    let x_minus = t * ecf(-2.0 * z2 * t);
    let y = t * ecf(-(z1 + z2) * t);

    let e1 = (z1 * t).exp();
    let e2 = (z2 * t).exp();
    let alpha_minus = mc.u * e1 + mc.v * e2;
    let beta_minus = mc.x * e1 + mc.y * e2;
    // The conjugated plus branch is the minus-branch flow of the conjugated
    // start, so its magnitudes come from the barred coefficients.
    let alpha_plus_conj = mc_bar.u * e1 + mc_bar.v * e2;
    let beta_plus_conj = mc_bar.x * e1 + mc_bar.y * e2;

    let cavity_quad = x_plus * mc.u * mc_bar.u
        + x_minus * mc.v * mc_bar.v
        + (mc.u * mc_bar.v + mc.v * mc_bar.u) * y;
    let nems_quad = x_plus * mc.x * mc_bar.x
        + x_minus * mc.y * mc_bar.y
        + (mc.x * mc_bar.y + mc.y * mc_bar.x) * y;
    let energy0 = init.cavity.norm_sqr() + init.nems.norm_sqr();
    let energy_minus = alpha_minus.norm_sqr() + beta_minus.norm_sqr();
    let energy_plus = alpha_plus_conj.norm_sqr() + beta_plus_conj.norm_sqr();
    let boundary = 0.5 * (energy_minus - energy0) + 0.5 * (energy_plus - energy0);
    Ok(damping.cavity_rate * cavity_quad + damping.nems_rate * nems_quad + boundary)
}

fn log_f_quadrature(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
) -> Result<C64, DynamicsError> {
    debug_assert!(t >= 0.0);
    let rhs = |_t: f64, y: &[C64; 5]| {
        let (d_ap, d_bp) = damped_ode_rhs(y[0], y[1], Branch::Plus, model, damping);
        let (d_am, d_bm) = damped_ode_rhs(y[2], y[3], Branch::Minus, model, damping);
        let g = decoherence_rate_from_amplitudes((y[0], y[1]), (y[2], y[3]), damping);
        [d_ap, d_bp, d_am, d_bm, g]
    };
    let y0 = [
        init.cavity,
        init.nems,
        init.cavity,
        init.nems,
        C64::new(0.0, 0.0),
    ];
    let out = ode::integrate_adaptive(&rhs, 0.0, y0, t, &AdaptiveOptions::default())?;
    Ok(out[4])
}

/// Short-time decoherence law of the symmetric scenario:
/// `f = exp[-(4 B^2 / 3) gamma kappa^2 t^3 + i B^2 kappa gamma t^2]`.
pub fn short_time_f(t: f64, amplitude: f64, kappa: f64, gamma: f64) -> C64 {
    let b2 = amplitude * amplitude;
    C64::new(
        -(4.0 / 3.0) * b2 * gamma * kappa * kappa * t * t * t,
        b2 * kappa * gamma * t * t,
    )
    .exp()
}

/// Exact `f(t)` of the symmetric scenario (`chi = omega = kappa`, equal rates
/// `gamma`, cavity vacuum, resonator amplitude `B`):
/// `exp[-(B^2/2)(1 - e^{-gamma t})
///      + (gamma B^2 / 2) (1 - e^{-(gamma - 4 i kappa) t})/(gamma - 4 i kappa)]`.
pub fn symmetric_decoherence_f(t: f64, amplitude: f64, kappa: f64, gamma: f64) -> C64 {
    let b2 = amplitude * amplitude;
    let envelope = -0.5 * b2 * (-(-gamma * t).exp_m1());
    let z = C64::new(gamma, -4.0 * kappa);
    let oscillating = 0.5 * gamma * b2 * t * ecf(z * t);
    (C64::new(envelope, 0.0) + oscillating).exp()
}

/// Damped readout probability
/// `P(t) = (1 + Re[f <alpha_+|alpha_-> <beta_+|beta_->]) / 2`.
pub fn p_minus_dissipative(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
) -> Result<f64, DynamicsError> {
    let f = decoherence_f(init, model, damping, t, DecoherenceMethod::Closed)?.f;
    let plus = damped_amplitudes_closed(init, model, damping, t, Branch::Plus);
    let minus = damped_amplitudes_closed(init, model, damping, t, Branch::Minus);
    let overlap = coherent_overlap(plus.cavity, minus.cavity)
        * coherent_overlap(plus.nems, minus.nems);
    Ok(0.5 * (1.0 + (f * overlap).re))
}

/// Qubit coherence `<sigma_x>(t) = Re f(t)`.
pub fn sigma_x_expectation(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    damping: &DampingParams,
    t: f64,
) -> Result<f64, DynamicsError> {
    Ok(decoherence_f(init, model, damping, t, DecoherenceMethod::Closed)?.f.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn fig6_model() -> EffectiveModel {
        EffectiveModel::from_rates(1.0, 0.25, 0.5).unwrap()
    }

    fn fig6_damping() -> DampingParams {
        DampingParams::for_model(0.001, 0.01, &fig6_model()).unwrap()
    }

    fn fig6_init() -> InitialAmplitudes {
        InitialAmplitudes::new(c(2.0, 0.0), c(2.0, 0.0)).unwrap()
    }

    fn symmetric_model() -> EffectiveModel {
        EffectiveModel::from_rates(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn damping_params_invariants() {
        let model = fig6_model();
        let damping = DampingParams::for_model(0.001, 0.01, &model).unwrap();
        assert_eq!(damping.mode_decay, (0.001 + 0.01) / 4.0);
        let z = c(0.001 - 0.01, 2.0 * model.delta());
        let reconstructed = damping.mode_splitting * damping.mode_splitting + 0.25 * z * z;
        assert!((reconstructed - c(4.0 * 0.25, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn damping_params_reject_negative_rates() {
        let model = fig6_model();
        assert!(matches!(
            DampingParams::for_model(-0.1, 0.0, &model),
            Err(DynamicsError::NegativeRate { name: "cavity_rate", .. })
        ));
    }

    #[test]
    fn rhs_fixed_point_at_origin() {
        let (da, db) = damped_ode_rhs(
            c(0.0, 0.0),
            c(0.0, 0.0),
            Branch::Plus,
            &fig6_model(),
            &fig6_damping(),
        );
        assert_eq!(da, c(0.0, 0.0));
        assert_eq!(db, c(0.0, 0.0));
    }

    #[test]
    fn rhs_lossless_limit_is_pure_rotation() {
        let model = fig6_model();
        let damping = DampingParams::lossless(&model);
        let alpha = c(1.0, -0.5);
        let beta = c(0.5, 2.0);
        let (da, db) = damped_ode_rhs(alpha, beta, Branch::Plus, &model, &damping);
        let expect_a = -C64::i() * (model.chi * alpha + model.kappa * beta);
        let expect_b = -C64::i() * (model.kappa * alpha + model.omega * beta);
        assert!((da - expect_a).norm() < 1e-16);
        assert!((db - expect_b).norm() < 1e-16);
    }

    #[test]
    fn rhs_direct_substitution_values() {
        // chi = 1, omega = 0.25, kappa = 0.5, rates (0.001, 0.01), both
        // amplitudes 1 on the plus branch.
        let (da, db) = damped_ode_rhs(
            c(1.0, 0.0),
            c(1.0, 0.0),
            Branch::Plus,
            &fig6_model(),
            &fig6_damping(),
        );
        assert!((da - c(-0.0005, -1.5)).norm() < 1e-15, "da = {da}");
        assert!((db - c(-0.005, -0.75)).norm() < 1e-15, "db = {db}");
    }

    #[test]
    fn coefficients_reproduce_initial_conditions() {
        let init = InitialAmplitudes::new(c(1.3, -0.7), c(-0.2, 0.9)).unwrap();
        let mc = mode_coefficients(&init, &fig6_model(), &fig6_damping()).unwrap();
        assert!((mc.u + mc.v - init.cavity).norm() < 1e-12);
        assert!((mc.x + mc.y - init.nems).norm() < 1e-12);
    }

    #[test]
    fn closed_amplitudes_identity_at_time_zero() {
        let init = fig6_init();
        for branch in [Branch::Plus, Branch::Minus] {
            let amps = damped_amplitudes_closed(&init, &fig6_model(), &fig6_damping(), 0.0, branch);
            assert!(!amps.used_ode_fallback);
            assert!((amps.cavity - init.cavity).norm() < 1e-14);
            assert!((amps.nems - init.nems).norm() < 1e-14);
        }
    }

    #[test]
    fn lossless_closed_form_matches_coherent_module() {
        let init = InitialAmplitudes::new(c(1.1, 0.4), c(-0.8, 0.3)).unwrap();
        let model = fig6_model();
        let damping = DampingParams::lossless(&model);
        for branch in [Branch::Plus, Branch::Minus] {
            for k in 0..=50 {
                let t = 0.2 * k as f64;
                let damped = damped_amplitudes_closed(&init, &model, &damping, t, branch);
                let (a, b) = coherent::evolve_amplitudes(&init, &model, t, branch);
                assert!((damped.cavity - a).norm() < 1e-10, "t = {t}");
                assert!((damped.nems - b).norm() < 1e-10, "t = {t}");
            }
        }
    }

    #[test]
    fn symmetric_damped_amplitudes() {
        // chi = omega = kappa, equal rates gamma, cavity vacuum: the energy
        // decay law forces amplitude decay e^{-gamma t / 2}, i.e.
        // alpha_-(t) = i B e^{-(gamma/2 - i kappa) t} sin(kappa t).
        let b = 2.0;
        let gamma = 0.1;
        let model = symmetric_model();
        let damping = DampingParams::for_model(gamma, gamma, &model).unwrap();
        let init = InitialAmplitudes::new(c(0.0, 0.0), c(b, 0.0)).unwrap();
        for k in 0..=40 {
            let t = 0.15 * k as f64;
            let amps = damped_amplitudes_closed(&init, &model, &damping, t, Branch::Minus);
            let envelope = C64::new(-0.5 * gamma * t, t).exp();
            let expect_a = C64::i() * b * envelope * (t).sin();
            let expect_b = b * envelope * (t).cos();
            assert!((amps.cavity - expect_a).norm() < 1e-12, "t = {t}");
            assert!((amps.nems - expect_b).norm() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn branch_conjugation_for_real_initial_amplitudes() {
        let init = fig6_init();
        let model = fig6_model();
        let damping = fig6_damping();
        for k in 0..=60 {
            let t = 0.17 * k as f64;
            let plus = damped_amplitudes_closed(&init, &model, &damping, t, Branch::Plus);
            let minus = damped_amplitudes_closed(&init, &model, &damping, t, Branch::Minus);
            assert!((minus.cavity - plus.cavity.conj()).norm() < 1e-10);
            assert!((minus.nems - plus.nems.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_adaptive_integration() {
        let init = fig6_init();
        let model = fig6_model();
        let damping = fig6_damping();
        for branch in [Branch::Plus, Branch::Minus] {
            for k in 1..=10 {
                let t = k as f64;
                let closed = damped_amplitudes_closed(&init, &model, &damping, t, branch);
                let (ia, ib) = integrate_amplitudes(&init, &model, &damping, t, branch);
                assert!((closed.cavity - ia).norm() < 1e-8, "t = {t}");
                assert!((closed.nems - ib).norm() < 1e-8, "t = {t}");
            }
        }
    }

    #[test]
    fn degenerate_splitting_falls_back_to_integration() {
        // kappa = 0, delta = 0 and equal rates make w exactly zero.
        let model = EffectiveModel::from_rates(1.0, 1.0, 0.0).unwrap();
        let damping = DampingParams::for_model(0.05, 0.05, &model).unwrap();
        assert_eq!(damping.mode_splitting, c(0.0, 0.0));
        let init = InitialAmplitudes::new(c(1.0, 0.0), c(0.5, 0.5)).unwrap();
        let amps = damped_amplitudes_closed(&init, &model, &damping, 2.0, Branch::Minus);
        assert!(amps.used_ode_fallback);
        // Decoupled modes: alpha(t) = alpha_0 e^{(i chi - gamma/2) t}.
        let expect = init.cavity * (c(-0.025, 1.0) * 2.0).exp();
        assert!((amps.cavity - expect).norm() < 1e-9);
        assert!(mode_coefficients(&init, &model, &damping).is_err());
    }

    #[test]
    fn energy_residual_rejects_short_grids() {
        let traj = DampedTrajectory {
            t_start: 0.0,
            dt: 0.1,
            cavity: alloc::vec![c(1.0, 0.0); 2],
            nems: alloc::vec![c(0.0, 0.0); 2],
        };
        assert!(matches!(
            energy_decay_residual(&traj, &fig6_damping()),
            Err(DynamicsError::GridTooCoarse { len: 2 })
        ));
    }

    #[test]
    fn energy_residual_lossless() {
        let model = fig6_model();
        let damping = DampingParams::lossless(&model);
        let init = fig6_init();
        let traj =
            sample_damped_trajectory(&init, &model, &damping, Branch::Plus, 0.0, 1e-4, 500);
        let residual = energy_decay_residual(&traj, &damping).unwrap();
        assert!(residual < 1e-8, "residual = {residual}");
    }

    #[test]
    fn energy_residual_symmetric_damped() {
        // Total energy is exactly B^2 e^{-gamma t}.
        let b = 2.0;
        let gamma = 0.1;
        let model = symmetric_model();
        let damping = DampingParams::for_model(gamma, gamma, &model).unwrap();
        let init = InitialAmplitudes::new(c(0.0, 0.0), c(b, 0.0)).unwrap();
        let traj =
            sample_damped_trajectory(&init, &model, &damping, Branch::Minus, 0.0, 1e-4, 400);
        for (k, (a, bm)) in traj.cavity.iter().zip(traj.nems.iter()).enumerate() {
            let t = 1e-4 * k as f64;
            let expect = b * b * (-gamma * t).exp();
            assert!((a.norm_sqr() + bm.norm_sqr() - expect).abs() < 1e-12);
        }
        let residual = energy_decay_residual(&traj, &damping).unwrap();
        assert!(residual < 1e-6, "residual = {residual}");
    }

    #[test]
    fn energy_residual_general_closed_trajectory() {
        let traj = sample_damped_trajectory(
            &fig6_init(),
            &fig6_model(),
            &fig6_damping(),
            Branch::Minus,
            0.0,
            1e-4,
            1000,
        );
        let residual = energy_decay_residual(&traj, &fig6_damping()).unwrap();
        assert!(residual < 1e-5, "residual = {residual}");
    }

    #[test]
    fn decoherence_rate_vanishes_without_damping() {
        let model = fig6_model();
        let damping = DampingParams::lossless(&model);
        let g = decoherence_rate(&fig6_init(), &model, &damping, 1.7);
        assert_eq!(g, c(0.0, 0.0));
    }

    #[test]
    fn decoherence_rate_zero_at_start_for_real_amplitudes() {
        let g = decoherence_rate(&fig6_init(), &fig6_model(), &fig6_damping(), 0.0);
        assert!(g.norm() < 1e-14, "g = {g}");
    }

    #[test]
    fn decoherence_rate_forms_agree() {
        // The two expressions coincide wherever the branches are conjugate,
        // i.e. for real initial amplitudes.
        let model = fig6_model();
        let damping = fig6_damping();
        for k in 0..=40 {
            let t = 0.25 * k as f64;
            let direct = decoherence_rate(&fig6_init(), &model, &damping, t);
            let minus_only = decoherence_rate_minus_form(&fig6_init(), &model, &damping, t);
            assert!((direct - minus_only).norm() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn f_starts_at_unity() {
        for method in [DecoherenceMethod::Closed, DecoherenceMethod::Quadrature] {
            let rec =
                decoherence_f(&fig6_init(), &fig6_model(), &fig6_damping(), 0.0, method).unwrap();
            assert!((rec.f - c(1.0, 0.0)).norm() < 1e-14);
            assert!(rec.log_f.norm() < 1e-14);
        }
    }

    #[test]
    fn f_is_unity_without_damping() {
        let model = fig6_model();
        let damping = DampingParams::lossless(&model);
        for k in 0..=30 {
            let t = 0.33 * k as f64;
            let rec =
                decoherence_f(&fig6_init(), &model, &damping, t, DecoherenceMethod::Closed)
                    .unwrap();
            assert!((rec.f - c(1.0, 0.0)).norm() < 1e-12, "t = {t}, f = {}", rec.f);
        }
    }

    #[test]
    fn f_symmetric_case_value() {
        // B = 2, gamma = 0.1, kappa = 1, t = 1: |f|^2 = 0.6408 from the
        // symmetric closed form, cross-checked against quadrature.
        let b = 2.0;
        let gamma = 0.1;
        let model = symmetric_model();
        let damping = DampingParams::for_model(gamma, gamma, &model).unwrap();
        let init = InitialAmplitudes::new(c(0.0, 0.0), c(b, 0.0)).unwrap();

        let reference = symmetric_decoherence_f(1.0, b, 1.0, gamma);
        assert!((reference.norm_sqr() - 0.6408).abs() < 1e-4);

        for method in [DecoherenceMethod::Closed, DecoherenceMethod::Quadrature] {
            let rec = decoherence_f(&init, &model, &damping, 1.0, method).unwrap();
            assert!(
                (rec.f - reference).norm() < 1e-8 * reference.norm(),
                "{method:?}: {} vs {}",
                rec.f,
                reference
            );
        }
    }

    #[test]
    fn closed_and_quadrature_agree_on_fig6_scenario() {
        let init = fig6_init();
        let model = fig6_model();
        let damping = fig6_damping();
        for k in 1..=8 {
            let t = 1.2 * k as f64;
            let closed =
                decoherence_f(&init, &model, &damping, t, DecoherenceMethod::Closed).unwrap();
            let quad =
                decoherence_f(&init, &model, &damping, t, DecoherenceMethod::Quadrature).unwrap();
            let rel = (closed.f.norm() - quad.f.norm()).abs() / quad.f.norm();
            assert!(rel < 1e-8, "t = {t}: rel |f| error {rel}");
            assert!((closed.log_f.im - quad.log_f.im).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn closed_and_quadrature_agree_for_complex_amplitudes() {
        // The closed form must hold beyond real starts, where the two
        // branches are no longer conjugates of each other.
        let init = InitialAmplitudes::new(c(-0.404, -0.572), c(-0.396, 1.546)).unwrap();
        let model = EffectiveModel::from_rates(0.799, 0.909, 0.904).unwrap();
        let damping = DampingParams::for_model(0.186, 0.110, &model).unwrap();
        for k in 1..=8 {
            let t = 0.45 * k as f64;
            let closed =
                decoherence_f(&init, &model, &damping, t, DecoherenceMethod::Closed).unwrap();
            let quad =
                decoherence_f(&init, &model, &damping, t, DecoherenceMethod::Quadrature).unwrap();
            let rel = (closed.f.norm() - quad.f.norm()).abs() / quad.f.norm();
            assert!(rel < 1e-8, "t = {t}: rel |f| error {rel}");
            assert!((closed.log_f.im - quad.log_f.im).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn branch_cut_invariance_of_log_f() {
        let init = InitialAmplitudes::new(c(0.9, 0.2), c(-1.1, 0.5)).unwrap();
        let model = fig6_model();
        let damping = fig6_damping();
        for k in 1..=10 {
            let t = 0.7 * k as f64;
            let plus = log_f_closed(&init, &model, &damping, t, damping.mode_splitting).unwrap();
            let minus = log_f_closed(&init, &model, &damping, t, -damping.mode_splitting).unwrap();
            assert!((plus - minus).norm() < 1e-10, "t = {t}: {plus} vs {minus}");
        }
    }

    #[test]
    fn short_time_law_values() {
        assert_eq!(short_time_f(0.0, 2.0, 1.0, 0.1), c(1.0, 0.0));
        // |f|^2 = exp(-8 B^2 gamma kappa^2 t^3 / 3) = exp(-0.13333) at t = 0.5.
        let f = short_time_f(0.5, 2.0, 1.0, 0.1);
        assert!((f.norm_sqr() - (-(8.0 * 4.0 * 0.1 * 0.125) / 3.0f64).exp()).abs() < 1e-12);
        assert!((f.norm_sqr() - 0.87517).abs() < 1e-5);
    }

    #[test]
    fn short_time_law_is_asymptotically_exact() {
        let b = 2.0;
        let gamma = 0.1;
        for t in [1e-2, 1e-3] {
            let full = symmetric_decoherence_f(t, b, 1.0, gamma);
            let short = short_time_f(t, b, 1.0, gamma);
            let ratio = full.norm_sqr().ln() / short.norm_sqr().ln();
            assert!((ratio - 1.0).abs() < 2e-2, "t = {t}: ratio = {ratio}");
        }
    }

    #[test]
    fn short_time_field_is_populated_for_symmetric_scenario() {
        let model = symmetric_model();
        let damping = DampingParams::for_model(0.1, 0.1, &model).unwrap();
        let init = InitialAmplitudes::new(c(0.0, 0.0), c(2.0, 0.0)).unwrap();
        let rec = decoherence_f(&init, &model, &damping, 0.4, DecoherenceMethod::Closed).unwrap();
        let expect = short_time_f(0.4, 2.0, 1.0, 0.1);
        assert_eq!(rec.f_short_time, Some(expect));

        let asym = decoherence_f(&fig6_init(), &fig6_model(), &fig6_damping(), 0.4,
            DecoherenceMethod::Closed).unwrap();
        assert_eq!(asym.f_short_time, None);
    }

    #[test]
    fn p_minus_dissipative_boundary_cases() {
        let p0 = p_minus_dissipative(&fig6_init(), &fig6_model(), &fig6_damping(), 0.0).unwrap();
        assert!((p0 - 1.0).abs() < 1e-12);

        let model = fig6_model();
        let lossless = DampingParams::lossless(&model);
        for k in 0..=30 {
            let t = 0.3 * k as f64;
            let damped = p_minus_dissipative(&fig6_init(), &model, &lossless, t).unwrap();
            let unitary = coherent::p_minus(&fig6_init(), &model, t);
            assert!((damped - unitary).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn sigma_x_tracks_re_f() {
        let model = symmetric_model();
        let damping = DampingParams::for_model(0.1, 0.1, &model).unwrap();
        let init = InitialAmplitudes::new(c(0.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!((sigma_x_expectation(&init, &model, &damping, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let expect = symmetric_decoherence_f(1.0, 2.0, 1.0, 0.1).re;
        let got = sigma_x_expectation(&init, &model, &damping, 1.0).unwrap();
        assert!((got - expect).abs() < 1e-9);

        let lossless = DampingParams::lossless(&model);
        for k in 0..10 {
            let got = sigma_x_expectation(&init, &model, &lossless, 0.5 * k as f64).unwrap();
            assert!((got - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn coefficients_partition_initial_amplitudes(
            ar in -3.0f64..3.0, ai in -3.0f64..3.0,
            br in -3.0f64..3.0, bi in -3.0f64..3.0,
            chi in -1.5f64..1.5, omega in -1.5f64..1.5, kappa in 0.2f64..1.5,
            ga in 0.0f64..0.2, gb in 0.0f64..0.2,
        ) {
            let init = InitialAmplitudes::new(c(ar, ai), c(br, bi)).unwrap();
            let model = EffectiveModel::from_rates(chi, omega, kappa).unwrap();
            let damping = DampingParams::for_model(ga, gb, &model).unwrap();
            let mc = mode_coefficients(&init, &model, &damping).unwrap();
            prop_assert!((mc.u + mc.v - init.cavity).norm() < 1e-12);
            prop_assert!((mc.x + mc.y - init.nems).norm() < 1e-12);
        }

        #[test]
        fn visibility_never_exceeds_unity(
            ar in -2.0f64..2.0, ai in -2.0f64..2.0,
            br in -2.0f64..2.0, bi in -2.0f64..2.0,
            chi in -1.5f64..1.5, omega in -1.5f64..1.5, kappa in 0.1f64..1.5,
            ga in 0.0f64..0.2, gb in 0.0f64..0.2,
            t in 0.0f64..6.0,
        ) {
            let init = InitialAmplitudes::new(c(ar, ai), c(br, bi)).unwrap();
            let model = EffectiveModel::from_rates(chi, omega, kappa).unwrap();
            let damping = DampingParams::for_model(ga, gb, &model).unwrap();
            let rec = decoherence_f(&init, &model, &damping, t, DecoherenceMethod::Closed)
                .unwrap();
            prop_assert!(rec.f.norm() <= 1.0 + 1e-9, "|f| = {}", rec.f.norm());
        }

        #[test]
        fn damped_energy_never_grows(
            ar in -2.0f64..2.0, ai in -2.0f64..2.0,
            br in -2.0f64..2.0, bi in -2.0f64..2.0,
            chi in -1.5f64..1.5, omega in -1.5f64..1.5, kappa in 0.1f64..1.5,
            ga in 0.0f64..0.2, gb in 0.0f64..0.2,
            t in 0.0f64..6.0,
        ) {
            let init = InitialAmplitudes::new(c(ar, ai), c(br, bi)).unwrap();
            let model = EffectiveModel::from_rates(chi, omega, kappa).unwrap();
            let damping = DampingParams::for_model(ga, gb, &model).unwrap();
            for branch in [Branch::Plus, Branch::Minus] {
                let amps = damped_amplitudes_closed(&init, &model, &damping, t, branch);
                let e = amps.cavity.norm_sqr() + amps.nems.norm_sqr();
                prop_assert!(e <= init.total_energy() * (1.0 + 1e-9) + 1e-12);
            }
        }
    }
}
