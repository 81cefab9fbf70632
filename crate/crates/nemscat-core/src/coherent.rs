//! Lossless evolution of the qubit-conditioned coherent amplitudes.
//!
//! With the qubit in a `sigma_z` eigenstate the two-mode Hamiltonian is
//! quadratic, so coherent states stay coherent and the full dynamics reduces
//! to a linear flow of the amplitude pair. The plus branch evolves under
//! `exp(-i M t)` with `M = [[chi, kappa], [kappa, omega]]`; the minus branch
//! is the same flow run backwards in time.

use core::fmt;

use num_complex::Complex64 as C64;
// Inherent f64 math lives in std; no_std builds get it from the trait.
#[allow(unused_imports)]
use num_traits::Float;

use crate::params::EffectiveModel;

/// Which `sigma_z` eigenvalue conditions the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    /// Sign of the conditional Hamiltonian: `+1` for plus, `-1` for minus.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Coherent amplitudes of the cavity (`a`) and resonator (`b`) modes at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialAmplitudes {
    pub cavity: C64,
    pub nems: C64,
}

impl InitialAmplitudes {
    pub fn new(cavity: C64, nems: C64) -> Result<Self, DynamicsError> {
        for (name, z) in [("cavity amplitude", cavity), ("nems amplitude", nems)] {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(DynamicsError::NonFinite { name });
            }
        }
        Ok(Self { cavity, nems })
    }

    /// Total excitation number `|alpha|^2 + |beta|^2`.
    pub fn total_energy(&self) -> f64 {
        self.cavity.norm_sqr() + self.nems.norm_sqr()
    }
}

/// Both branches' amplitudes at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchState {
    pub t: f64,
    pub cavity_plus: C64,
    pub nems_plus: C64,
    pub cavity_minus: C64,
    pub nems_minus: C64,
}

/// Errors of the dynamics modules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicsError {
    /// An amplitude or time was NaN or infinite.
    NonFinite { name: &'static str },
    /// A damping rate was negative.
    NegativeRate { name: &'static str, value: f64 },
    /// The damped eigenmode splitting `w` is too small for the closed-form
    /// coefficients, which divide by it.
    DegenerateSplitting { magnitude: f64 },
    /// Fewer than three samples: no interior finite difference exists.
    GridTooCoarse { len: usize },
    /// Numerical integration failed.
    Ode(crate::ode::OdeError),
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::NonFinite { name } => write!(f, "{name} must be finite"),
            DynamicsError::NegativeRate { name, value } => {
                write!(f, "{name} must be nonnegative, got {value}")
            }
            DynamicsError::DegenerateSplitting { magnitude } => {
                write!(
                    f,
                    "eigenmode splitting |w| = {magnitude:e} is degenerate; use quadrature"
                )
            }
            DynamicsError::GridTooCoarse { len } => {
                write!(f, "trajectory needs at least 3 points, got {len}")
            }
            DynamicsError::Ode(e) => write!(f, "integration failed: {e}"),
        }
    }
}

impl core::error::Error for DynamicsError {}

impl From<crate::ode::OdeError> for DynamicsError {
    fn from(e: crate::ode::OdeError) -> Self {
        DynamicsError::Ode(e)
    }
}

/// `sin(x)/x`, stable through the origin.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// Coherent-state overlap `<a|b> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b)`.
///
/// This is the one primitive every visibility formula goes through.
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (C64::new(-0.5 * (a.norm_sqr() + b.norm_sqr()), 0.0) + a.conj() * b).exp()
}

/// Amplitudes of one branch at time `t`.
///
/// The plus branch applies `exp(-i M t)` to `(alpha_0, beta_0)`; the minus
/// branch evaluates the same flow at `-t`. The rotation is computed in the
/// mean-frequency frame through `cos` and a protected `sinc`, so the
/// degenerate case `kappa = delta = 0` reduces smoothly to the pure phase
/// `exp(-i omega_bar t)`.
pub fn evolve_amplitudes(
    init: &InitialAmplitudes,
    model: &EffectiveModel,
    t: f64,
    branch: Branch,
) -> (C64, C64) {
    let tau = branch.sign() * t;
    let delta = model.delta();
    let splitting = model.normal_mode_splitting();

    let phase = C64::new(0.0, -model.omega_bar() * tau).exp();
    let half_angle = 0.5 * splitting * tau;
    let cos_part = half_angle.cos();
    // sin(R tau / 2) / R, finite as R -> 0.
    let sin_over_r = 0.5 * tau * sinc(half_angle);

    let a = init.cavity;
    let b = init.nems;
    let rotate = C64::new(0.0, sin_over_r);
    let alpha = phase * (cos_part * a + rotate * (delta * a - 2.0 * model.kappa * b));
    let beta = phase * (cos_part * b - rotate * (delta * b + 2.0 * model.kappa * a));
    (alpha, beta)
}

/// Both branches at time `t`.
pub fn branch_state(init: &InitialAmplitudes, model: &EffectiveModel, t: f64) -> BranchState {
    let (cavity_plus, nems_plus) = evolve_amplitudes(init, model, t, Branch::Plus);
    let (cavity_minus, nems_minus) = evolve_amplitudes(init, model, t, Branch::Minus);
    BranchState {
        t,
        cavity_plus,
        nems_plus,
        cavity_minus,
        nems_minus,
    }
}

/// Probability of reading the qubit out in its initial state,
/// `P(t) = (1 + exp[-(|da|^2 + |db|^2)/2] cos Phi) / 2`
/// with `da`, `db` the separations between the branch amplitudes.
pub fn p_minus(init: &InitialAmplitudes, model: &EffectiveModel, t: f64) -> f64 {
    let s = branch_state(init, model, t);
    let separation = (s.cavity_plus - s.cavity_minus).norm_sqr()
        + (s.nems_plus - s.nems_minus).norm_sqr();
    let phase = interference_phase(init, model, t);
    0.5 * (1.0 + (-0.5 * separation).exp() * phase.cos())
}

/// Interference phase
/// `Phi(t) = Im[conj(alpha(t)) alpha(-t) + conj(beta(t)) beta(-t)]`.
pub fn interference_phase(init: &InitialAmplitudes, model: &EffectiveModel, t: f64) -> f64 {
    let s = branch_state(init, model, t);
    (s.cavity_plus.conj() * s.cavity_minus + s.nems_plus.conj() * s.nems_minus).im
}

/// Plus-branch amplitudes of the fully symmetric case `chi = omega = kappa`
/// with the cavity starting in vacuum and the resonator at real amplitude `b`:
/// `alpha(t) = -i b e^{-i kappa t} sin(kappa t)`,
/// `beta(t) = b e^{-i kappa t} cos(kappa t)`.
pub fn symmetric_case_amplitudes(b: f64, kappa: f64, t: f64) -> (C64, C64) {
    let (sin, cos) = (kappa * t).sin_cos();
    let phase = C64::new(0.0, -kappa * t).exp();
    let alpha = -C64::i() * b * phase * sin;
    let beta = b * phase * cos;
    (alpha, beta)
}
