//! Dynamics of a microwave cavity mode entangled with a nanomechanical
//! resonator mode through an off-resonant Cooper-pair-box qubit.
//!
//! The crate is organized as a pipeline:
//!
//! - [`params`]: device quantities (capacitances, energies, mass, gap) down to
//!   the dispersive-regime rates `chi`, `omega`, `kappa`.
//! - [`coherent`]: lossless evolution of the qubit-conditioned coherent
//!   amplitudes, the qubit readout probability and its interference phase.
//! - [`dissipative`]: damped amplitudes in closed form, the decoherence
//!   function `f(t)` by closed form and by quadrature, and the damped readout
//!   probability.
//! - [`oracle`]: a brute-force master-equation integrator on a truncated Fock
//!   space that validates the coherent-state ansatz behind the closed forms.
//! - [`linalg`] / [`ode`]: the small dense/sparse complex kernels and
//!   Runge-Kutta steppers the rest of the crate is built on.
//!
//! Everything here is pure computation on value types: no I/O, no global
//! state, and `no_std` (with `alloc`) outside of tests. File formats, figure
//! presets and the CLI live in the companion `nemscat-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod coherent;
pub mod dissipative;
pub mod linalg;
pub mod ode;
pub mod oracle;
pub mod params;

pub use num_complex::Complex64;

pub use coherent::{Branch, InitialAmplitudes};
pub use dissipative::{DampingParams, DecoherenceMethod, DecoherenceRecord};
pub use oracle::{FockTruncation, OracleDiagnostics, OracleReport};
pub use params::{DeviceParams, EffectiveModel, RawCouplings};
