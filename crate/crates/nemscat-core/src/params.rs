//! Device-parameter pipeline: from raw circuit quantities to the effective
//! dispersive model.
//!
//! The chain is `DeviceParams` → [`raw_couplings`] → [`EffectiveModel`]. All
//! downstream dynamics consume only the three dispersive rates `chi`, `omega`
//! and `kappa`, so the model may also be built directly from those in
//! dimensionless units (the usual choice scales time so that `chi = 1`).

use core::fmt;

// Inherent f64 math lives in std; no_std builds get it from the trait.
#[allow(unused_imports)]
use num_traits::Float;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Raw device quantities describing the coupled qubit/cavity/resonator
/// circuit. All quantities are SI; frequencies are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Charging energy of the qubit island (J).
    pub charging_energy: f64,
    /// Josephson tunneling energy (J).
    pub josephson_energy: f64,
    /// DC gate charge in Cooper pairs; must lie in `[0, 1]`.
    pub dc_gate_charge: f64,
    /// Capacitance between the island and its bias gate (F).
    pub gate_capacitance: f64,
    /// Capacitance between the island and the rest of the circuit (F).
    pub island_capacitance: f64,
    /// Cavity inductance (H).
    pub inductance: f64,
    /// Cavity capacitance (F).
    pub cavity_capacitance: f64,
    /// Cavity angular frequency (rad/s).
    pub cavity_frequency: f64,
    /// Mechanical-resonator angular frequency (rad/s).
    pub nems_frequency: f64,
    /// Mechanical-resonator effective mass (kg).
    pub nems_mass: f64,
    /// Gate-gap length scale modulated by the resonator motion (m).
    pub gap_distance: f64,
    /// Qubit detuning from the (mutually resonant) modes (rad/s); nonzero.
    pub detuning: f64,
}

/// Couplings of the two modes to the qubit before the dispersive reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawCouplings {
    /// Cavity-qubit coupling rate `g` (rad/s).
    pub cavity_coupling: f64,
    /// Resonator-qubit coupling rate `lambda` (rad/s).
    pub nems_coupling: f64,
    /// Cross term `g * x_rms / d` (rad/s).
    pub cross_coupling: f64,
    /// Ground-state rms position spread of the resonator (m).
    pub x_rms: f64,
    /// Qubit energy gap (J).
    pub qubit_gap: f64,
    /// Charge-basis mixing angle (rad), in `[0, pi]`.
    pub mixing_angle: f64,
}

/// Dispersive-regime rates of the qubit-conditioned two-mode Hamiltonian
/// `sigma_z * (chi a'a + omega b'b + kappa (a b' + a' b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveModel {
    /// Cavity dispersive shift (rad/s).
    pub chi: f64,
    /// Resonator dispersive shift (rad/s).
    pub omega: f64,
    /// Mode-exchange (beam-splitter) rate (rad/s).
    pub kappa: f64,
}

impl EffectiveModel {
    /// Build from the two raw couplings and the qubit detuning:
    /// `chi = g^2/delta`, `omega = lambda^2/delta`, `kappa = g*lambda/delta`.
    pub fn from_couplings(
        cavity_coupling: f64,
        nems_coupling: f64,
        detuning: f64,
    ) -> Result<Self, ParamsError> {
        require_finite("g", cavity_coupling)?;
        require_finite("lambda", nems_coupling)?;
        require_finite("delta", detuning)?;
        if detuning == 0.0 {
            return Err(ParamsError::ZeroDetuning);
        }
        Ok(Self {
            chi: cavity_coupling * cavity_coupling / detuning,
            omega: nems_coupling * nems_coupling / detuning,
            kappa: cavity_coupling * nems_coupling / detuning,
        })
    }

    /// Build directly from the three dispersive rates. Used by the
    /// dimensionless scenarios, which fix the rates rather than deriving them;
    /// in that case `kappa^2 = chi * omega` need not hold.
    pub fn from_rates(chi: f64, omega: f64, kappa: f64) -> Result<Self, ParamsError> {
        require_finite("chi", chi)?;
        require_finite("omega", omega)?;
        require_finite("kappa", kappa)?;
        Ok(Self { chi, omega, kappa })
    }

    /// Resolve a model from an optional coupling triple and optional direct
    /// overrides. Overrides must be all-or-none; when present they win.
    pub fn resolve(
        couplings: Option<(f64, f64, f64)>,
        chi_override: Option<f64>,
        omega_override: Option<f64>,
        kappa_override: Option<f64>,
    ) -> Result<Self, ParamsError> {
        let n_overrides = [chi_override, omega_override, kappa_override]
            .iter()
            .filter(|o| o.is_some())
            .count();
        match (n_overrides, couplings) {
            (3, _) => Self::from_rates(
                chi_override.unwrap(),
                omega_override.unwrap(),
                kappa_override.unwrap(),
            ),
            (0, Some((g, lambda, delta))) => Self::from_couplings(g, lambda, delta),
            (0, None) => Err(ParamsError::MissingModel),
            _ => Err(ParamsError::PartialOverrides),
        }
    }

    /// Mean conditional frequency `(omega + chi) / 2`.
    pub fn omega_bar(&self) -> f64 {
        0.5 * (self.omega + self.chi)
    }

    /// Shift asymmetry `omega - chi`.
    pub fn delta(&self) -> f64 {
        self.omega - self.chi
    }

    /// Splitting of the two conditional eigenmodes,
    /// `sqrt(delta^2 + 4 kappa^2)`.
    pub fn normal_mode_splitting(&self) -> f64 {
        self.delta().hypot(2.0 * self.kappa)
    }
}

/// Validation and domain errors of the parameter pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamsError {
    /// A quantity that must be strictly positive was not.
    NonPositive { name: &'static str, value: f64 },
    /// A quantity left its allowed interval.
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    /// A quantity was NaN or infinite.
    NonFinite { name: &'static str },
    /// Both arguments of the mixing-angle arctangent vanish.
    UndefinedAngle,
    /// The dispersive reduction requires a nonzero detuning.
    ZeroDetuning,
    /// Some but not all of the `chi`/`omega`/`kappa` overrides were given.
    PartialOverrides,
    /// Neither couplings nor a full override set was given.
    MissingModel,
}

impl fmt::Display for ParamsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamsError::NonPositive { name, value } => {
                write!(f, "{name} must be strictly positive, got {value}")
            }
            ParamsError::OutOfRange {
                name,
                value,
                min,
                max,
            } => write!(f, "{name} = {value} outside [{min}, {max}]"),
            ParamsError::NonFinite { name } => write!(f, "{name} must be finite"),
            ParamsError::UndefinedAngle => {
                write!(f, "mixing angle undefined: both arctangent arguments are zero")
            }
            ParamsError::ZeroDetuning => {
                write!(f, "detuning must be nonzero in the dispersive regime")
            }
            ParamsError::PartialOverrides => write!(
                f,
                "chi/omega/kappa overrides must be given all together or not at all"
            ),
            ParamsError::MissingModel => {
                write!(f, "neither (g, lambda, delta) nor full rate overrides supplied")
            }
        }
    }
}

impl core::error::Error for ParamsError {}

fn require_finite(name: &'static str, value: f64) -> Result<(), ParamsError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ParamsError::NonFinite { name })
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<(), ParamsError> {
    require_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(ParamsError::NonPositive { name, value })
    }
}

impl DeviceParams {
    /// Check the invariants: every physical quantity strictly positive, the
    /// gate charge within `[0, 1]`, the detuning nonzero.
    pub fn validate(&self) -> Result<(), ParamsError> {
        require_positive("charging_energy", self.charging_energy)?;
        require_positive("josephson_energy", self.josephson_energy)?;
        require_positive("gate_capacitance", self.gate_capacitance)?;
        require_positive("island_capacitance", self.island_capacitance)?;
        require_positive("inductance", self.inductance)?;
        require_positive("cavity_capacitance", self.cavity_capacitance)?;
        require_positive("cavity_frequency", self.cavity_frequency)?;
        require_positive("nems_frequency", self.nems_frequency)?;
        require_positive("nems_mass", self.nems_mass)?;
        require_positive("gap_distance", self.gap_distance)?;
        require_finite("dc_gate_charge", self.dc_gate_charge)?;
        if !(0.0..=1.0).contains(&self.dc_gate_charge) {
            return Err(ParamsError::OutOfRange {
                name: "dc_gate_charge",
                value: self.dc_gate_charge,
                min: 0.0,
                max: 1.0,
            });
        }
        require_finite("detuning", self.detuning)?;
        if self.detuning == 0.0 {
            return Err(ParamsError::ZeroDetuning);
        }
        Ok(())
    }
}

/// Ground-state rms position spread `sqrt(hbar / (2 m nu))` of an oscillator
/// with mass `m` and angular frequency `nu`.
pub fn x_rms(mass: f64, angular_frequency: f64) -> Result<f64, ParamsError> {
    require_positive("mass", mass)?;
    require_positive("angular_frequency", angular_frequency)?;
    Ok((HBAR / (2.0 * mass * angular_frequency)).sqrt())
}

/// Qubit gap `sqrt(E_J^2 + [4 E_C (1 - 2 n_g)]^2)` (J).
pub fn qubit_gap(
    charging_energy: f64,
    josephson_energy: f64,
    dc_gate_charge: f64,
) -> Result<f64, ParamsError> {
    require_finite("charging_energy", charging_energy)?;
    require_finite("josephson_energy", josephson_energy)?;
    if charging_energy < 0.0 {
        return Err(ParamsError::NonPositive {
            name: "charging_energy",
            value: charging_energy,
        });
    }
    if josephson_energy < 0.0 {
        return Err(ParamsError::NonPositive {
            name: "josephson_energy",
            value: josephson_energy,
        });
    }
    if !(0.0..=1.0).contains(&dc_gate_charge) {
        return Err(ParamsError::OutOfRange {
            name: "dc_gate_charge",
            value: dc_gate_charge,
            min: 0.0,
            max: 1.0,
        });
    }
    let electrostatic = 4.0 * charging_energy * (1.0 - 2.0 * dc_gate_charge);
    Ok(josephson_energy.hypot(electrostatic))
}

/// Charge-basis mixing angle `arctan(E_J / [4 E_C (1 - 2 n_g)])`, mapped to
/// `[0, pi]` so that the degeneracy point `n_g = 1/2` gives `pi/2`.
pub fn mixing_angle(
    charging_energy: f64,
    josephson_energy: f64,
    dc_gate_charge: f64,
) -> Result<f64, ParamsError> {
    require_finite("charging_energy", charging_energy)?;
    require_finite("josephson_energy", josephson_energy)?;
    if charging_energy < 0.0 {
        return Err(ParamsError::NonPositive {
            name: "charging_energy",
            value: charging_energy,
        });
    }
    if josephson_energy < 0.0 {
        return Err(ParamsError::NonPositive {
            name: "josephson_energy",
            value: josephson_energy,
        });
    }
    let electrostatic = 4.0 * charging_energy * (1.0 - 2.0 * dc_gate_charge);
    if josephson_energy == 0.0 && electrostatic == 0.0 {
        return Err(ParamsError::UndefinedAngle);
    }
    Ok(josephson_energy.atan2(electrostatic))
}

/// Cavity-qubit coupling rate `g = (e/hbar) (C_g/C_Sigma) sqrt(hbar w_r/(L c))`
/// on lumped circuit values.
pub fn cavity_coupling_rate(
    gate_capacitance: f64,
    island_capacitance: f64,
    cavity_frequency: f64,
    inductance: f64,
    cavity_capacitance: f64,
) -> Result<f64, ParamsError> {
    require_positive("gate_capacitance", gate_capacitance)?;
    require_positive("island_capacitance", island_capacitance)?;
    require_positive("cavity_frequency", cavity_frequency)?;
    require_positive("inductance", inductance)?;
    require_positive("cavity_capacitance", cavity_capacitance)?;
    let voltage_scale = (HBAR * cavity_frequency / (inductance * cavity_capacitance)).sqrt();
    Ok(ELEMENTARY_CHARGE * (gate_capacitance / island_capacitance) * voltage_scale / HBAR)
}

/// Resonator-qubit coupling rate `lambda = 2 (E_C/hbar) (x_rms/d)`.
pub fn nems_coupling_rate(
    charging_energy: f64,
    x_rms: f64,
    gap_distance: f64,
) -> Result<f64, ParamsError> {
    require_finite("charging_energy", charging_energy)?;
    if charging_energy < 0.0 {
        return Err(ParamsError::NonPositive {
            name: "charging_energy",
            value: charging_energy,
        });
    }
    require_finite("x_rms", x_rms)?;
    if x_rms < 0.0 {
        return Err(ParamsError::NonPositive {
            name: "x_rms",
            value: x_rms,
        });
    }
    require_positive("gap_distance", gap_distance)?;
    Ok(2.0 * (charging_energy / HBAR) * (x_rms / gap_distance))
}

/// Cross-coupling rate `g * x_rms / d`.
pub fn cross_coupling_rate(
    cavity_coupling: f64,
    x_rms: f64,
    gap_distance: f64,
) -> Result<f64, ParamsError> {
    require_finite("cavity_coupling", cavity_coupling)?;
    require_finite("x_rms", x_rms)?;
    require_positive("gap_distance", gap_distance)?;
    Ok(cavity_coupling * x_rms / gap_distance)
}

/// Full raw-coupling bundle for a validated device.
pub fn raw_couplings(device: &DeviceParams) -> Result<RawCouplings, ParamsError> {
    device.validate()?;
    let g = cavity_coupling_rate(
        device.gate_capacitance,
        device.island_capacitance,
        device.cavity_frequency,
        device.inductance,
        device.cavity_capacitance,
    )?;
    raw_couplings_with_cavity_coupling(device, g)
}

/// Raw couplings with the cavity coupling `g` supplied directly, bypassing the
/// lumped-circuit estimate. Experiments typically quote `g` itself.
pub fn raw_couplings_with_cavity_coupling(
    device: &DeviceParams,
    cavity_coupling: f64,
) -> Result<RawCouplings, ParamsError> {
    device.validate()?;
    require_finite("cavity_coupling", cavity_coupling)?;
    let spread = x_rms(device.nems_mass, device.nems_frequency)?;
    Ok(RawCouplings {
        cavity_coupling,
        nems_coupling: nems_coupling_rate(device.charging_energy, spread, device.gap_distance)?,
        cross_coupling: cross_coupling_rate(cavity_coupling, spread, device.gap_distance)?,
        x_rms: spread,
        qubit_gap: qubit_gap(
            device.charging_energy,
            device.josephson_energy,
            device.dc_gate_charge,
        )?,
        mixing_angle: mixing_angle(
            device.charging_energy,
            device.josephson_energy,
            device.dc_gate_charge,
        )?,
    })
}

impl RawCouplings {
    /// Dispersive model for this coupling set at the given detuning.
    pub fn effective_model(&self, detuning: f64) -> Result<EffectiveModel, ParamsError> {
        EffectiveModel::from_couplings(self.cavity_coupling, self.nems_coupling, detuning)
    }
}
