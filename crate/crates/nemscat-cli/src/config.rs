//! The JSON scenario schema and its validation.
//!
//! A scenario names its parameter source (`device-units` with a `device`
//! section, or `dimensionless` with a `model` section), the damping rates,
//! the initial amplitudes, a uniform time grid and the list of outputs to
//! produce. Unknown keys are rejected everywhere.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use nemscat_core::coherent::InitialAmplitudes;
use nemscat_core::dissipative::DampingParams;
use nemscat_core::params::{self, DeviceParams, EffectiveModel};
use nemscat_core::Complex64 as C64;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "device-units")]
    DeviceUnits,
    #[serde(rename = "dimensionless")]
    Dimensionless,
}

/// `device` section: raw device quantities in SI units, plus an optional
/// directly measured cavity coupling that bypasses the lumped-circuit
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub charging_energy: f64,
    pub josephson_energy: f64,
    pub dc_gate_charge: f64,
    pub gate_capacitance: f64,
    pub island_capacitance: f64,
    pub inductance: f64,
    pub cavity_capacitance: f64,
    pub cavity_frequency: f64,
    pub nems_frequency: f64,
    pub nems_mass: f64,
    pub gap_distance: f64,
    pub detuning: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity_coupling_override: Option<f64>,
}

/// `model` section: either the dispersive rates directly (`chi`, `omega`,
/// `kappa`, all three) or the couplings they derive from (`g`, `lambda`,
/// `delta`, all three).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingSection {
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// Optional qubit dephasing rate applied as `exp(-gamma_qubit t)` on f.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_qubit: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub alpha0_re: f64,
    pub alpha0_im: f64,
    pub beta0_re: f64,
    pub beta0_im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub n_a: usize,
    pub n_b: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Trajectory,
    Decoherence,
    PMinus,
    OracleCompare,
    Orbits,
}

impl OutputKind {
    pub fn file_stem(&self) -> &'static str {
        match self {
            OutputKind::Trajectory => "trajectory",
            OutputKind::Decoherence => "decoherence",
            OutputKind::PMinus => "p_minus",
            OutputKind::OracleCompare => "oracle_compare",
            OutputKind::Orbits => "orbits",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    pub damping: DampingSection,
    pub initial: InitialSection,
    pub time: TimeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    pub outputs: Vec<OutputKind>,
}

/// Parse and validate a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parse and validate scenario JSON.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical JSON for a config; `parse_config_str(serialize_config(c)) == c`.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        match self.mode {
            Mode::DeviceUnits => {
                if self.device.is_none() {
                    return Err(CliError::Config(
                        "`mode` is \"device-units\" but the `device` section is missing".into(),
                    ));
                }
                if self.model.is_some() {
                    return Err(CliError::Config(
                        "`device` and `model` are mutually exclusive: device-units mode derives \
                         the model from the device section"
                            .into(),
                    ));
                }
            }
            Mode::Dimensionless => {
                if self.model.is_none() {
                    return Err(CliError::Config(
                        "`mode` is \"dimensionless\" but the `model` section is missing".into(),
                    ));
                }
                if self.device.is_some() {
                    return Err(CliError::Config(
                        "`device` and `model` are mutually exclusive: dimensionless mode takes \
                         its rates from the `model` section"
                            .into(),
                    ));
                }
            }
        }
        if let Some(model) = &self.model {
            let couplings = [model.g, model.lambda, model.delta]
                .iter()
                .filter(|v| v.is_some())
                .count();
            if couplings != 0 && couplings != 3 {
                return Err(CliError::Config(
                    "`model.g`, `model.lambda`, `model.delta` must be given all together".into(),
                ));
            }
            let rates = [model.chi, model.omega, model.kappa]
                .iter()
                .filter(|v| v.is_some())
                .count();
            if rates != 0 && rates != 3 {
                return Err(CliError::Config(
                    "`model.chi`, `model.omega`, `model.kappa` must be given all together".into(),
                ));
            }
            if rates == 0 && couplings == 0 {
                return Err(CliError::Config(
                    "`model` must set either {chi, omega, kappa} or {g, lambda, delta}".into(),
                ));
            }
        }
        for (name, value) in [
            ("damping.gamma_a", self.damping.gamma_a),
            ("damping.gamma_b", self.damping.gamma_b),
            ("damping.gamma_qubit", self.damping.gamma_qubit.unwrap_or(0.0)),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(CliError::Config(format!(
                    "`{name}` must be a finite nonnegative rate, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("initial.alpha0_re", self.initial.alpha0_re),
            ("initial.alpha0_im", self.initial.alpha0_im),
            ("initial.beta0_re", self.initial.beta0_re),
            ("initial.beta0_im", self.initial.beta0_im),
        ] {
            if !value.is_finite() {
                return Err(CliError::Config(format!("`{name}` must be finite")));
            }
        }
        if !(self.time.t_max.is_finite() && self.time.t_max > 0.0) {
            return Err(CliError::Config(format!(
                "`time.t_max` must be a positive finite duration, got {}",
                self.time.t_max
            )));
        }
        if self.time.n_points < 2 {
            return Err(CliError::Config(format!(
                "`time.n_points` must be at least 2 so the grid is strictly increasing, got {}",
                self.time.n_points
            )));
        }
        if let Some(oracle) = &self.oracle {
            if oracle.n_a < 2 || oracle.n_b < 2 {
                return Err(CliError::Config(format!(
                    "`oracle.n_a`/`oracle.n_b` must be at least 2, got {} x {}",
                    oracle.n_a, oracle.n_b
                )));
            }
            if !(oracle.dt.is_finite() && oracle.dt > 0.0) {
                return Err(CliError::Config(format!(
                    "`oracle.dt` must be a positive finite step, got {}",
                    oracle.dt
                )));
            }
        }
        if self.outputs.contains(&OutputKind::OracleCompare) && self.oracle.is_none() {
            return Err(CliError::Config(
                "output `oracle_compare` requires the `oracle` section (n_a, n_b, dt)".into(),
            ));
        }
        Ok(())
    }

    /// The uniform time grid `[0, t_max]`.
    pub fn time_grid(&self) -> Vec<f64> {
        let n = self.time.n_points;
        (0..n)
            .map(|i| self.time.t_max * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Validated, resolved quantities a run needs.
pub struct ResolvedScenario {
    pub model: EffectiveModel,
    pub damping: DampingParams,
    pub qubit_rate: f64,
    pub init: InitialAmplitudes,
    pub grid: Vec<f64>,
    pub oracle: Option<OracleSection>,
}

pub fn resolve(cfg: &ScenarioConfig) -> Result<ResolvedScenario, CliError> {
    let model = resolve_model(cfg)?;
    let damping = DampingParams::for_model(cfg.damping.gamma_a, cfg.damping.gamma_b, &model)?;
    let init = InitialAmplitudes::new(
        C64::new(cfg.initial.alpha0_re, cfg.initial.alpha0_im),
        C64::new(cfg.initial.beta0_re, cfg.initial.beta0_im),
    )?;
    Ok(ResolvedScenario {
        model,
        damping,
        qubit_rate: cfg.damping.gamma_qubit.unwrap_or(0.0),
        init,
        grid: cfg.time_grid(),
        oracle: cfg.oracle,
    })
}

fn resolve_model(cfg: &ScenarioConfig) -> Result<EffectiveModel, CliError> {
    match cfg.mode {
        Mode::DeviceUnits => {
            let device = cfg
                .device
                .as_ref()
                .ok_or_else(|| CliError::Config("missing `device` section".into()))?;
            let (raw, params) = device_couplings(device)?;
            Ok(raw.effective_model(params.detuning)?)
        }
        Mode::Dimensionless => {
            let model = cfg
                .model
                .as_ref()
                .ok_or_else(|| CliError::Config("missing `model` section".into()))?;
            let couplings = match (model.g, model.lambda, model.delta) {
                (Some(g), Some(lambda), Some(delta)) => Some((g, lambda, delta)),
                _ => None,
            };
            Ok(EffectiveModel::resolve(
                couplings,
                model.chi,
                model.omega,
                model.kappa,
            )?)
        }
    }
}

/// Raw couplings for a device section, honoring the direct `g` override.
pub fn device_couplings(
    device: &DeviceSection,
) -> Result<(params::RawCouplings, DeviceParams), CliError> {
    let params = DeviceParams {
        charging_energy: device.charging_energy,
        josephson_energy: device.josephson_energy,
        dc_gate_charge: device.dc_gate_charge,
        gate_capacitance: device.gate_capacitance,
        island_capacitance: device.island_capacitance,
        inductance: device.inductance,
        cavity_capacitance: device.cavity_capacitance,
        cavity_frequency: device.cavity_frequency,
        nems_frequency: device.nems_frequency,
        nems_mass: device.nems_mass,
        gap_distance: device.gap_distance,
        detuning: device.detuning,
    };
    let raw = match device.cavity_coupling_override {
        Some(g) => params::raw_couplings_with_cavity_coupling(&params, g)?,
        None => params::raw_couplings(&params)?,
    };
    Ok((raw, params))
}
