//! Experiment configuration: JSON schema, defaults and validation.
//!
//! A configuration file is a JSON object with the optional sections
//! `constants`, `trap`, `numerics`, `scan` and `spectroscopy`. Every field is
//! optional; omitted fields take the documented defaults (see
//! `docs/config.md`). All dimensional quantities are SI.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::units::{natural_units, PhysicalConstants, UnitScales};

/// Trap depth, either absolute or relative to `k_B T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrapDepth {
    /// `U0` in joules.
    Absolute(f64),
    /// `U0 / (k_B T)`.
    Ratio(f64),
}

/// Shape of the motional potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialModel {
    /// `-U0 exp(-2q²/w0²)` per transverse axis.
    Gaussian,
    /// Second-order expansion of the Gaussian bottom (or a pinned oscillation period).
    Harmonic,
}

/// Transverse axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    /// Gravity acts along this axis.
    Vertical,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Horizontal => "horizontal",
            Axis::Vertical => "vertical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    pub waist_w0: f64,
    pub depth: TrapDepth,
    pub wavelength_lambda: f64,
    pub temperature_t: f64,
    pub clip_ratio: f64,
    pub gravity_enabled: bool,
    pub epsilon_override: Option<f64>,
    /// Pins the transverse oscillation period instead of deriving it from the curvature.
    pub oscillation_period: Option<f64>,
    pub model: PotentialModel,
}

impl TrapConfig {
    /// `U0` in joules.
    pub fn depth_joules(&self, constants: &PhysicalConstants) -> f64 {
        match self.depth {
            TrapDepth::Absolute(u0) => u0,
            TrapDepth::Ratio(r) => r * constants.k_b * self.temperature_t,
        }
    }

    pub fn depth_ratio(&self, constants: &PhysicalConstants) -> f64 {
        self.depth_joules(constants) / (constants.k_b * self.temperature_t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    pub grid_points_per_axis: usize,
    /// Half-width of the spatial domain in metres; `None` selects it automatically.
    pub domain_halfwidth: Option<f64>,
    /// Bound-state cutoff in units of `U0`; `None` uses the domain-edge potential.
    pub basis_cutoff_energy: Option<f64>,
    pub dimensionality: usize,
    /// The single axis simulated when `dimensionality == 1`.
    pub axis_1d: Axis,
    pub scan_parallelism: Option<usize>,
    /// Desk-scale reduction: target `k_B T / ħω_osc`; `None` runs the physical regime.
    pub desk_thermal_quanta: Option<f64>,
}

impl NumericsConfig {
    pub fn axes(&self) -> Vec<Axis> {
        if self.dimensionality == 1 {
            vec![self.axis_1d]
        } else {
            vec![Axis::Horizontal, Axis::Vertical]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub tau_start: f64,
    pub tau_stop: f64,
    pub tau_points: usize,
    pub wavelengths: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Initial motional state; the thermal ensemble is used when absent.
    pub initial_state: Option<Vec<usize>>,
    /// Stratified subsample size; full enumeration when absent.
    pub samples: Option<usize>,
    pub seed: u64,
}

impl ScanConfig {
    pub fn taus(&self) -> Vec<f64> {
        if self.tau_points == 1 {
            return vec![self.tau_start];
        }
        let step = (self.tau_stop - self.tau_start) / (self.tau_points - 1) as f64;
        (0..self.tau_points).map(|i| self.tau_start + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopyConfig {
    /// Free-space Rabi frequency, rad/s.
    pub rabi_frequency: f64,
    pub pulse_duration: f64,
    /// Free-space pulse areas `Ω t`; each overrides `rabi_frequency`.
    pub pulse_areas: Vec<f64>,
    pub detuning_start_hz: f64,
    pub detuning_stop_hz: f64,
    pub detuning_points: usize,
    pub window_tail: f64,
    pub window_padding: usize,
}

impl SpectroscopyConfig {
    pub fn detunings_hz(&self) -> Vec<f64> {
        if self.detuning_points == 1 {
            return vec![self.detuning_start_hz];
        }
        let step = (self.detuning_stop_hz - self.detuning_start_hz) / (self.detuning_points - 1) as f64;
        (0..self.detuning_points)
            .map(|i| self.detuning_start_hz + step * i as f64)
            .collect()
    }

    /// Rabi frequencies (rad/s) to scan, one per requested pulse area.
    pub fn rabi_frequencies(&self) -> Vec<f64> {
        if self.pulse_areas.is_empty() {
            vec![self.rabi_frequency]
        } else {
            self.pulse_areas.iter().map(|a| a / self.pulse_duration).collect()
        }
    }
}

/// A fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub constants: PhysicalConstants,
    pub trap: TrapConfig,
    pub numerics: NumericsConfig,
    pub scan: ScanConfig,
    pub spectroscopy: SpectroscopyConfig,
}

// ---- raw (file) representation -------------------------------------------------

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constants: Option<RawConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trap: Option<RawTrap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    numerics: Option<RawNumerics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scan: Option<RawScan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spectroscopy: Option<RawSpectroscopy>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    hbar: Option<f64>,
    #[serde(rename = "k_B")]
    k_b: Option<f64>,
    gravity_g: Option<f64>,
    atom_mass: Option<f64>,
    #[serde(rename = "omega_HF")]
    omega_hf: Option<f64>,
    speed_of_light: Option<f64>,
    d1_wavelength: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTrap {
    waist_w0: Option<f64>,
    #[serde(rename = "trap_depth_U0")]
    trap_depth_u0: Option<f64>,
    depth_ratio: Option<f64>,
    wavelength_lambda: Option<f64>,
    #[serde(rename = "temperature_T")]
    temperature_t: Option<f64>,
    clip_ratio: Option<f64>,
    gravity_enabled: Option<bool>,
    epsilon_override: Option<f64>,
    oscillation_period: Option<f64>,
    model: Option<PotentialModel>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum RawHalfWidth {
    Metres(f64),
    Keyword(String),
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    grid_points_per_axis: Option<usize>,
    domain_halfwidth: Option<RawHalfWidth>,
    basis_cutoff_energy: Option<f64>,
    dimensionality: Option<usize>,
    axis_1d: Option<Axis>,
    scan_parallelism: Option<usize>,
    desk_thermal_quanta: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    tau_start: Option<f64>,
    tau_stop: Option<f64>,
    tau_points: Option<usize>,
    wavelengths: Option<Vec<f64>>,
    epsilons: Option<Vec<f64>>,
    initial_state: Option<Vec<usize>>,
    samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSpectroscopy {
    rabi_frequency: Option<f64>,
    pulse_duration: Option<f64>,
    pulse_areas: Option<Vec<f64>>,
    detuning_start_hz: Option<f64>,
    detuning_stop_hz: Option<f64>,
    detuning_points: Option<usize>,
    window_tail: Option<f64>,
    window_padding: Option<usize>,
}

/// Reads and validates a configuration file, filling defaults for omitted fields.
pub fn load_config(path: &Path) -> Result<Config> {
    let value = read_json(path)?;
    Config::from_value(value)
}

pub(crate) fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::config("<file>", e.to_string()))?;
    if !value.is_object() {
        return Err(Error::config("<root>", "configuration must be a JSON object"));
    }
    Ok(value)
}

/// Recursively overlays `top` onto `base`; objects merge key by key, anything else replaces.
pub(crate) fn merge_json(base: &mut Value, top: &Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge_json(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, t) => *b = t.clone(),
    }
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::config(field, format!("must be finite and > 0, got {value}")))
    }
}

impl Config {
    pub fn from_json_str(text: &str) -> Result<Config> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::config("<file>", e.to_string()))?;
        Config::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Config> {
        let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        Config::resolve(raw)
    }

    fn resolve(raw: RawConfig) -> Result<Config> {
        let defaults = PhysicalConstants::default();
        let rc = raw.constants.unwrap_or_default();
        let constants = PhysicalConstants {
            hbar: rc.hbar.unwrap_or(defaults.hbar),
            k_b: rc.k_b.unwrap_or(defaults.k_b),
            gravity_g: rc.gravity_g.unwrap_or(defaults.gravity_g),
            atom_mass: rc.atom_mass.unwrap_or(defaults.atom_mass),
            omega_hf: rc.omega_hf.unwrap_or(defaults.omega_hf),
            speed_of_light: rc.speed_of_light.unwrap_or(defaults.speed_of_light),
            d1_wavelength: rc.d1_wavelength.unwrap_or(defaults.d1_wavelength),
        };
        constants.validate()?;

        let rt = raw.trap.unwrap_or_default();
        let depth = match (rt.trap_depth_u0, rt.depth_ratio) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "trap.trap_depth_U0",
                    "give either trap_depth_U0 or depth_ratio, not both",
                ))
            }
            (Some(u0), None) => TrapDepth::Absolute(positive("trap.trap_depth_U0", u0)?),
            (None, Some(r)) => TrapDepth::Ratio(positive("trap.depth_ratio", r)?),
            (None, None) => TrapDepth::Ratio(1.5),
        };
        let trap = TrapConfig {
            waist_w0: positive("trap.waist_w0", rt.waist_w0.unwrap_or(50e-6))?,
            depth,
            wavelength_lambda: positive("trap.wavelength_lambda", rt.wavelength_lambda.unwrap_or(800e-9))?,
            temperature_t: positive("trap.temperature_T", rt.temperature_t.unwrap_or(20e-6))?,
            clip_ratio: positive("trap.clip_ratio", rt.clip_ratio.unwrap_or(1.5))?,
            gravity_enabled: rt.gravity_enabled.unwrap_or(true),
            epsilon_override: rt.epsilon_override,
            oscillation_period: rt
                .oscillation_period
                .map(|p| positive("trap.oscillation_period", p))
                .transpose()?,
            model: rt.model.unwrap_or(PotentialModel::Gaussian),
        };
        match trap.epsilon_override {
            Some(eps) if !(eps.is_finite() && eps >= 0.0) => {
                return Err(Error::config("trap.epsilon_override", format!("must be finite and >= 0, got {eps}")));
            }
            Some(_) => {}
            None => {
                if trap.wavelength_lambda <= constants.d1_wavelength {
                    return Err(Error::invariant(
                        "trap.wavelength_lambda > d1_wavelength",
                        format!(
                            "wavelength {:.3} nm is not red-detuned from the D1 line at {:.3} nm",
                            trap.wavelength_lambda * 1e9,
                            constants.d1_wavelength * 1e9
                        ),
                    ));
                }
            }
        }

        let rn = raw.numerics.unwrap_or_default();
        let grid_points = rn.grid_points_per_axis.unwrap_or(1024);
        if grid_points < 64 {
            return Err(Error::config(
                "numerics.grid_points_per_axis",
                format!("must be >= 64, got {grid_points}"),
            ));
        }
        let domain_halfwidth = match rn.domain_halfwidth {
            None => None,
            Some(RawHalfWidth::Keyword(k)) if k == "auto" => None,
            Some(RawHalfWidth::Keyword(k)) => {
                return Err(Error::config(
                    "numerics.domain_halfwidth",
                    format!("expected a length in metres or \"auto\", got \"{k}\""),
                ))
            }
            Some(RawHalfWidth::Metres(m)) => Some(positive("numerics.domain_halfwidth", m)?),
        };
        let dimensionality = rn.dimensionality.unwrap_or(2);
        if !(dimensionality == 1 || dimensionality == 2) {
            return Err(Error::config(
                "numerics.dimensionality",
                format!("must be 1 or 2, got {dimensionality}"),
            ));
        }
        if let Some(c) = rn.basis_cutoff_energy {
            if !c.is_finite() {
                return Err(Error::config("numerics.basis_cutoff_energy", "must be finite"));
            }
        }
        if rn.scan_parallelism == Some(0) {
            return Err(Error::config("numerics.scan_parallelism", "must be >= 1"));
        }
        let numerics = NumericsConfig {
            grid_points_per_axis: grid_points,
            domain_halfwidth,
            basis_cutoff_energy: rn.basis_cutoff_energy,
            dimensionality,
            axis_1d: rn.axis_1d.unwrap_or(Axis::Vertical),
            scan_parallelism: rn.scan_parallelism,
            desk_thermal_quanta: rn
                .desk_thermal_quanta
                .map(|q| positive("numerics.desk_thermal_quanta", q))
                .transpose()?,
        };

        let rs = raw.scan.unwrap_or_default();
        let scan = ScanConfig {
            tau_start: rs.tau_start.unwrap_or(0.0),
            tau_stop: rs.tau_stop.unwrap_or(10e-3),
            tau_points: rs.tau_points.unwrap_or(201),
            wavelengths: rs.wavelengths.unwrap_or_default(),
            epsilons: rs.epsilons.unwrap_or_default(),
            initial_state: rs.initial_state,
            samples: rs.samples,
            seed: rs.seed.unwrap_or(1),
        };
        if !(scan.tau_start.is_finite() && scan.tau_start >= 0.0) {
            return Err(Error::config("scan.tau_start", "must be finite and >= 0"));
        }
        if !(scan.tau_stop.is_finite() && scan.tau_stop >= scan.tau_start) {
            return Err(Error::config("scan.tau_stop", "must be finite and >= tau_start"));
        }
        if scan.tau_points == 0 {
            return Err(Error::config("scan.tau_points", "must be >= 1"));
        }
        for (i, &l) in scan.wavelengths.iter().enumerate() {
            if !(l.is_finite() && l > constants.d1_wavelength) {
                return Err(Error::config(
                    format!("scan.wavelengths[{i}]"),
                    format!("{l} m is not red-detuned from the D1 line"),
                ));
            }
        }
        for (i, w) in scan.epsilons.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::config(format!("scan.epsilons[{}]", i + 1), "must be strictly ascending"));
            }
        }
        if let Some(&e) = scan.epsilons.first() {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::config("scan.epsilons[0]", "must be >= 0"));
            }
        }
        if let Some(ref s) = scan.initial_state {
            if s.len() != numerics.dimensionality {
                return Err(Error::config(
                    "scan.initial_state",
                    format!("needs {} indices, got {}", numerics.dimensionality, s.len()),
                ));
            }
        }
        if scan.samples == Some(0) {
            return Err(Error::config("scan.samples", "must be >= 1"));
        }

        let rp = raw.spectroscopy.unwrap_or_default();
        let spectroscopy = SpectroscopyConfig {
            rabi_frequency: positive(
                "spectroscopy.rabi_frequency",
                rp.rabi_frequency.unwrap_or(2.0 * PI * 5.0e3),
            )?,
            pulse_duration: positive("spectroscopy.pulse_duration", rp.pulse_duration.unwrap_or(20e-3))?,
            pulse_areas: rp.pulse_areas.unwrap_or_default(),
            detuning_start_hz: rp.detuning_start_hz.unwrap_or(-700.0),
            detuning_stop_hz: rp.detuning_stop_hz.unwrap_or(1000.0),
            detuning_points: rp.detuning_points.unwrap_or(341),
            window_tail: positive("spectroscopy.window_tail", rp.window_tail.unwrap_or(1e-8))?,
            window_padding: rp.window_padding.unwrap_or(2),
        };
        for (i, &a) in spectroscopy.pulse_areas.iter().enumerate() {
            positive(&format!("spectroscopy.pulse_areas[{i}]"), a)?;
        }
        if spectroscopy.detuning_points == 0 {
            return Err(Error::config("spectroscopy.detuning_points", "must be >= 1"));
        }
        if !(spectroscopy.detuning_stop_hz >= spectroscopy.detuning_start_hz) {
            return Err(Error::config("spectroscopy.detuning_stop_hz", "must be >= detuning_start_hz"));
        }

        Ok(Config {
            constants,
            trap,
            numerics,
            scan,
            spectroscopy,
        })
    }

    /// Fully explicit JSON form; loading it reproduces `self`.
    pub fn to_value(&self) -> Value {
        let (u0, ratio) = match self.trap.depth {
            TrapDepth::Absolute(u) => (Some(u), None),
            TrapDepth::Ratio(r) => (None, Some(r)),
        };
        let raw = RawConfig {
            constants: Some(RawConstants {
                hbar: Some(self.constants.hbar),
                k_b: Some(self.constants.k_b),
                gravity_g: Some(self.constants.gravity_g),
                atom_mass: Some(self.constants.atom_mass),
                omega_hf: Some(self.constants.omega_hf),
                speed_of_light: Some(self.constants.speed_of_light),
                d1_wavelength: Some(self.constants.d1_wavelength),
            }),
            trap: Some(RawTrap {
                waist_w0: Some(self.trap.waist_w0),
                trap_depth_u0: u0,
                depth_ratio: ratio,
                wavelength_lambda: Some(self.trap.wavelength_lambda),
                temperature_t: Some(self.trap.temperature_t),
                clip_ratio: Some(self.trap.clip_ratio),
                gravity_enabled: Some(self.trap.gravity_enabled),
                epsilon_override: self.trap.epsilon_override,
                oscillation_period: self.trap.oscillation_period,
                model: Some(self.trap.model),
            }),
            numerics: Some(RawNumerics {
                grid_points_per_axis: Some(self.numerics.grid_points_per_axis),
                domain_halfwidth: Some(match self.numerics.domain_halfwidth {
                    Some(m) => RawHalfWidth::Metres(m),
                    None => RawHalfWidth::Keyword("auto".into()),
                }),
                basis_cutoff_energy: self.numerics.basis_cutoff_energy,
                dimensionality: Some(self.numerics.dimensionality),
                axis_1d: Some(self.numerics.axis_1d),
                scan_parallelism: self.numerics.scan_parallelism,
                desk_thermal_quanta: self.numerics.desk_thermal_quanta,
            }),
            scan: Some(RawScan {
                tau_start: Some(self.scan.tau_start),
                tau_stop: Some(self.scan.tau_stop),
                tau_points: Some(self.scan.tau_points),
                wavelengths: Some(self.scan.wavelengths.clone()),
                epsilons: Some(self.scan.epsilons.clone()),
                initial_state: self.scan.initial_state.clone(),
                samples: self.scan.samples,
                seed: Some(self.scan.seed),
            }),
            spectroscopy: Some(RawSpectroscopy {
                rabi_frequency: Some(self.spectroscopy.rabi_frequency),
                pulse_duration: Some(self.spectroscopy.pulse_duration),
                pulse_areas: Some(self.spectroscopy.pulse_areas.clone()),
                detuning_start_hz: Some(self.spectroscopy.detuning_start_hz),
                detuning_stop_hz: Some(self.spectroscopy.detuning_stop_hz),
                detuning_points: Some(self.spectroscopy.detuning_points),
                window_tail: Some(self.spectroscopy.window_tail),
                window_padding: Some(self.spectroscopy.window_padding),
            }),
        };
        let mut value = serde_json::to_value(raw).expect("config serializes");
        strip_nulls(&mut value);
        value
    }

    /// Physical-regime unit scales (`ħ_eff = ħ`).
    pub fn natural_units(&self) -> UnitScales {
        natural_units(
            &self.constants,
            self.trap.waist_w0,
            self.trap.depth_joules(&self.constants),
            self.trap.temperature_t,
        )
    }
}

fn strip_nulls(v: &mut Value) {
    if let Value::Object(map) = v {
        map.retain(|_, x| !x.is_null());
        for x in map.values_mut() {
            strip_nulls(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_reference_defaults() {
        let cfg = Config::from_json_str(r#"{"trap": {"wavelength_lambda": 805e-9}}"#).unwrap();
        assert_eq!(cfg.trap.waist_w0, 50e-6);
        assert_eq!(cfg.trap.temperature_t, 20e-6);
        assert_eq!(cfg.trap.depth, TrapDepth::Ratio(1.5));
        assert_eq!(cfg.trap.clip_ratio, 1.5);
        assert_eq!(cfg.trap.wavelength_lambda, 805e-9);
        assert!(cfg.trap.gravity_enabled);
    }

    #[test]
    fn negative_temperature_names_the_field() {
        let err = Config::from_json_str(r#"{"trap": {"temperature_T": -1}}"#).unwrap_err();
        assert!(err.to_string().contains("temperature_T"), "{err}");
        assert!(err.is_config_error());
    }

    #[test]
    fn epsilon_override_replaces_wavelength() {
        let cfg = Config::from_json_str(r#"{"trap": {"epsilon_override": 0.0013, "wavelength_lambda": 790e-9}}"#).unwrap();
        assert_eq!(cfg.trap.epsilon_override, Some(0.0013));
        let err = Config::from_json_str(r#"{"trap": {"wavelength_lambda": 790e-9}}"#).unwrap_err();
        assert!(err.to_string().contains("wavelength_lambda"), "{err}");
    }

    #[test]
    fn schema_violation_reports_path() {
        let err = Config::from_json_str(r#"{"numerics": {"grid_points_per_axis": "many"}}"#).unwrap_err();
        assert!(err.to_string().contains("numerics.grid_points_per_axis"), "{err}");
        let err = Config::from_json_str(r#"{"trap": {"colour": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn grid_too_small_rejected() {
        let err = Config::from_json_str(r#"{"numerics": {"grid_points_per_axis": 32}}"#).unwrap_err();
        assert!(err.to_string().contains("grid_points_per_axis"));
    }

    #[test]
    fn serialize_round_trip() {
        let text = r#"{
            "trap": {"trap_depth_U0": 4e-28, "epsilon_override": 0.002, "model": "harmonic", "oscillation_period": 3.6e-3},
            "numerics": {"dimensionality": 1, "domain_halfwidth": 1.2e-4, "desk_thermal_quanta": 40},
            "scan": {"epsilons": [1e-4, 1e-3], "initial_state": [3], "samples": 50},
            "spectroscopy": {"pulse_areas": [3.14159]}
        }"#;
        let cfg = Config::from_json_str(text).unwrap();
        let again = Config::from_value(cfg.to_value()).unwrap();
        assert_eq!(cfg, again);
        let defaults = Config::from_json_str("{}").unwrap();
        assert_eq!(Config::from_value(defaults.to_value()).unwrap(), defaults);
    }

    #[test]
    fn merge_overlays_nested_objects() {
        let mut base = serde_json::json!({"trap": {"model": "harmonic", "clip_ratio": 2.0}, "scan": {"seed": 3}});
        merge_json(&mut base, &serde_json::json!({"trap": {"clip_ratio": 1.5}}));
        assert_eq!(base["trap"]["model"], "harmonic");
        assert_eq!(base["trap"]["clip_ratio"], 1.5);
        assert_eq!(base["scan"]["seed"], 3);
    }
}
