//! Physical constants and the internal unit system.
//!
//! Every physics routine works in internal units: length in units of the
//! trap waist `w0`, energy in units of the trap depth `U0`, and time in units
//! of `ħ_eff/U0`, so that `ħ_eff = 1`. The kinetic operator becomes
//! `-κ d²/dq²` with the dimensionless `κ = ħ_eff²/(2 m w0² U0)`.
//!
//! `ħ_eff = s·ħ` where `s` is the quantum scale factor used by the desk-scale
//! reduction (see [`UnitScales::with_quantum_scale`]); `s = 1` is the physical
//! regime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass of ⁸⁵Rb in kg (84.911789738 u).
pub const RB85_MASS: f64 = 84.911_789_738 * 1.660_539_066_60e-27;

/// Fundamental and species constants, all SI by default.
///
/// The values are configurable so that a simulation can be expressed in any
/// consistent unit system; dimensionless outputs do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    pub hbar: f64,
    #[serde(rename = "k_B")]
    pub k_b: f64,
    pub gravity_g: f64,
    pub atom_mass: f64,
    /// Hyperfine splitting as an angular frequency.
    #[serde(rename = "omega_HF")]
    pub omega_hf: f64,
    pub speed_of_light: f64,
    /// Reference D1 wavelength used for the differential light shift.
    pub d1_wavelength: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.054_571_817e-34,
            k_b: 1.380_649e-23,
            gravity_g: 9.81,
            atom_mass: RB85_MASS,
            omega_hf: 2.0 * std::f64::consts::PI * 3.036e9,
            speed_of_light: 299_792_458.0,
            d1_wavelength: 795.0e-9,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("constants.hbar", self.hbar),
            ("constants.k_B", self.k_b),
            ("constants.gravity_g", self.gravity_g),
            ("constants.atom_mass", self.atom_mass),
            ("constants.omega_HF", self.omega_hf),
            ("constants.speed_of_light", self.speed_of_light),
            ("constants.d1_wavelength", self.d1_wavelength),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(name, format!("must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }
}

/// Conversion factors between SI and internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScales {
    /// One internal length unit in metres (the waist `w0`).
    pub length: f64,
    /// One internal energy unit in joules (the depth `U0`).
    pub energy: f64,
    /// One internal time unit in seconds (`ħ_eff/U0`).
    pub time: f64,
    /// `ħ_eff/ħ`; 1 in the physical regime.
    pub quantum_scale: f64,
    /// Kinetic prefactor `κ = ħ_eff²/(2 m w0² U0)`.
    pub kinetic: f64,
    /// Gravitational tilt `m g w0 / U0` per internal length unit.
    pub gravity_tilt: f64,
    /// `k_B T / U0`.
    pub thermal_energy: f64,
}

/// Internal scaling for a trap of waist `waist` (m), depth `depth` (J) and
/// temperature `temperature` (K).
pub fn natural_units(constants: &PhysicalConstants, waist: f64, depth: f64, temperature: f64) -> UnitScales {
    let kinetic = constants.hbar * constants.hbar / (2.0 * constants.atom_mass * waist * waist * depth);
    UnitScales {
        length: waist,
        energy: depth,
        time: constants.hbar / depth,
        quantum_scale: 1.0,
        kinetic,
        gravity_tilt: constants.atom_mass * constants.gravity_g * waist / depth,
        thermal_energy: constants.k_b * temperature / depth,
    }
}

impl UnitScales {
    /// Returns scales with `ħ_eff = s·ħ`.
    ///
    /// Classical quantities (lengths, energies, oscillation periods) keep their
    /// values; only the level spacing grows by `s`.
    pub fn with_quantum_scale(&self, s: f64) -> UnitScales {
        let ratio = s / self.quantum_scale;
        UnitScales {
            time: self.time * ratio,
            quantum_scale: s,
            kinetic: self.kinetic * ratio * ratio,
            ..*self
        }
    }

    pub fn length_to_internal(&self, metres: f64) -> f64 {
        metres / self.length
    }

    pub fn length_from_internal(&self, q: f64) -> f64 {
        q * self.length
    }

    pub fn energy_to_internal(&self, joules: f64) -> f64 {
        joules / self.energy
    }

    pub fn energy_from_internal(&self, e: f64) -> f64 {
        e * self.energy
    }

    pub fn time_to_internal(&self, seconds: f64) -> f64 {
        seconds / self.time
    }

    pub fn time_from_internal(&self, t: f64) -> f64 {
        t * self.time
    }

    /// rad/s to internal angular frequency (equal to an internal energy since `ħ_eff = 1`).
    pub fn angular_to_internal(&self, rad_per_s: f64) -> f64 {
        rad_per_s * self.time
    }

    pub fn angular_from_internal(&self, w: f64) -> f64 {
        w / self.time
    }

    /// Internal mass such that `κ = 1/(2 m)`.
    pub fn internal_mass(&self) -> f64 {
        0.5 / self.kinetic
    }

    /// Oscillator length `sqrt(ħ_eff/(m ω))` in internal units for internal frequency `omega`.
    pub fn oscillator_length(&self, omega: f64) -> f64 {
        (2.0 * self.kinetic / omega).sqrt()
    }

    /// Number of thermal quanta `k_B T / ħ_eff ω` for internal frequency `omega`.
    pub fn thermal_quanta(&self, omega: f64) -> f64 {
        self.thermal_energy / omega
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_scales() -> UnitScales {
        let c = PhysicalConstants::default();
        let depth = 1.5 * c.k_b * 20e-6;
        natural_units(&c, 50e-6, depth, 20e-6)
    }

    #[test]
    fn time_unit_matches_direct_evaluation() {
        // ħ/(1.5 k_B 20 µK) with CODATA 2018 values evaluates to 2.546078e-7 s
        let s = reference_scales();
        assert!((s.time - 2.546_077_5e-7).abs() / 2.546_077_5e-7 < 1e-7, "{}", s.time);
    }

    #[test]
    fn one_internal_energy_is_the_depth() {
        let s = reference_scales();
        assert_eq!(s.energy_from_internal(1.0), s.energy);
        assert_eq!(s.thermal_energy, 1.0 / 1.5);
    }

    #[test]
    fn quantum_scale_keeps_classical_frequency() {
        let s = reference_scales();
        let d = s.with_quantum_scale(30.0);
        // ω = sqrt(4 U0 / m w0²) in internal units is sqrt(8κ); converting back to rad/s
        // must not depend on ħ_eff.
        let w_phys = s.angular_from_internal((8.0 * s.kinetic).sqrt());
        let w_desk = d.angular_from_internal((8.0 * d.kinetic).sqrt());
        assert!((w_phys - w_desk).abs() / w_phys < 1e-14);
        assert!((s.thermal_quanta((8.0 * s.kinetic).sqrt()) / d.thermal_quanta((8.0 * d.kinetic).sqrt()) - 30.0).abs() < 1e-9);
    }

    fn ulps(a: f64, b: f64) -> u64 {
        (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
    }

    proptest! {
        #[test]
        fn conversions_round_trip(x in -1e3f64..1e3, s in 1.0f64..100.0) {
            let u = reference_scales().with_quantum_scale(s);
            prop_assume!(x != 0.0);
            prop_assert!(ulps(u.length_to_internal(u.length_from_internal(x)), x) <= 4);
            prop_assert!(ulps(u.energy_to_internal(u.energy_from_internal(x)), x) <= 4);
            prop_assert!(ulps(u.time_to_internal(u.time_from_internal(x)), x) <= 4);
            prop_assert!(ulps(u.angular_to_internal(u.angular_from_internal(x)), x) <= 4);
        }
    }
}
