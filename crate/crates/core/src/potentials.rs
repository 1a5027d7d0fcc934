//! State-dependent motional potentials on each transverse axis.
//!
//! Positions are in units of the waist `w0` and energies in units of the trap
//! depth `U0`. Branch 1 sees `V1(q) = -exp(-2q²) + t·q` (the tilt `t` only on
//! the vertical axis with gravity on), branch 2 sees the optical part scaled
//! by `1 + ε` and the same gravity term. The hyperfine offset of branch 2 is
//! kept apart from the samples in [`PotentialPair::e_hf`].

use std::io::Write;
use std::path::Path;

use crate::config::{Axis, NumericsConfig, PotentialModel, TrapConfig};
use crate::error::{Error, Result};
use crate::units::{PhysicalConstants, UnitScales};

/// Uniform grid `start + i·step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    /// `len` points spanning `[lower, upper]` inclusive.
    pub fn spanning(lower: f64, upper: f64, len: usize) -> Grid {
        assert!(len >= 2 && upper > lower, "grid needs two points and a positive span");
        Grid {
            start: lower,
            step: (upper - lower) / (len - 1) as f64,
            len,
        }
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    /// Quadrature weight of every point.
    pub fn weight(&self) -> f64 {
        self.step
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.len == other.len
            && (self.start - other.start).abs() <= 1e-12 * self.step
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }
}

/// Closed-form description of an axis potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticKind {
    /// `-depth·exp(-2q²)` plus the tilt.
    Gaussian { depth: f64 },
    /// `minimum + ½·m·ω²·(q - center)²`, gravity included.
    Harmonic { omega: f64, center: f64, minimum: f64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisPotential {
    pub axis: Axis,
    pub grid: Grid,
    /// Optical part of the potential.
    pub optical: Vec<f64>,
    /// Total potential (optical plus gravity).
    pub values: Vec<f64>,
    pub kind: AnalyticKind,
    /// Kinetic prefactor `κ` of `-κ d²/dq²`.
    pub kinetic: f64,
    /// Gravity tilt applied to this axis (0 when absent).
    pub tilt: f64,
}

impl AxisPotential {
    pub fn gaussian(axis: Axis, grid: Grid, depth: f64, tilt: f64, kinetic: f64) -> AxisPotential {
        let optical: Vec<f64> = grid.points().iter().map(|&q| -depth * (-2.0 * q * q).exp()).collect();
        let values = grid
            .points()
            .iter()
            .zip(&optical)
            .map(|(&q, &v)| v + tilt * q)
            .collect();
        AxisPotential {
            axis,
            grid,
            optical,
            values,
            kind: AnalyticKind::Gaussian { depth },
            kinetic,
            tilt,
        }
    }

    /// Harmonic well `minimum + ½mω²(q-center)²` whose optical part is the total minus the tilt.
    pub fn harmonic(axis: Axis, grid: Grid, omega: f64, center: f64, minimum: f64, tilt: f64, kinetic: f64) -> AxisPotential {
        let mass = 0.5 / kinetic;
        let values: Vec<f64> = grid
            .points()
            .iter()
            .map(|&q| minimum + 0.5 * mass * omega * omega * (q - center) * (q - center))
            .collect();
        let optical = grid.points().iter().zip(&values).map(|(&q, &v)| v - tilt * q).collect();
        AxisPotential {
            axis,
            grid,
            optical,
            values,
            kind: AnalyticKind::Harmonic { omega, center, minimum },
            kinetic,
            tilt,
        }
    }

    pub fn custom(axis: Axis, grid: Grid, values: Vec<f64>, kinetic: f64) -> Result<AxisPotential> {
        if values.len() != grid.len {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {}-point grid",
                values.len(),
                grid.len
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("potential sample {i} is not finite")));
        }
        Ok(AxisPotential {
            axis,
            grid,
            optical: values.clone(),
            values,
            kind: AnalyticKind::Custom,
            kinetic,
            tilt: 0.0,
        })
    }

    pub fn internal_mass(&self) -> f64 {
        0.5 / self.kinetic
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Exact minimum of the analytic form (grid minimum for custom samples).
    pub fn minimum(&self) -> f64 {
        match self.kind {
            AnalyticKind::Harmonic { minimum, .. } => minimum,
            AnalyticKind::Gaussian { depth } => {
                let (_, v) = gaussian_minimum(depth, self.tilt);
                v
            }
            AnalyticKind::Custom => self.min_value(),
        }
    }

    /// Location of the minimum.
    pub fn argmin(&self) -> f64 {
        match self.kind {
            AnalyticKind::Harmonic { center, .. } => center,
            AnalyticKind::Gaussian { depth } => gaussian_minimum(depth, self.tilt).0,
            AnalyticKind::Custom => self.grid_argmin(),
        }
    }

    pub fn grid_argmin(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
        self.grid.point(i)
    }

    /// Lower of the two edge values: the default bound-state cutoff.
    pub fn edge_value(&self) -> f64 {
        self.values[0].min(self.values[self.values.len() - 1])
    }

    /// Two-column CSV `position_m,energy_U0`.
    pub fn write_csv(&self, path: &Path, units: &UnitScales) -> Result<()> {
        let mut out = String::from("position_m,energy_U0\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.12e},{:.15e}\n", units.length_from_internal(self.grid.point(i)), v));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Minimum `(q, V)` of `-depth·exp(-2q²) + t·q`.
fn gaussian_minimum(depth: f64, tilt: f64) -> (f64, f64) {
    if tilt == 0.0 {
        return (0.0, -depth);
    }
    // V'(q) = 4 q depth exp(-2q²) + t vanishes on (-1/2, 0) for t > 0
    let dv = |q: f64| 4.0 * q * depth * (-2.0 * q * q).exp() + tilt;
    let (mut a, mut b) = if tilt > 0.0 { (-0.5, 0.0) } else { (0.0, 0.5) };
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (dv(m) > 0.0) == (dv(b) > 0.0) {
            b = m;
        } else {
            a = m;
        }
    }
    let q = 0.5 * (a + b);
    (q, -depth * (-2.0 * q * q).exp() + tilt * q)
}

/// Barrier (local maximum) on the downhill side of a tilted Gaussian well, if the well exists.
pub fn gaussian_barrier(depth: f64, tilt: f64) -> Option<f64> {
    if tilt == 0.0 {
        return None;
    }
    let t = tilt.abs();
    // -4q·depth·exp(-2q²) peaks at q = -1/2 with value 2·depth·e^{-1/2}
    if t >= 2.0 * depth * (-0.5f64).exp() {
        return None;
    }
    let dv = |q: f64| 4.0 * q * depth * (-2.0 * q * q).exp() + t;
    let (mut a, mut b) = (-10.0, -0.5);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (dv(m) > 0.0) == (dv(b) > 0.0) {
            b = m;
        } else {
            a = m;
        }
    }
    let q = 0.5 * (a + b);
    Some(if tilt > 0.0 { q } else { -q })
}

/// Differential light-shift ratio `ε = ω_HF / δ` with `δ = 2πc(1/λ_D1 - 1/λ)`.
pub fn epsilon_from_wavelength(lambda: f64, constants: &PhysicalConstants) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::config("trap.wavelength_lambda", format!("must be finite and > 0, got {lambda}")));
    }
    if lambda <= constants.d1_wavelength {
        return Err(Error::invariant(
            "wavelength_lambda > d1_wavelength",
            format!(
                "{:.4} nm is on or blue of the D1 line at {:.4} nm",
                lambda * 1e9,
                constants.d1_wavelength * 1e9
            ),
        ));
    }
    let delta = 2.0 * std::f64::consts::PI * constants.speed_of_light * (1.0 / constants.d1_wavelength - 1.0 / lambda);
    Ok(constants.omega_hf / delta)
}

/// The two branch potentials on a shared set of axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    pub v1: Vec<AxisPotential>,
    pub v2: Vec<AxisPotential>,
    /// Perturbation used by the model (desk-scaled when the reduction is active).
    pub epsilon: f64,
    /// Perturbation of the physical system.
    pub epsilon_physical: f64,
    /// Hyperfine offset of branch 2, internal energy units.
    pub e_hf: f64,
    pub units: UnitScales,
    /// Pinned branch-1 oscillation frequency (internal units), if any.
    pub omega_pin: Option<f64>,
}

impl PotentialPair {
    pub fn axes(&self) -> Vec<Axis> {
        self.v1.iter().map(|a| a.axis).collect()
    }

    /// `max_q |V2(q) - (1+ε)V1(q)|` over the optical parts, all axes.
    pub fn scaling_residual(&self) -> f64 {
        self.v1
            .iter()
            .zip(&self.v2)
            .flat_map(|(a, b)| {
                a.optical
                    .iter()
                    .zip(&b.optical)
                    .map(|(x, y)| (y - (1.0 + self.epsilon) * x).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Internal scales and perturbation of a configured system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelScales {
    pub units: UnitScales,
    pub epsilon_physical: f64,
    pub epsilon: f64,
    /// Branch-1 reference oscillation frequency (internal units): pinned, or the Gaussian curvature.
    pub omega_ref: f64,
    pub omega_pin: Option<f64>,
}

impl ModelScales {
    pub fn oscillation_period_s(&self) -> f64 {
        self.units.time_from_internal(2.0 * std::f64::consts::PI / self.omega_ref)
    }
}

/// Units, ε and the desk-scale reduction for a configuration.
///
/// With `desk_thermal_quanta = Some(r)`, `ħ_eff = s·ħ` and `ε_eff = s·ε` with
/// `s = (k_B T / ħ ω_ref) / r`; all classical scales are untouched.
pub fn model_scales(trap: &TrapConfig, numerics: &NumericsConfig, constants: &PhysicalConstants) -> Result<ModelScales> {
    let base = crate::units::natural_units(
        constants,
        trap.waist_w0,
        trap.depth_joules(constants),
        trap.temperature_t,
    );
    let epsilon_physical = match trap.epsilon_override {
        Some(e) => e,
        None => epsilon_from_wavelength(trap.wavelength_lambda, constants)?,
    };
    let omega_of = |u: &UnitScales| match trap.oscillation_period {
        Some(p) => u.angular_to_internal(2.0 * std::f64::consts::PI / p),
        None => (8.0 * u.kinetic).sqrt(),
    };
    let scale = match numerics.desk_thermal_quanta {
        Some(target) => base.thermal_quanta(omega_of(&base)) / target,
        None => 1.0,
    };
    let units = base.with_quantum_scale(scale);
    let omega_ref = omega_of(&units);
    Ok(ModelScales {
        units,
        epsilon_physical,
        epsilon: epsilon_physical * scale,
        omega_ref,
        omega_pin: trap.oscillation_period.map(|_| omega_ref),
    })
}

fn axis_tilt(axis: Axis, trap: &TrapConfig, units: &UnitScales) -> f64 {
    if axis == Axis::Vertical && trap.gravity_enabled {
        units.gravity_tilt
    } else {
        0.0
    }
}

/// Default spatial extent `[lower, upper]` of a Gaussian axis.
fn gaussian_extent(halfwidth: Option<f64>, tilt: f64) -> Result<(f64, f64)> {
    let hw = halfwidth.unwrap_or(2.5);
    let mut lower = -hw;
    let mut upper = hw;
    if tilt != 0.0 {
        let barrier = gaussian_barrier(1.0, tilt)
            .ok_or_else(|| Error::invariant("gravity_tilt < trap confinement", "gravity overwhelms the trap; no bound well"))?;
        if tilt > 0.0 {
            lower = lower.max(barrier);
        } else {
            upper = upper.min(barrier);
        }
    }
    Ok((lower, upper))
}

/// Builds the branch potentials for a configuration.
///
/// The Gaussian model is sampled directly; the harmonic model is the
/// [`harmonic_surrogate`] of the Gaussian pair.
pub fn build_pair(trap: &TrapConfig, numerics: &NumericsConfig, constants: &PhysicalConstants) -> Result<PotentialPair> {
    let scales = model_scales(trap, numerics, constants)?;
    let units = scales.units;
    let hw_internal = numerics.domain_halfwidth.map(|m| units.length_to_internal(m));
    let mut v1 = Vec::new();
    let mut v2 = Vec::new();
    for axis in numerics.axes() {
        let tilt = axis_tilt(axis, trap, &units);
        let (lower, upper) = gaussian_extent(hw_internal, tilt)?;
        let grid = Grid::spanning(lower, upper, numerics.grid_points_per_axis);
        v1.push(AxisPotential::gaussian(axis, grid, 1.0, tilt, units.kinetic));
        v2.push(AxisPotential::gaussian(axis, grid, 1.0 + scales.epsilon, tilt, units.kinetic));
    }
    let pair = PotentialPair {
        v1,
        v2,
        epsilon: scales.epsilon,
        epsilon_physical: scales.epsilon_physical,
        e_hf: units.angular_to_internal(constants.omega_hf),
        units,
        omega_pin: scales.omega_pin,
    };
    match trap.model {
        PotentialModel::Gaussian => Ok(pair),
        PotentialModel::Harmonic => Ok(harmonic_surrogate_with_extent(
            &pair,
            hw_internal,
            numerics.grid_points_per_axis,
            None,
        )),
    }
}

/// Branch frequencies, centres and minima of the harmonic surrogate of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicAxis {
    pub omega1: f64,
    pub omega2: f64,
    pub center1: f64,
    pub center2: f64,
    pub minimum1: f64,
    pub minimum2: f64,
}

impl HarmonicAxis {
    /// Exact completion of the square with the optical bottom
    /// `(1+ε_b)(-1 + ½mω₁²q²)` and tilt `t`.
    pub fn new(omega1: f64, epsilon: f64, tilt: f64, mass: f64) -> HarmonicAxis {
        let omega2 = omega1 * (1.0 + epsilon).sqrt();
        let center = |w: f64| -tilt / (mass * w * w);
        let minimum = |w: f64, depth: f64| -depth - tilt * tilt / (2.0 * mass * w * w);
        HarmonicAxis {
            omega1,
            omega2,
            center1: center(omega1),
            center2: center(omega2),
            minimum1: minimum(omega1, 1.0),
            minimum2: minimum(omega2, 1.0 + epsilon),
        }
    }

    /// Displacement of the branch-2 minimum relative to branch 1.
    pub fn displacement(&self) -> f64 {
        self.center2 - self.center1
    }
}

/// Per-axis harmonic parameters of a pair (curvature route unless pinned).
pub fn harmonic_axes(pair: &PotentialPair) -> Vec<HarmonicAxis> {
    pair.v1
        .iter()
        .map(|a| {
            let mass = a.internal_mass();
            let omega1 = pair.omega_pin.unwrap_or_else(|| (4.0 / mass).sqrt());
            HarmonicAxis::new(omega1, pair.epsilon, a.tilt, mass)
        })
        .collect()
}

/// Second-order expansion of each axis about the optical bottom, gravity kept exactly.
///
/// `ω₁` follows the Gaussian curvature `sqrt(4U0/(m w0²))` or the pinned
/// oscillation period; `ω₂ = ω₁ sqrt(1+ε)`. The grid is re-centred so it
/// covers the classically allowed region below the original cutoff.
pub fn harmonic_surrogate(pair: &PotentialPair) -> PotentialPair {
    let n = pair.v1[0].grid.len;
    harmonic_surrogate_with_extent(pair, None, n, None)
}

/// Surrogate on a grid of `points` per axis. `cutoff_above_min` sets the
/// energy (above the branch-1 minimum) the automatic domain must hold.
pub fn harmonic_surrogate_with_extent(
    pair: &PotentialPair,
    halfwidth: Option<f64>,
    points: usize,
    cutoff_above_min: Option<f64>,
) -> PotentialPair {
    let mut v1 = Vec::new();
    let mut v2 = Vec::new();
    for (a, h) in pair.v1.iter().zip(harmonic_axes(pair)) {
        let mass = a.internal_mass();
        let mid = 0.5 * (h.center1 + h.center2);
        let hw = halfwidth.unwrap_or_else(|| harmonic_halfwidth(h.omega1, mass, cutoff_above_min.unwrap_or(1.0)));
        let grid = Grid::spanning(mid - hw, mid + hw, points);
        v1.push(AxisPotential::harmonic(a.axis, grid, h.omega1, h.center1, h.minimum1, a.tilt, a.kinetic));
        v2.push(AxisPotential::harmonic(a.axis, grid, h.omega2, h.center2, h.minimum2, a.tilt, a.kinetic));
    }
    PotentialPair { v1, v2, ..pair.clone() }
}

/// Half-width holding the eigenstates up to `energy` above the bottom, with
/// a margin of ten oscillator lengths beyond the turning point.
pub fn harmonic_halfwidth(omega: f64, mass: f64, energy: f64) -> f64 {
    let turning = (2.0 * energy / (mass * omega * omega)).sqrt();
    let a = (1.0 / (mass * omega)).sqrt();
    1.3 * turning + 10.0 * a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use proptest::prelude::*;

    fn reference_config(extra: &str) -> Config {
        Config::from_json_str(extra).unwrap()
    }

    #[test]
    fn epsilon_matches_detuning_formula() {
        let c = PhysicalConstants::default();
        // independent evaluation: ε = f_HF / (c (1/λ_D1 - 1/λ)) with frequencies in Hz
        let oracle = |l: f64| 3.036e9 / (299_792_458.0 * (1.0 / 795e-9 - 1.0 / l));
        for l in [805e-9, 800e-9, 798.25e-9, 796.25e-9] {
            let e = epsilon_from_wavelength(l, &c).unwrap();
            assert!((e - oracle(l)).abs() / oracle(l) < 1e-12);
        }
        let e805 = epsilon_from_wavelength(805e-9, &c).unwrap();
        assert!((e805 - 6.481e-4).abs() < 1e-6, "{e805}");
        let e796 = epsilon_from_wavelength(796.25e-9, &c).unwrap();
        assert!((e796 - 5.1285e-3).abs() < 1e-6, "{e796}");
        let e800 = epsilon_from_wavelength(800e-9, &c).unwrap();
        assert!((e800 - 1.2882e-3).abs() < 1e-6, "{e800}");
        assert!(epsilon_from_wavelength(795e-9, &c).is_err());
        assert!(epsilon_from_wavelength(790e-9, &c).is_err());
    }

    proptest! {
        #[test]
        fn epsilon_decreases_with_wavelength(a in 795.01e-9f64..900e-9, b in 795.01e-9f64..900e-9) {
            prop_assume!(a < b);
            let c = PhysicalConstants::default();
            prop_assert!(epsilon_from_wavelength(a, &c).unwrap() > epsilon_from_wavelength(b, &c).unwrap());
        }
    }

    #[test]
    fn zero_epsilon_gives_identical_branches() {
        let cfg = reference_config(r#"{"trap": {"epsilon_override": 0.0}, "numerics": {"grid_points_per_axis": 128}}"#);
        let pair = build_pair(&cfg.trap, &cfg.numerics, &cfg.constants).unwrap();
        for (a, b) in pair.v1.iter().zip(&pair.v2) {
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn gravity_off_scaling_law_holds() {
        let cfg = reference_config(
            r#"{"trap": {"wavelength_lambda": 796.25e-9, "gravity_enabled": false}, "numerics": {"grid_points_per_axis": 256}}"#,
        );
        let pair = build_pair(&cfg.trap, &cfg.numerics, &cfg.constants).unwrap();
        assert!(pair.scaling_residual() <= 1e-12);
        for (a, b) in pair.v1.iter().zip(&pair.v2) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((y - (1.0 + pair.epsilon) * x).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn defaults_at_800nm() {
        let cfg = reference_config(r#"{"trap": {"wavelength_lambda": 800e-9}}"#);
        assert!((cfg.trap.depth_ratio(&cfg.constants) - 1.5).abs() < 1e-14);
        let s = model_scales(&cfg.trap, &cfg.numerics, &cfg.constants).unwrap();
        assert!((s.epsilon - 1.2882e-3).abs() < 1e-6);
        assert_eq!(s.units.quantum_scale, 1.0);
    }

    #[test]
    fn gravity_bounds_the_gaussian_minimum() {
        let cfg = reference_config(r#"{"numerics": {"grid_points_per_axis": 512}}"#);
        let pair = build_pair(&cfg.trap, &cfg.numerics, &cfg.constants).unwrap();
        let v = pair.v1.iter().find(|a| a.axis == Axis::Vertical).unwrap();
        let hw = -v.grid.start;
        assert!(v.min_value() >= -1.0 - pair.units.gravity_tilt * hw);
        // the downhill edge sits on the barrier, so it is the lowest edge
        let barrier = gaussian_barrier(1.0, v.tilt).unwrap();
        assert!((v.grid.start - barrier).abs() < 1e-12);
        assert!((v.minimum() - v.min_value()).abs() <= 2.0 * v.grid.step * v.grid.step);
        assert!(v.minimum() <= v.min_value());
    }

    #[test]
    fn surrogate_displacement_matches_sag_formula() {
        let cfg = reference_config(r#"{"trap": {"wavelength_lambda": 796.25e-9, "model": "harmonic"}, "numerics": {"dimensionality": 1, "grid_points_per_axis": 4001}}"#);
        let pair = build_pair(&cfg.trap, &cfg.numerics, &cfg.constants).unwrap();
        let (a, b) = (&pair.v1[0], &pair.v2[0]);
        let (w1, w2) = match (a.kind, b.kind) {
            (AnalyticKind::Harmonic { omega: w1, .. }, AnalyticKind::Harmonic { omega: w2, .. }) => (w1, w2),
            _ => panic!("harmonic kind expected"),
        };
        assert!((w2 / w1 - (1.0 + pair.epsilon).sqrt()).abs() < 1e-14);
        // d = g/ω₁² - g/ω₂², evaluated in SI
        let g = cfg.constants.gravity_g;
        let w1_si = pair.units.angular_from_internal(w1);
        let w2_si = pair.units.angular_from_internal(w2);
        let d_si = g / (w1_si * w1_si) - g / (w2_si * w2_si);
        let d = b.argmin() - a.argmin();
        assert!((pair.units.length_from_internal(d) - d_si).abs() < 1e-9 * d_si.abs().max(1e-12));
        // grid argmin agrees to one step
        let d_grid = b.grid_argmin() - a.grid_argmin();
        assert!((d_grid - d).abs() <= a.grid.step + 1e-15);
    }

    #[test]
    fn pinned_period_sets_frequency() {
        let cfg = reference_config(r#"{"trap": {"model": "harmonic", "oscillation_period": 3.6e-3}, "numerics": {"grid_points_per_axis": 256}}"#);
        let pair = build_pair(&cfg.trap, &cfg.numerics, &cfg.constants).unwrap();
        if let AnalyticKind::Harmonic { omega, .. } = pair.v1[0].kind {
            let w = pair.units.angular_from_internal(omega);
            assert!((w - 2.0 * std::f64::consts::PI / 3.6e-3).abs() < 1e-9);
        } else {
            panic!("harmonic kind expected");
        }
    }

    #[test]
    fn curvature_frequency_matches_gaussian_bottom() {
        let cfg = reference_config(r#"{"trap": {"model": "harmonic"}, "numerics": {"grid_points_per_axis": 256}}"#);
        let pair = build_pair(&cfg.trap, &cfg.numerics, &cfg.constants).unwrap();
        let c = &cfg.constants;
        let u0 = cfg.trap.depth_joules(c);
        let oracle = (4.0 * u0 / (c.atom_mass * 50e-6 * 50e-6)).sqrt();
        for a in &pair.v1 {
            if let AnalyticKind::Harmonic { omega, .. } = a.kind {
                assert!((pair.units.angular_from_internal(omega) - oracle).abs() / oracle < 1e-12);
            }
        }
        assert!((oracle - 2167.97).abs() < 0.05, "{oracle}");
    }

    #[test]
    fn surrogate_with_zero_epsilon_is_branch_symmetric() {
        let cfg = reference_config(r#"{"trap": {"epsilon_override": 0.0, "model": "harmonic"}, "numerics": {"grid_points_per_axis": 128}}"#);
        let pair = build_pair(&cfg.trap, &cfg.numerics, &cfg.constants).unwrap();
        for (a, b) in pair.v1.iter().zip(&pair.v2) {
            assert_eq!(a.values, b.values);
            assert_eq!(a.kind, b.kind);
        }
    }

    #[test]
    fn csv_export_has_one_row_per_point() {
        let cfg = reference_config(r#"{"numerics": {"grid_points_per_axis": 64, "dimensionality": 1}}"#);
        let pair = build_pair(&cfg.trap, &cfg.numerics, &cfg.constants).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v1.csv");
        pair.v1[0].write_csv(&p, &pair.units).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), 65);
    }
}
