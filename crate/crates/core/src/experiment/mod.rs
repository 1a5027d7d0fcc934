//! Assembly of two-branch systems from a configuration.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, PotentialModel};
use crate::dynamics::{AxisSystem, System};
use crate::ensemble::{delta_rms_from_axes, DeltaRms, DiagonalAxis, ThermalEnsemble};
use crate::error::{Error, Result};
use crate::potentials::{
    build_pair, harmonic_axes, model_scales, AxisPotential, HarmonicAxis, ModelScales, PotentialPair,
};
use crate::spectral::{
    analytic_basis_for, diagonalize_below, harmonic_overlap_diagonal, overlap_matrix, BasisCache, OverlapMatrix,
    OverlapMethod, SpectralBasis,
};

/// Column and row completeness required of analytic harmonic blocks.
const COMPLETENESS: f64 = 1e-12;

/// Truncation diagnostics of one axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisDiagnostics {
    pub axis: &'static str,
    pub branch1_states: usize,
    pub branch2_states: usize,
    /// States below the thermal clip.
    pub thermal_states: usize,
    pub overlap_method: &'static str,
    /// Smallest `Σ_{n'} |O_{n'n}|²` over the thermal states.
    pub worst_column_norm: f64,
    pub worst_column: usize,
    /// Largest deviation of the sampled bases from orthonormality (0 for analytic bases).
    pub orthonormality_error: f64,
    /// Branch-1 energy cutoff (internal units).
    pub cutoff: f64,
}

/// A configured system ready for dynamics.
#[derive(Debug, Clone)]
pub struct BuiltSystem {
    pub pair: PotentialPair,
    pub scales: ModelScales,
    pub bases1: Vec<SpectralBasis>,
    pub bases2: Vec<SpectralBasis>,
    pub system: System,
    pub diagnostics: Vec<AxisDiagnostics>,
    /// `k_BT` in internal energy units.
    pub kt: f64,
    pub clip_ratio: f64,
}

impl BuiltSystem {
    pub fn ensemble(&self) -> Result<ThermalEnsemble> {
        ThermalEnsemble::for_system(&self.system, self.kt, self.clip_ratio)
    }

    pub fn seconds_to_internal(&self, s: f64) -> f64 {
        self.scales.units.time_to_internal(s)
    }

    /// Angular frequency (internal) to Hz.
    pub fn to_hz(&self, w: f64) -> f64 {
        self.scales.units.angular_from_internal(w) / (2.0 * std::f64::consts::PI)
    }

    pub fn from_hz(&self, f: f64) -> f64 {
        self.scales.units.angular_to_internal(2.0 * std::f64::consts::PI * f)
    }
}

fn thermal_count(basis: &SpectralBasis, clip: f64) -> usize {
    basis.energies.iter().take_while(|&&e| e - basis.potential_minimum < clip).count()
}

fn row_norm(o: &OverlapMatrix, row: usize) -> f64 {
    (0..o.cols()).map(|c| o.get(row, c).powi(2)).sum()
}

/// Analytic harmonic blocks padded until every thermal column and the rows
/// they reach are complete to [`COMPLETENESS`].
fn harmonic_block(
    pair: &PotentialPair,
    i: usize,
    cutoff: f64,
) -> Result<(SpectralBasis, SpectralBasis, OverlapMatrix, usize)> {
    let (v1, v2) = (&pair.v1[i], &pair.v2[i]);
    let mut pad = 16;
    loop {
        let b1 = analytic_basis_for(v1, cutoff, pad, false)?;
        let thermal = thermal_count(&b1, cutoff - b1.potential_minimum);
        let b2 = analytic_basis_for(v2, cutoff, 2 * pad, false)?;
        let o = overlap_matrix(&b1, &b2)?;
        let reach = (thermal + pad / 2).min(b1.n_states()).min(b2.n_states());
        let cols_ok = (0..reach).all(|c| 1.0 - o.column_norm_sqr(c) <= COMPLETENESS);
        let rows_ok = (0..reach).all(|r| 1.0 - row_norm(&o, r) <= COMPLETENESS);
        if cols_ok && rows_ok {
            return Ok((b1, b2, o, thermal));
        }
        if pad > 8192 {
            return Err(Error::Numerical(format!(
                "harmonic overlap block on axis {} not complete after padding {pad} states",
                v1.axis.label()
            )));
        }
        pad *= 2;
    }
}

/// Bases, overlaps and diagnostics for every configured axis.
///
/// The Gaussian model is diagonalized on its grid (through `cache` when
/// given) with quadrature overlaps; the harmonic model uses analytic
/// oscillator states and the ladder recursion.
pub fn build_system(config: &Config, cache: Option<&BasisCache>) -> Result<BuiltSystem> {
    let scales = model_scales(&config.trap, &config.numerics, &config.constants)?;
    let pair = build_pair(&config.trap, &config.numerics, &config.constants)?;
    let kt = scales.units.thermal_energy;
    let clip_ratio = config.trap.clip_ratio;
    let mut bases1 = Vec::new();
    let mut bases2 = Vec::new();
    let mut axes = Vec::new();
    let mut diagnostics = Vec::new();
    let mut solved = match config.trap.model {
        PotentialModel::Harmonic => Vec::new(),
        PotentialModel::Gaussian => {
            let cutoff = config.numerics.basis_cutoff_energy;
            let diag = |v: &AxisPotential| match cache {
                Some(c) => c.diagonalize(v, cutoff),
                None => diagonalize_below(v, cutoff),
            };
            (0..pair.v1.len())
                .into_par_iter()
                .map(|i| {
                    let (b1, b2) = rayon::join(|| diag(&pair.v1[i]), || diag(&pair.v2[i]));
                    Ok((b1?, b2?))
                })
                .collect::<Result<Vec<_>>>()?
        }
    }
    .into_iter();
    for i in 0..pair.v1.len() {
        let (b1, b2, o, thermal) = match config.trap.model {
            PotentialModel::Harmonic => {
                let min1 = pair.v1[i].minimum();
                let cutoff = config.numerics.basis_cutoff_energy.unwrap_or(min1 + clip_ratio * kt);
                harmonic_block(&pair, i, cutoff)?
            }
            PotentialModel::Gaussian => {
                let (b1, b2) = solved.next().expect("one solved pair per axis");
                let o = overlap_matrix(&b1, &b2)?;
                let thermal = thermal_count(&b1, clip_ratio * kt);
                (b1, b2, o, thermal)
            }
        };
        let (worst, norm) = o.worst_column(thermal.max(1));
        diagnostics.push(AxisDiagnostics {
            axis: b1.axis.label(),
            branch1_states: b1.n_states(),
            branch2_states: b2.n_states(),
            thermal_states: thermal,
            overlap_method: match o.method {
                OverlapMethod::Analytic => "analytic",
                OverlapMethod::Quadrature => "quadrature",
            },
            worst_column_norm: norm,
            worst_column: worst,
            orthonormality_error: b1.orthonormality_error().max(b2.orthonormality_error()),
            cutoff: b1.cutoff,
        });
        axes.push(AxisSystem::new(&b1, &b2, o)?);
        bases1.push(b1);
        bases2.push(b2);
    }
    Ok(BuiltSystem {
        pair,
        scales,
        bases1,
        bases2,
        system: System::new(axes),
        diagnostics,
        kt,
        clip_ratio,
    })
}

/// Which part of the harmonic mismatch enters the stability average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mismatch {
    /// Frequency scaling and gravitational displacement together.
    Both,
    /// Frequency scaling only (displacement set to zero).
    ScalingOnly,
    /// Displacement only (equal frequencies).
    DisplacementOnly,
}

/// Per-axis harmonic parameters for the configuration at physical perturbation `epsilon`.
pub fn harmonic_parameters(config: &Config, epsilon: f64) -> Result<(ModelScales, Vec<HarmonicAxis>, Vec<f64>)> {
    let mut c = config.clone();
    c.trap.epsilon_override = Some(epsilon);
    let scales = model_scales(&c.trap, &c.numerics, &c.constants)?;
    let pair = build_pair(&c.trap, &c.numerics, &c.constants)?;
    let masses = pair.v1.iter().map(|a| a.internal_mass()).collect();
    Ok((scales, harmonic_axes(&pair), masses))
}

/// Thermal levels and `O_nn` of the harmonic surrogate at physical perturbation `epsilon`.
pub fn harmonic_diagonals(config: &Config, epsilon: f64, mismatch: Mismatch) -> Result<Vec<DiagonalAxis>> {
    let (scales, axes, masses) = harmonic_parameters(config, epsilon)?;
    let clip = config.trap.clip_ratio * scales.units.thermal_energy;
    Ok(axes
        .iter()
        .zip(masses)
        .map(|(h, m)| {
            let count = (clip / h.omega1).ceil() as usize + 1;
            let a1 = (1.0 / (m * h.omega1)).sqrt();
            let (a2, d) = match mismatch {
                Mismatch::Both => ((1.0 / (m * h.omega2)).sqrt(), h.displacement()),
                Mismatch::ScalingOnly => ((1.0 / (m * h.omega2)).sqrt(), 0.0),
                Mismatch::DisplacementOnly => (a1, h.displacement()),
            };
            DiagonalAxis {
                energies: (0..count).map(|n| h.omega1 * (n as f64 + 0.5)).collect(),
                diagonal: harmonic_overlap_diagonal(a1, a2, d, count),
            }
        })
        .collect())
}

/// Δ_RMS of the harmonic surrogate from its analytic spectra (no overlaps needed).
pub fn harmonic_delta_rms(config: &Config) -> Result<(DeltaRms, ThermalEnsemble, ModelScales)> {
    let scales = model_scales(&config.trap, &config.numerics, &config.constants)?;
    let (_, axes, _) = harmonic_parameters(config, scales.epsilon_physical)?;
    let kt = scales.units.thermal_energy;
    let clip = config.trap.clip_ratio * kt;
    let mut levels = Vec::new();
    let mut nu = Vec::new();
    for h in &axes {
        let count = (clip / h.omega1).ceil() as usize + 1;
        levels.push((0..count).map(|n| h.omega1 * (n as f64 + 0.5)).collect());
        nu.push(
            (0..count)
                .map(|n| (h.minimum2 - h.minimum1) + (h.omega2 - h.omega1) * (n as f64 + 0.5))
                .collect(),
        );
    }
    let ens = ThermalEnsemble::new(levels, kt, config.trap.clip_ratio)?;
    Ok((delta_rms_from_axes(&nu, &ens), ens, scales))
}
