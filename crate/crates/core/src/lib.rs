//! Microwave Ramsey and echo spectroscopy of atoms in a state-dependent
//! optical dipole trap.
//!
//! The crate models two internal states whose motional Hamiltonians differ by
//! a small scaling `ε` of the optical potential. It diagonalizes each branch,
//! builds the Franck–Condon overlap matrix between them and propagates
//! pulse sequences, thermal ensembles and finite-pulse spectra.

pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod plot;
pub mod potentials;
pub mod runner;
pub mod spectral;
pub mod spectroscopy;
pub mod units;

#[cfg(test)]
pub(crate) mod testutil;

pub use config::{load_config, Axis, Config, NumericsConfig, PotentialModel, TrapConfig};
pub use error::{Error, Result};
pub use units::{natural_units, PhysicalConstants, UnitScales};

/// Caps the worker pool used by the parallel routines. Must be called before any of them run.
pub fn set_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::config("--threads", e.to_string()))
}
