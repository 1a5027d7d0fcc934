//! Small systems shared by unit tests.

use crate::config::Axis;
use crate::dynamics::{AxisSystem, System};
use crate::linalg::{sym_eigen, EigenRange, Mat};
use crate::potentials::Grid;
use crate::spectral::{analytic_harmonic_basis, dvr_hamiltonian, fix_signs, overlap_matrix, quadrature_overlaps, SpectralBasis};

/// Both branch Hamiltonians of a small grid together with their complete eigenbases.
pub struct DensePair {
    pub h1: Mat<f64>,
    pub h2: Mat<f64>,
    pub b1: SpectralBasis,
    pub system: System,
}

fn full_basis(h: &Mat<f64>, grid: Grid, minimum: f64) -> SpectralBasis {
    let (energies, z) = sym_eigen(h, EigenRange::All).unwrap();
    let inv = 1.0 / grid.step.sqrt();
    let mut psi = Mat::from_fn(grid.len, energies.len(), |i, k| z[(i, k)] * inv);
    fix_signs(&mut psi);
    SpectralBasis {
        axis: Axis::Vertical,
        cutoff: f64::INFINITY,
        energies,
        wavefunctions: Some(psi),
        grid: Some(grid),
        harmonic: None,
        potential_minimum: minimum,
    }
}

/// Tilted Gaussian well `-(1+ε)e^{-2q²} + tilt·q` on a `points`-point grid,
/// keeping every eigenstate so the overlap matrix is orthogonal.
pub fn dense_gaussian(points: usize, epsilon: f64, tilt: f64) -> DensePair {
    let grid = Grid::spanning(-2.2, 2.2, points);
    let kinetic = 0.02;
    let v = |s: f64| -> Vec<f64> {
        grid.points().iter().map(|&q| -s * (-2.0 * q * q).exp() + tilt * q).collect()
    };
    let v1 = v(1.0);
    let v2 = v(1.0 + epsilon);
    let h1 = dvr_hamiltonian(&v1, grid.step, kinetic);
    let h2 = dvr_hamiltonian(&v2, grid.step, kinetic);
    let min1 = v1.iter().cloned().fold(f64::INFINITY, f64::min);
    let min2 = v2.iter().cloned().fold(f64::INFINITY, f64::min);
    let b1 = full_basis(&h1, grid, min1);
    let b2 = full_basis(&h2, grid, min2);
    let o = quadrature_overlaps(&b1, &b2).unwrap();
    let system = System::new(vec![AxisSystem::new(&b1, &b2, o).unwrap()]);
    DensePair { h1, h2, b1, system }
}

/// One harmonic axis: branch 2 stiffer by `√(1+ε)` and displaced by `d`.
pub fn harmonic_axis(omega: f64, epsilon: f64, d: f64, n1: usize, n2: usize) -> AxisSystem {
    let kinetic = 0.5;
    let omega2 = omega * (1.0 + epsilon).sqrt();
    let b1 = analytic_harmonic_basis(Axis::Vertical, omega, 0.0, -1.0, kinetic, n1, None);
    let b2 = analytic_harmonic_basis(Axis::Vertical, omega2, d, -1.0 - epsilon, kinetic, n2, None);
    let o = overlap_matrix(&b1, &b2).unwrap();
    AxisSystem::new(&b1, &b2, o).unwrap()
}
