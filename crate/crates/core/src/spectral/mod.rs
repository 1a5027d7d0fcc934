//! Bound eigenstates of each axis potential and the Franck–Condon overlaps
//! between the two branches.
//!
//! Numerical bases come from a sinc discrete-variable representation of
//! `-κ d²/dq² + V(q)` on the potential's uniform grid. Harmonic bases can also
//! be built analytically; overlaps between two analytic harmonic bases use a
//! ladder recursion instead of quadrature.

mod cache;
pub mod harmonic;

use std::io::Write;
use std::path::Path;

use crate::config::{Axis, NumericsConfig};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, EigenRange, Mat};
use crate::potentials::{AnalyticKind, AxisPotential, Grid};

pub use cache::BasisCache;
pub use harmonic::{harmonic_overlap_diagonal, harmonic_overlaps, hermite_functions};

/// Fraction of the grid on each side checked for wavefunction leakage.
pub const TAIL_FRACTION: f64 = 0.1;
/// Largest norm allowed in the outer grid region.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Closed-form oscillator behind an analytic basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicForm {
    pub omega: f64,
    pub center: f64,
    /// Oscillator length `sqrt(1/(mω))`.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub axis: Axis,
    /// Ascending eigenenergies (internal units).
    pub energies: Vec<f64>,
    /// `grid.len × n_states` samples normalized so that `Σ ψ² h = 1`.
    pub wavefunctions: Option<Mat<f64>>,
    pub grid: Option<Grid>,
    pub harmonic: Option<HarmonicForm>,
    /// Energy below which states were retained.
    pub cutoff: f64,
    /// Minimum of the underlying potential.
    pub potential_minimum: f64,
}

impl SpectralBasis {
    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    /// `max |GᵀWG - I|` over the retained states (0 for analytic bases without samples).
    pub fn orthonormality_error(&self) -> f64 {
        let (Some(psi), Some(grid)) = (&self.wavefunctions, &self.grid) else {
            return 0.0;
        };
        let n = psi.cols();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                let s: f64 = psi.col(a).iter().zip(psi.col(b)).map(|(x, y)| x * y).sum::<f64>() * grid.weight();
                let expect = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - expect).abs());
            }
        }
        worst
    }

    /// CSV `n,energy_U0`.
    pub fn write_energies_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("n,energy_U0\n");
        for (n, e) in self.energies.iter().enumerate() {
            out.push_str(&format!("{n},{e:.15e}\n"));
        }
        write_file(path, &out)
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Dense sinc-DVR Hamiltonian of an axis potential.
pub(crate) fn dvr_hamiltonian(values: &[f64], step: f64, kinetic: f64) -> Mat<f64> {
    let n = values.len();
    let pref = kinetic / (step * step);
    let diag = pref * std::f64::consts::PI * std::f64::consts::PI / 3.0;
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            diag + values[i]
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * pref * 2.0 / (d * d)
        }
    })
}

/// Outer-region norm of each column of an orthonormal eigenvector matrix.
fn tail_norms(z: &Mat<f64>) -> Vec<f64> {
    let n = z.rows();
    let nb = ((n as f64 * TAIL_FRACTION) as usize).max(1);
    (0..z.cols())
        .map(|k| {
            let c = z.col(k);
            c[..nb].iter().chain(&c[n - nb..]).map(|x| x * x).sum()
        })
        .collect()
}

/// Flips signs so the outermost significant lobe on the right is positive.
pub(crate) fn fix_signs(psi: &mut Mat<f64>) {
    for k in 0..psi.cols() {
        let col = psi.col_mut(k);
        let peak = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(last) = col.iter().rposition(|x| x.abs() > 1e-3 * peak) {
            if col[last] < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
}

/// Bound spectrum of one axis potential.
///
/// States are kept below `numerics.basis_cutoff_energy` (internal units) or,
/// by default, below the lower of the two domain-edge values. Every kept
/// state must hold less than [`TAIL_TOLERANCE`] of its norm in the outer
/// tenth of the grid on either side: with the default cutoff the basis is
/// trimmed at the first offending state, with an explicit cutoff the domain
/// is reported as too small.
pub fn diagonalize(axis: &AxisPotential, numerics: &NumericsConfig) -> Result<SpectralBasis> {
    diagonalize_below(axis, numerics.basis_cutoff_energy)
}

pub fn diagonalize_below(axis: &AxisPotential, cutoff: Option<f64>) -> Result<SpectralBasis> {
    let grid = axis.grid;
    let explicit = cutoff.is_some();
    let cutoff = cutoff.unwrap_or_else(|| axis.edge_value());
    let h = dvr_hamiltonian(&axis.values, grid.step, axis.kinetic);
    let floor = axis.min_value() - 1.0;
    let (mut energies, z) = sym_eigen(&h, EigenRange::Values { lower: floor, upper: cutoff })?;
    let tails = tail_norms(&z);
    let mut keep = energies.len();
    if let Some(bad) = tails.iter().position(|&t| t > TAIL_TOLERANCE) {
        if explicit {
            let halfwidth = 0.5 * (grid.end() - grid.start);
            return Err(Error::DomainTooSmall {
                halfwidth,
                suggested: 1.5 * halfwidth,
            });
        }
        keep = bad;
    }
    if keep < 2 {
        return Err(Error::TooFewBoundStates { found: keep });
    }
    energies.truncate(keep);
    let inv = 1.0 / grid.step.sqrt();
    let mut psi = Mat::from_fn(grid.len, keep, |i, k| z[(i, k)] * inv);
    fix_signs(&mut psi);
    Ok(SpectralBasis {
        axis: axis.axis,
        energies,
        wavefunctions: Some(psi),
        grid: Some(grid),
        harmonic: None,
        cutoff,
        potential_minimum: axis.minimum(),
    })
}

/// Analytic oscillator basis `E_n = minimum + ω(n + ½)`, sampled on `grid` if given.
pub fn analytic_harmonic_basis(
    axis: Axis,
    omega: f64,
    center: f64,
    minimum: f64,
    kinetic: f64,
    n_states: usize,
    grid: Option<Grid>,
) -> SpectralBasis {
    assert!(omega > 0.0, "oscillator frequency must be positive");
    let mass = 0.5 / kinetic;
    let length = (1.0 / (mass * omega)).sqrt();
    let energies = (0..n_states).map(|n| minimum + omega * (n as f64 + 0.5)).collect();
    let wavefunctions = grid.map(|g| {
        let xi: Vec<f64> = g.points().iter().map(|q| (q - center) / length).collect();
        let mut psi = hermite_functions(n_states, &xi);
        let s = 1.0 / length.sqrt();
        for k in 0..n_states {
            psi.col_mut(k).iter_mut().for_each(|x| *x *= s);
        }
        psi
    });
    SpectralBasis {
        axis,
        energies,
        wavefunctions,
        grid,
        harmonic: Some(HarmonicForm { omega, center, length }),
        cutoff: minimum + omega * n_states as f64,
        potential_minimum: minimum,
    }
}

/// Analytic basis of a harmonic axis potential holding the states below `cutoff`
/// plus `extra` more.
pub fn analytic_basis_for(axis: &AxisPotential, cutoff: f64, extra: usize, sample: bool) -> Result<SpectralBasis> {
    let AnalyticKind::Harmonic { omega, center, minimum } = axis.kind else {
        return Err(Error::invariant("harmonic potential", "analytic basis needs a harmonic axis"));
    };
    let below = ((cutoff - minimum) / omega - 0.5).ceil().max(0.0) as usize;
    let n = below + extra;
    if n < 2 {
        return Err(Error::TooFewBoundStates { found: n });
    }
    Ok(analytic_harmonic_basis(
        axis.axis,
        omega,
        center,
        minimum,
        axis.kinetic,
        n,
        sample.then_some(axis.grid),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapMethod {
    Quadrature,
    Analytic,
}

/// `O[n', n] = ⟨n'(branch 2)|n(branch 1)⟩`: rows branch 2, columns branch 1.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub entries: Mat<f64>,
    pub method: OverlapMethod,
}

impl OverlapMatrix {
    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    /// `O[n, n]`, zero when branch 2 has no state `n`.
    #[inline]
    pub fn diag(&self, n: usize) -> f64 {
        if n < self.rows() {
            self.entries[(n, n)]
        } else {
            0.0
        }
    }

    /// `Σ_{n'} |O[n', n]|²`.
    pub fn column_norm_sqr(&self, n: usize) -> f64 {
        self.entries.col(n).iter().map(|x| x * x).sum()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols()).map(|n| self.column_norm_sqr(n)).collect()
    }

    /// Smallest column norm among the first `count` columns, with its index.
    pub fn worst_column(&self, count: usize) -> (usize, f64) {
        (0..count.min(self.cols()))
            .map(|n| (n, self.column_norm_sqr(n)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    /// CSV of the leading `rows × cols` block: `n2,n1,overlap`.
    pub fn write_csv(&self, path: &Path, rows: usize, cols: usize) -> Result<()> {
        let mut out = String::from("n2,n1,overlap\n");
        for n in 0..cols.min(self.cols()) {
            for m in 0..rows.min(self.rows()) {
                out.push_str(&format!("{m},{n},{:.15e}\n", self.get(m, n)));
            }
        }
        write_file(path, &out)
    }
}

/// Grid quadrature `Σ_q ψ²_{n'}(q) ψ¹_n(q) h`.
pub fn quadrature_overlaps(b1: &SpectralBasis, b2: &SpectralBasis) -> Result<OverlapMatrix> {
    let (Some(g1), Some(g2)) = (b1.grid, b2.grid) else {
        return Err(Error::GridMismatch("quadrature needs both bases sampled on a grid".into()));
    };
    if !g1.same_as(&g2) {
        return Err(Error::GridMismatch(format!(
            "branch grids differ: [{}, {}]x{} vs [{}, {}]x{}",
            g1.start,
            g1.end(),
            g1.len,
            g2.start,
            g2.end(),
            g2.len
        )));
    }
    let p1 = b1.wavefunctions.as_ref().expect("sampled basis");
    let p2 = b2.wavefunctions.as_ref().expect("sampled basis");
    let w = g1.weight();
    let entries = Mat::from_fn(b2.n_states(), b1.n_states(), |m, n| {
        p2.col(m).iter().zip(p1.col(n)).map(|(a, b)| a * b).sum::<f64>() * w
    });
    Ok(OverlapMatrix {
        entries,
        method: OverlapMethod::Quadrature,
    })
}

/// Overlap matrix between branch-1 basis `b1` and branch-2 basis `b2`.
///
/// Two analytic harmonic bases use the ladder recursion; anything else is
/// integrated on the shared grid.
pub fn overlap_matrix(b1: &SpectralBasis, b2: &SpectralBasis) -> Result<OverlapMatrix> {
    if let (Some(h1), Some(h2)) = (b1.harmonic, b2.harmonic) {
        let entries = harmonic_overlaps(h1.length, h2.length, h2.center - h1.center, b2.n_states(), b1.n_states());
        return Ok(OverlapMatrix {
            entries,
            method: OverlapMethod::Analytic,
        });
    }
    quadrature_overlaps(b1, b2)
}

/// Separable multi-axis overlap `O[(n'x, n'y), (nx, ny)] = Πₐ Oᵃ[n'ₐ, nₐ]`, never materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorOverlap {
    pub axes: Vec<OverlapMatrix>,
}

impl TensorOverlap {
    pub fn new(axes: Vec<OverlapMatrix>) -> TensorOverlap {
        assert!(!axes.is_empty(), "tensor overlap needs at least one axis");
        TensorOverlap { axes }
    }

    pub fn get(&self, row: &[usize], col: &[usize]) -> f64 {
        self.axes
            .iter()
            .zip(row.iter().zip(col))
            .map(|(o, (&m, &n))| o.get(m, n))
            .product()
    }

    pub fn diag(&self, n: &[usize]) -> f64 {
        self.axes.iter().zip(n).map(|(o, &k)| o.diag(k)).product()
    }

    pub fn column_norm_sqr(&self, n: &[usize]) -> f64 {
        self.axes.iter().zip(n).map(|(o, &k)| o.column_norm_sqr(k)).product()
    }
}

/// Lowest `n_states` eigenpairs of a full 2D grid Hamiltonian
/// `-κ(∂²ₓ + ∂²ᵧ) + V(x, y)`, for validation at small sizes.
///
/// Eigenvectors are indexed `ix + nx·iy` and normalized under `hx·hy`.
pub fn diagonalize_2d(
    gx: Grid,
    gy: Grid,
    kinetic: f64,
    potential: impl Fn(f64, f64) -> f64,
    n_states: usize,
) -> Result<(Vec<f64>, Mat<f64>)> {
    let (nx, ny) = (gx.len, gy.len);
    let tx = dvr_hamiltonian(&vec![0.0; nx], gx.step, kinetic);
    let ty = dvr_hamiltonian(&vec![0.0; ny], gy.step, kinetic);
    let dim = nx * ny;
    let mut h = Mat::zeros(dim, dim);
    for iy in 0..ny {
        for ix in 0..nx {
            let r = ix + nx * iy;
            for jx in 0..nx {
                h[(r, jx + nx * iy)] += tx[(ix, jx)];
            }
            for jy in 0..ny {
                h[(r, ix + nx * jy)] += ty[(iy, jy)];
            }
            h[(r, r)] += potential(gx.point(ix), gy.point(iy));
        }
    }
    let (mut energies, z) = sym_eigen(&h, EigenRange::All)?;
    let keep = n_states.min(energies.len());
    energies.truncate(keep);
    let inv = 1.0 / (gx.step * gy.step).sqrt();
    Ok((energies, Mat::from_fn(dim, keep, |i, k| z[(i, k)] * inv)))
}

/// Number of eigenvalues below `cutoff` of the three-point finite-difference
/// Hamiltonian of `potential` on `points` samples of `[lower, upper]`
/// (Sturm sequence count, `O(points)`).
pub fn count_bound_states(
    potential: impl Fn(f64) -> f64,
    lower: f64,
    upper: f64,
    points: usize,
    kinetic: f64,
    cutoff: f64,
) -> usize {
    let grid = Grid::spanning(lower, upper, points);
    let off = -kinetic / (grid.step * grid.step);
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..points {
        let a = -2.0 * off + potential(grid.point(i)) - cutoff;
        d = if i == 0 { a } else { a - off * off / d };
        if d == 0.0 {
            d = f64::EPSILON * off.abs();
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{AxisPotential, Grid};

    fn harmonic_axis(points: usize, omega: f64, center: f64, kinetic: f64, hw: f64) -> AxisPotential {
        let grid = Grid::spanning(center - hw, center + hw, points);
        AxisPotential::harmonic(Axis::Horizontal, grid, omega, center, -1.0, 0.0, kinetic)
    }

    #[test]
    fn numeric_harmonic_spectrum_matches_textbook() {
        // κ chosen so ω = 0.02 and ~140 states sit below the edge
        let kinetic = 2e-5;
        let omega = 0.02;
        let a = harmonic_axis(2048, omega, 0.0, kinetic, 2.0);
        let b = diagonalize_below(&a, Some(-1.0 + 1.05)).unwrap();
        assert!(b.n_states() >= 50);
        for n in 0..50 {
            let exact = -1.0 + omega * (n as f64 + 0.5);
            assert!(((b.energies[n] - exact) / exact).abs() < 1e-8, "n={n}: {} vs {exact}", b.energies[n]);
        }
        assert!(b.orthonormality_error() < 1e-10);
    }

    #[test]
    fn analytic_and_numeric_harmonic_overlaps_agree() {
        let kinetic = 2e-5;
        let (w1, w2) = (0.02, 0.02 * 1.03f64.sqrt());
        let grid = Grid::spanning(-2.0, 2.0, 2048);
        let v1 = AxisPotential::harmonic(Axis::Vertical, grid, w1, 0.0, -1.0, 0.0, kinetic);
        let v2 = AxisPotential::harmonic(Axis::Vertical, grid, w2, 0.01, -1.03, 0.0, kinetic);
        let n1 = diagonalize_below(&v1, Some(-1.0 + 50.0 * w1)).unwrap();
        let n2 = diagonalize_below(&v2, Some(-1.03 + 60.0 * w2)).unwrap();
        let numeric = overlap_matrix(&n1, &n2).unwrap();
        assert_eq!(numeric.method, OverlapMethod::Quadrature);
        let a1 = analytic_harmonic_basis(Axis::Vertical, w1, 0.0, -1.0, kinetic, n1.n_states(), Some(grid));
        let a2 = analytic_harmonic_basis(Axis::Vertical, w2, 0.01, -1.03, kinetic, n2.n_states(), Some(grid));
        let analytic = overlap_matrix(&a1, &a2).unwrap();
        assert_eq!(analytic.method, OverlapMethod::Analytic);
        for m in 0..50 {
            for n in 0..50 {
                assert!((numeric.get(m, n) - analytic.get(m, n)).abs() < 1e-8, "({m},{n})");
            }
        }
        // the sampled analytic wavefunctions match the numeric ones
        let quad = quadrature_overlaps(&a1, &a2).unwrap();
        assert!((quad.get(3, 2) - analytic.get(3, 2)).abs() < 1e-10);
    }

    #[test]
    fn identical_potentials_give_identity_overlap() {
        let a = harmonic_axis(256, 0.05, 0.0, 1e-4, 1.5);
        let b = diagonalize_below(&a, Some(-0.5)).unwrap();
        let o = overlap_matrix(&b, &b).unwrap();
        for m in 0..o.rows() {
            for n in 0..o.cols() {
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((o.get(m, n) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gaussian_parity_selection_rule() {
        let grid = Grid::spanning(-2.5, 2.5, 512);
        let kinetic = 2e-4;
        let v1 = AxisPotential::gaussian(Axis::Horizontal, grid, 1.0, 0.0, kinetic);
        let v2 = AxisPotential::gaussian(Axis::Horizontal, grid, 1.01, 0.0, kinetic);
        let b1 = diagonalize_below(&v1, None).unwrap();
        let b2 = diagonalize_below(&v2, None).unwrap();
        let o = overlap_matrix(&b1, &b2).unwrap();
        for m in 0..o.rows() {
            for n in 0..o.cols() {
                if (m + n) % 2 == 1 {
                    assert!(o.get(m, n).abs() < 1e-10, "({m},{n}) = {}", o.get(m, n));
                }
            }
        }
    }

    #[test]
    fn explicit_cutoff_too_high_reports_domain() {
        let a = harmonic_axis(128, 0.05, 0.0, 1e-4, 0.8);
        // the edge sits at -1 + ½mω²·0.64 = 7; asking for states up to 6.5 overflows the tails
        let err = diagonalize_below(&a, Some(6.5)).unwrap_err();
        assert!(matches!(err, Error::DomainTooSmall { .. }), "{err}");
        let auto = diagonalize_below(&a, None).unwrap();
        assert!(auto.energies.last().unwrap() < &6.5);
    }

    #[test]
    fn shallow_well_has_too_few_states() {
        let grid = Grid::spanning(-2.5, 2.5, 128);
        let v = AxisPotential::gaussian(Axis::Horizontal, grid, 1.0, 0.0, 2.0);
        assert!(matches!(diagonalize_below(&v, None), Err(Error::TooFewBoundStates { .. })));
    }

    #[test]
    fn sturm_count_matches_harmonic_levels() {
        let kinetic = 1e-4;
        let mass = 0.5 / kinetic;
        let omega = 0.01;
        let count = count_bound_states(|q| 0.5 * mass * omega * omega * q * q, -3.0, 3.0, 20001, kinetic, 100.3 * omega);
        assert_eq!(count, 100);
    }

    #[test]
    fn full_2d_solver_reproduces_separable_sums() {
        let kinetic = 2e-3;
        let g = Grid::spanning(-2.0, 2.0, 24);
        let vx: Vec<f64> = g.points().iter().map(|&x| -(-2.0 * x * x).exp()).collect();
        let vy: Vec<f64> = g.points().iter().map(|&y| -1.2 * (-2.0 * y * y).exp() + 0.1 * y).collect();
        let (e2d, _) = diagonalize_2d(g, g, kinetic, |x, y| {
            let ix = ((x - g.start) / g.step).round() as usize;
            let iy = ((y - g.start) / g.step).round() as usize;
            vx[ix] + vy[iy]
        }, 8)
        .unwrap();
        let (ex, _) = sym_eigen(&dvr_hamiltonian(&vx, g.step, kinetic), EigenRange::All).unwrap();
        let (ey, _) = sym_eigen(&dvr_hamiltonian(&vy, g.step, kinetic), EigenRange::All).unwrap();
        let mut sums: Vec<f64> = ex.iter().flat_map(|a| ey.iter().map(move |b| a + b)).collect();
        sums.sort_by(f64::total_cmp);
        for k in 0..8 {
            assert!((e2d[k] - sums[k]).abs() < 1e-10, "{k}: {} vs {}", e2d[k], sums[k]);
        }
    }
}
