//! Finite-duration microwave pulses: multi-level Rabi dynamics in a windowed
//! joint basis, detuning scans and sideband analysis.
//!
//! In the frame rotating at the microwave frequency the Hamiltonian is
//! `diag(E¹) ⊕ diag(E² - Δ)` with off-diagonal blocks `(Ω/2) e^{±iφ} O`.
//! The phase is a diagonal gauge, so every propagator comes from one real
//! symmetric eigendecomposition.

use std::collections::HashMap;
use std::ops::Range;

use rayon::prelude::*;

use crate::dynamics::{flatten, unflatten, JointState, System};
use crate::ensemble::ThermalEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, EigenRange, Mat, C64};

/// Largest joint dimension propagated densely by [`apply_finite_pulse`].
pub const MAX_DENSE_DIMENSION: usize = 4000;
/// Minimum fraction of an initial state's transfer weight a window must keep.
pub const WINDOW_COVERAGE: f64 = 0.999;

/// Per-axis index ranges kept in each branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub branch1: Vec<Range<usize>>,
    pub branch2: Vec<Range<usize>>,
}

impl Window {
    /// The whole basis.
    pub fn full(system: &System) -> Window {
        Window {
            branch1: system.shape1().into_iter().map(|n| 0..n).collect(),
            branch2: system.shape2().into_iter().map(|n| 0..n).collect(),
        }
    }

    pub fn shape1(&self) -> Vec<usize> {
        self.branch1.iter().map(|r| r.len()).collect()
    }

    pub fn shape2(&self) -> Vec<usize> {
        self.branch2.iter().map(|r| r.len()).collect()
    }

    pub fn dim1(&self) -> usize {
        self.shape1().iter().product()
    }

    pub fn dim2(&self) -> usize {
        self.shape2().iter().product()
    }

    fn global1(&self, local: &[usize]) -> Vec<usize> {
        local.iter().zip(&self.branch1).map(|(k, r)| r.start + k).collect()
    }

    fn global2(&self, local: &[usize]) -> Vec<usize> {
        local.iter().zip(&self.branch2).map(|(k, r)| r.start + k).collect()
    }
}

/// Smallest contiguous range around the peak of `weights` whose outside mass
/// is at most `tail` of the total.
fn core_range(weights: &[f64], tail: f64) -> Range<usize> {
    let total: f64 = weights.iter().sum();
    let peak = weights
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, &w)| if w > a.1 { (i, w) } else { a })
        .0;
    let (mut lo, mut hi) = (peak, peak + 1);
    let mut inside = weights[peak];
    while total - inside > tail * total && (lo > 0 || hi < weights.len()) {
        let left = if lo > 0 { weights[lo - 1] } else { -1.0 };
        let right = if hi < weights.len() { weights[hi] } else { -1.0 };
        if left >= right {
            lo -= 1;
            inside += left;
        } else {
            inside += right;
            hi += 1;
        }
    }
    lo..hi
}

/// Window for initial state `n`: branch-2 states holding all but `tail` of
/// the transfer weight `|O_{n'n}|²`, the branch-1 states they reach, and
/// `padding` extra states on each side.
pub fn select_window(system: &System, n: &[usize], tail: f64, padding: usize) -> Result<Window> {
    let mut branch1 = Vec::with_capacity(n.len());
    let mut branch2 = Vec::with_capacity(n.len());
    let mut covered = 1.0;
    let mut complete = 1.0;
    for (a, &k) in system.axes.iter().zip(n) {
        let col: Vec<f64> = a.overlap.entries.col(k).iter().map(|x| x * x).collect();
        let r2 = core_range(&col, tail);
        let lo1 = r2.start.min(k);
        let hi1 = r2.end.max(k + 1);
        let r2 = r2.start.saturating_sub(padding)..(r2.end + padding).min(a.n2());
        let r1 = lo1.saturating_sub(padding)..(hi1 + padding).min(a.n1());
        let total: f64 = col.iter().sum();
        covered *= col[r2.clone()].iter().sum::<f64>() / total;
        complete *= total;
        branch1.push(r1);
        branch2.push(r2);
    }
    if complete < WINDOW_COVERAGE || covered < WINDOW_COVERAGE {
        return Err(Error::invariant(
            "window covers 99.9% of the transfer weight",
            format!(
                "state {n:?}: basis column norm {complete:.6}, window keeps {covered:.6}; enlarge the basis or window_padding"
            ),
        ));
    }
    Ok(Window { branch1, branch2 })
}

/// Real symmetric rotating-frame Hamiltonian (phase zero) on a window,
/// with all energies shifted by `-reference`.
fn rwa_hamiltonian(system: &System, window: &Window, rabi: f64, detuning: f64, reference: f64) -> Mat<f64> {
    let s1 = window.shape1();
    let s2 = window.shape2();
    let d1 = window.dim1();
    let d2 = window.dim2();
    let mut h = Mat::zeros(d1 + d2, d1 + d2);
    let g1: Vec<Vec<usize>> = (0..d1).map(|f| window.global1(&unflatten(f, &s1))).collect();
    let g2: Vec<Vec<usize>> = (0..d2).map(|f| window.global2(&unflatten(f, &s2))).collect();
    for (i, n) in g1.iter().enumerate() {
        h[(i, i)] = system.energy1(n) - reference;
    }
    for (j, m) in g2.iter().enumerate() {
        h[(d1 + j, d1 + j)] = system.energy2(m) - detuning - reference;
    }
    for (i, n) in g1.iter().enumerate() {
        for (j, m) in g2.iter().enumerate() {
            let o: f64 = system
                .axes
                .iter()
                .zip(m.iter().zip(n))
                .map(|(a, (&r, &c))| a.overlap.get(r, c))
                .product();
            let c = 0.5 * rabi * o;
            h[(d1 + j, i)] = c;
            h[(i, d1 + j)] = c;
        }
    }
    h
}

/// `e^{-iHt} ψ` for real symmetric `H = V Λ Vᵀ`.
fn propagate(values: &[f64], vectors: &Mat<f64>, t: f64, psi: &[C64]) -> Vec<C64> {
    let mut x = vectors.tr_mul_vec(psi);
    for (z, &l) in x.iter_mut().zip(values) {
        *z *= C64::from_polar(1.0, -l * t);
    }
    vectors.mul_vec(&x)
}

/// Finite rectangular pulse: Rabi frequency, duration and the scan tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiProblem {
    /// Free-space Rabi frequency `Ω` (internal units).
    pub rabi: f64,
    /// Pulse duration (internal units).
    pub duration: f64,
    /// Cumulative-tail threshold for window selection.
    pub tail: f64,
    pub padding: usize,
}

impl RabiProblem {
    pub fn new(rabi: f64, duration: f64, tail: f64, padding: usize) -> Result<RabiProblem> {
        if !(rabi > 0.0 && rabi.is_finite()) {
            return Err(Error::invariant("Ω > 0", format!("Rabi frequency {rabi}")));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invariant("pulse duration > 0", format!("duration {duration}")));
        }
        if !(tail > 0.0 && tail < 1.0) {
            return Err(Error::invariant("0 < window tail < 1", format!("tail {tail}")));
        }
        Ok(RabiProblem {
            rabi,
            duration,
            tail,
            padding,
        })
    }

    /// Free-space pulse area `Ω·t`.
    pub fn area(&self) -> f64 {
        self.rabi * self.duration
    }
}

/// Branch-2 population after the pulse, on a pre-selected window.
pub fn evolve_rabi_windowed(system: &System, n: &[usize], window: &Window, problem: &RabiProblem, detuning: f64) -> f64 {
    let reference = system.energy1(n);
    let h = rwa_hamiltonian(system, window, problem.rabi, detuning, reference);
    let (values, vectors) = sym_eigen(&h, EigenRange::All).expect("symmetric eigensolver on a finite matrix");
    let d1 = window.dim1();
    let local: Vec<usize> = n.iter().zip(&window.branch1).map(|(k, r)| k - r.start).collect();
    let start = flatten(&local, &window.shape1());
    // e^{-iHt} e_start = V e^{-iΛt} (row `start` of V)
    let mut p2 = 0.0;
    let row: Vec<f64> = (0..values.len()).map(|j| vectors[(start, j)]).collect();
    for i in d1..values.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (j, (&l, &r)) in values.iter().zip(&row).enumerate() {
            acc += C64::from_polar(vectors[(i, j)] * r, -l * problem.duration);
        }
        p2 += acc.norm_sqr();
    }
    p2
}

/// Branch-2 population after a finite pulse from `|1, n⟩` at detuning `Δ_MW`.
pub fn evolve_rabi(system: &System, n: &[usize], problem: &RabiProblem, detuning: f64) -> Result<f64> {
    let window = select_window(system, n, problem.tail, problem.padding)?;
    Ok(evolve_rabi_windowed(system, n, &window, problem, detuning))
}

/// Propagates `state` through a rectangular pulse of Rabi frequency `rabi`,
/// phase `phi` and `duration` on the full joint basis.
pub fn apply_finite_pulse(state: &mut JointState, rabi: f64, phi: f64, duration: f64, system: &System) -> Result<()> {
    let window = Window::full(system);
    let (d1, d2) = (window.dim1(), window.dim2());
    if d1 + d2 > MAX_DENSE_DIMENSION {
        return Err(Error::Numerical(format!(
            "finite pulse on a {}-dimensional joint basis exceeds the dense limit {MAX_DENSE_DIMENSION}",
            d1 + d2
        )));
    }
    let h = rwa_hamiltonian(system, &window, rabi, state.detuning, 0.0);
    let (values, vectors) = sym_eigen(&h, EigenRange::All)?;
    // H(φ) = T H(0) T† with T = 1 ⊕ e^{iφ}
    let gauge = C64::from_polar(1.0, phi);
    let mut psi: Vec<C64> = state.amp1.to_vec();
    psi.extend(state.amp2.iter().map(|&z| z * gauge.conj()));
    let before: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let out = propagate(&values, &vectors, duration, &psi);
    state.amp1 = out[..d1].to_vec();
    state.amp2 = out[d1..].iter().map(|&z| z * gauge).collect();
    state.time += duration;
    let after = state.norm_sqr();
    state.drift += after - before;
    if state.drift.abs() > crate::dynamics::MAX_NORM_DRIFT {
        return Err(Error::Numerical(format!(
            "cumulative norm drift {:.3e} after a finite pulse",
            state.drift
        )));
    }
    Ok(())
}

/// Ensemble-averaged branch-2 population versus microwave detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Detuning `Δ_MW` (angular, internal units).
    pub detuning: Vec<f64>,
    pub p2: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Density-weighted mean resonance `⟨E²_n - E¹_n⟩`.
    pub carrier: f64,
    pub area: f64,
    pub duration: f64,
    /// Initial states evaluated.
    pub evaluations: usize,
}

/// How the initial states of a scan are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Full,
    Stratified { samples: usize, seed: u64 },
}

/// Scans `detunings` (internal angular units) over the thermal ensemble.
pub fn scan_spectrum(
    system: &System,
    ensemble: &ThermalEnsemble,
    problem: &RabiProblem,
    detunings: &[f64],
    sampling: Sampling,
) -> Result<Spectrum> {
    let states = ensemble.states();
    let windows: Vec<Window> = states
        .par_iter()
        .map(|s| select_window(system, &s.index, problem.tail, problem.padding))
        .collect::<Result<_>>()?;
    let index: HashMap<&[usize], usize> = states.iter().enumerate().map(|(i, s)| (s.index.as_slice(), i)).collect();
    let lookup = |n: &[usize]| -> &Window { &windows[index[n]] };
    let line = |n: &[usize]| -> Vec<f64> {
        let w = lookup(n);
        detunings.iter().map(|&d| evolve_rabi_windowed(system, n, w, problem, d)).collect()
    };
    let (p2, stderr, evaluations) = match sampling {
        Sampling::Full => (ensemble.average_vec(line), vec![0.0; detunings.len()], states.len()),
        Sampling::Stratified { samples, seed } => {
            let est = ensemble.stratified_average(line, samples, seed);
            (est.mean, est.stderr, est.evaluations)
        }
    };
    let carrier = ensemble.average(|n| system.energy2(n) - system.energy1(n));
    Ok(Spectrum {
        detuning: detunings.to_vec(),
        p2,
        stderr,
        carrier,
        area: problem.area(),
        duration: problem.duration,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
}

/// Strongest response near one sideband order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sideband {
    pub order: i32,
    /// Highest local maximum within a quarter spacing of `order·ω`, if any.
    pub peak: Option<Peak>,
    /// Largest value anywhere in that search band.
    pub band_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidebandReport {
    pub carrier: Peak,
    pub sidebands: Vec<Sideband>,
}

impl SidebandReport {
    pub fn get(&self, order: i32) -> Option<&Sideband> {
        self.sidebands.iter().find(|s| s.order == order)
    }

    /// Largest value in any sideband search band relative to the carrier height.
    pub fn max_ratio(&self) -> f64 {
        self.sidebands.iter().map(|s| s.band_max).fold(0.0, f64::max) / self.carrier.height
    }

    /// Highest sideband local maximum relative to the carrier height (0 when none is found).
    pub fn max_peak_ratio(&self) -> f64 {
        self.sidebands
            .iter()
            .filter_map(|s| s.peak)
            .map(|p| p.height)
            .fold(0.0, f64::max)
            / self.carrier.height
    }

    /// Offset of order `k` from the carrier: half the distance between the
    /// `+k` and `-k` peaks when both exist, otherwise the one-sided distance.
    pub fn offset(&self, k: i32) -> Option<f64> {
        let up = self.get(k).and_then(|s| s.peak);
        let down = self.get(-k).and_then(|s| s.peak);
        match (up, down) {
            (Some(u), Some(d)) => Some(0.5 * (u.position - d.position)),
            (Some(u), None) => Some(u.position - self.carrier.position),
            (None, Some(d)) => Some(self.carrier.position - d.position),
            (None, None) => None,
        }
    }

    /// Height of the stronger of the `±k` peaks relative to the carrier.
    pub fn ratio(&self, k: i32) -> f64 {
        [k, -k]
            .iter()
            .filter_map(|&o| self.get(o).and_then(|s| s.peak))
            .map(|p| p.height)
            .fold(0.0, f64::max)
            / self.carrier.height
    }
}

/// Local maxima of a sampled curve (plateaus report their first sample).
pub fn local_maxima(x: &[f64], y: &[f64]) -> Vec<Peak> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .map(|i| Peak {
            position: x[i],
            height: y[i],
        })
        .collect()
}

/// Carrier and sideband orders `±1..=max_order` of a spectrum with motional
/// spacing `omega`.
pub fn analyze_sidebands(spectrum: &Spectrum, omega: f64, max_order: i32) -> Result<SidebandReport> {
    let x = &spectrum.detuning;
    let y = &spectrum.p2;
    let maxima = local_maxima(x, y);
    let carrier = maxima
        .iter()
        .filter(|p| (p.position - spectrum.carrier).abs() < 0.5 * omega)
        .fold(None::<Peak>, |best, p| match best {
            Some(b) if b.height >= p.height => Some(b),
            _ => Some(*p),
        })
        .ok_or_else(|| Error::Numerical("no carrier peak within half a motional spacing of the mean resonance".into()))?;
    let mut sidebands = Vec::new();
    for k in (-max_order..=max_order).filter(|&k| k != 0) {
        let centre = carrier.position + k as f64 * omega;
        let inside = |p: f64| (p - centre).abs() <= 0.25 * omega;
        let peak = maxima
            .iter()
            .filter(|p| inside(p.position))
            .fold(None::<Peak>, |best, p| match best {
                Some(b) if b.height >= p.height => Some(b),
                _ => Some(*p),
            });
        let band_max = x
            .iter()
            .zip(y)
            .filter(|(p, _)| inside(**p))
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        sidebands.push(Sideband { order: k, peak, band_max });
    }
    Ok(SidebandReport { carrier, sidebands })
}

#[cfg(test)]
mod tests;
