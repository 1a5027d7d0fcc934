//! Clipped thermal ensembles, factorized multi-axis averages, stratified
//! sampling and the analytic dephasing estimates built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{flatten, unflatten, System};
use crate::error::{Error, Result};
use crate::linalg::{ComplexSum, NeumaierSum, C64};

/// Boltzmann weights `w ∝ e^{-(E - E_min)/k_BT}` restricted to
/// `E - E_min < clip_ratio·k_BT`, over separable product states.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalEnsemble {
    /// `k_BT` in the energy unit of the spectra.
    pub kt: f64,
    pub clip_ratio: f64,
    /// Per-axis energies above that axis' potential minimum, ascending.
    axis_energies: Vec<Vec<f64>>,
    partition: f64,
    count: usize,
}

/// One included state with its normalized weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedState {
    pub index: Vec<usize>,
    pub energy: f64,
    pub weight: f64,
}

/// Sampled estimate of an ensemble average.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// States evaluated.
    pub evaluations: usize,
}

impl ThermalEnsemble {
    /// `axis_energies[a]` are the branch-1 levels of axis `a` measured from
    /// that axis' potential minimum; each list must be ascending.
    pub fn new(axis_energies: Vec<Vec<f64>>, kt: f64, clip_ratio: f64) -> Result<ThermalEnsemble> {
        if !(kt > 0.0 && kt.is_finite()) {
            return Err(Error::invariant("temperature > 0", format!("k_BT = {kt}")));
        }
        if !(clip_ratio > 0.0) {
            return Err(Error::invariant("clip_ratio > 0", format!("clip_ratio = {clip_ratio}")));
        }
        if axis_energies.is_empty() || axis_energies.len() > 2 {
            return Err(Error::invariant(
                "one or two axes",
                format!("{} axes given", axis_energies.len()),
            ));
        }
        for e in &axis_energies {
            if e.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::invariant("ascending spectrum", "axis energies must be sorted"));
            }
        }
        let mut ens = ThermalEnsemble {
            kt,
            clip_ratio,
            axis_energies,
            partition: 1.0,
            count: 0,
        };
        let ones: Vec<Vec<C64>> = ens.axis_energies.iter().map(|e| vec![C64::new(1.0, 0.0); e.len()]).collect();
        let (z, count) = ens.unnormalized_sum(&ones);
        if count == 0 {
            return Err(Error::invariant(
                "states below clip",
                format!("no state lies below {clip_ratio}·k_BT above the potential minimum"),
            ));
        }
        ens.partition = z.re;
        ens.count = count;
        Ok(ens)
    }

    /// Ensemble over the branch-1 spectra of `system`.
    pub fn for_system(system: &System, kt: f64, clip_ratio: f64) -> Result<ThermalEnsemble> {
        let energies = system
            .axes
            .iter()
            .map(|a| a.e1.iter().map(|e| e - a.minimum1).collect())
            .collect();
        ThermalEnsemble::new(energies, kt, clip_ratio)
    }

    pub fn clip_energy(&self) -> f64 {
        self.clip_ratio * self.kt
    }

    pub fn n_axes(&self) -> usize {
        self.axis_energies.len()
    }

    /// Number of included states.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn partition(&self) -> f64 {
        self.partition
    }

    /// Highest included quantum number on each axis, plus one.
    pub fn extent(&self) -> Vec<usize> {
        let clip = self.clip_energy();
        let mins: Vec<f64> = self.axis_energies.iter().map(|e| e[0]).collect();
        let total_min: f64 = mins.iter().sum();
        self.axis_energies
            .iter()
            .zip(&mins)
            .map(|(e, &m)| e.partition_point(|&x| x - m + total_min < clip))
            .collect()
    }

    pub fn energy(&self, n: &[usize]) -> f64 {
        self.axis_energies.iter().zip(n).map(|(e, &k)| e[k]).sum()
    }

    /// Normalized weight of state `n` (zero outside the clip).
    pub fn weight(&self, n: &[usize]) -> f64 {
        if n.len() != self.n_axes() || n.iter().zip(&self.axis_energies).any(|(&k, e)| k >= e.len()) {
            return 0.0;
        }
        let e = self.energy(n);
        if e < self.clip_energy() {
            (-e / self.kt).exp() / self.partition
        } else {
            0.0
        }
    }

    /// `Σ_n e^{-E_n/kT} Π_a f_a[n_a]` over included states, and their count.
    fn unnormalized_sum(&self, f: &[Vec<C64>]) -> (C64, usize) {
        let clip = self.clip_energy();
        let kt = self.kt;
        match self.axis_energies.as_slice() {
            [ex] => {
                let mut acc = ComplexSum::default();
                let mut count = 0;
                for (k, &e) in ex.iter().enumerate().take_while(|(_, &e)| e < clip) {
                    acc.add(f[0][k] * (-e / kt).exp());
                    count += 1;
                }
                (acc.value(), count)
            }
            [ex, ey] => {
                // prefix[k] = Σ_{j<k} e^{-Ey_j/kT} f_y[j]
                let mut prefix = Vec::with_capacity(ey.len() + 1);
                let mut run = ComplexSum::default();
                prefix.push(C64::new(0.0, 0.0));
                for (j, &e) in ey.iter().enumerate() {
                    run.add(f[1][j] * (-e / kt).exp());
                    prefix.push(run.value());
                }
                let mut acc = ComplexSum::default();
                let mut count = 0;
                let mut k = ey.len();
                for (i, &e) in ex.iter().enumerate() {
                    // ey ascending and ex ascending: the admissible prefix only shrinks
                    while k > 0 && e + ey[k - 1] >= clip {
                        k -= 1;
                    }
                    if k == 0 {
                        break;
                    }
                    acc.add(f[0][i] * (-e / kt).exp() * prefix[k]);
                    count += k;
                }
                (acc.value(), count)
            }
            _ => unreachable!("axis count checked at construction"),
        }
    }

    /// `Σ_n w_n Π_a f_a[n_a]` in O(Σ_a N_a) operations.
    ///
    /// Each `f[a]` must cover the included quantum numbers of axis `a`
    /// (see [`ThermalEnsemble::extent`]).
    pub fn factorized_average(&self, f: &[Vec<C64>]) -> C64 {
        assert_eq!(f.len(), self.n_axes(), "one factor per axis");
        for (fa, &need) in f.iter().zip(&self.extent()) {
            assert!(fa.len() >= need, "factor covers {} states, ensemble needs {need}", fa.len());
        }
        let padded: Vec<Vec<C64>> = f
            .iter()
            .zip(&self.axis_energies)
            .map(|(fa, e)| {
                let mut v = fa.clone();
                v.resize(e.len().max(fa.len()), C64::new(0.0, 0.0));
                v
            })
            .collect();
        self.unnormalized_sum(&padded).0 / self.partition
    }

    /// Real-valued variant of [`ThermalEnsemble::factorized_average`].
    pub fn factorized_average_real(&self, f: &[Vec<f64>]) -> f64 {
        let fc: Vec<Vec<C64>> = f.iter().map(|v| v.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        self.factorized_average(&fc).re
    }

    /// Every included state in ascending energy (ties by flat index).
    pub fn states(&self) -> Vec<WeightedState> {
        let clip = self.clip_energy();
        let shape: Vec<usize> = self.axis_energies.iter().map(|e| e.len()).collect();
        let extent = self.extent();
        let mut out = Vec::with_capacity(self.count);
        let total: usize = extent.iter().product();
        for flat in 0..total {
            let n = unflatten(flat, &extent);
            let e = self.energy(&n);
            if e < clip {
                out.push(WeightedState {
                    weight: (-e / self.kt).exp() / self.partition,
                    energy: e,
                    index: n,
                });
            }
        }
        out.sort_by(|a, b| {
            a.energy
                .total_cmp(&b.energy)
                .then_with(|| flatten(&a.index, &shape).cmp(&flatten(&b.index, &shape)))
        });
        out
    }

    /// `Σ_n w_n f(n)` by full enumeration, evaluated in parallel and summed
    /// in ascending-energy order.
    pub fn average<F>(&self, f: F) -> f64
    where
        F: Fn(&[usize]) -> f64 + Sync,
    {
        self.average_vec(|n| vec![f(n)])[0]
    }

    /// Element-wise [`ThermalEnsemble::average`] of a vector-valued function.
    pub fn average_vec<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[usize]) -> Vec<f64> + Sync,
    {
        let states = self.states();
        let values: Vec<Vec<f64>> = states.par_iter().map(|s| f(&s.index)).collect();
        let len = values.first().map_or(0, |v| v.len());
        let mut acc = vec![NeumaierSum::new(); len];
        for (s, v) in states.iter().zip(&values) {
            for (a, x) in acc.iter_mut().zip(v) {
                a.add(s.weight * x);
            }
        }
        acc.iter().map(|a| a.value()).collect()
    }

    /// Stratified estimate of `Σ_n w_n f(n)` from about `samples` evaluations.
    ///
    /// States are ordered by energy and cut into strata of equal weight; two
    /// states are drawn per stratum with probability proportional to their
    /// weight. With at least as many samples as states the exact sum is
    /// returned with zero error.
    pub fn stratified_average<F>(&self, f: F, samples: usize, seed: u64) -> Estimate
    where
        F: Fn(&[usize]) -> Vec<f64> + Sync,
    {
        let states = self.states();
        if samples >= states.len() {
            let mean = self.average_vec(&f);
            let stderr = vec![0.0; mean.len()];
            return Estimate {
                mean,
                stderr,
                evaluations: states.len(),
            };
        }
        let mut cumulative = Vec::with_capacity(states.len() + 1);
        let mut run = NeumaierSum::new();
        cumulative.push(0.0);
        for s in &states {
            run.add(s.weight);
            cumulative.push(run.value());
        }
        let total = *cumulative.last().unwrap();
        // contiguous, non-overlapping strata of roughly equal weight
        let wanted = (samples / 2).max(1);
        let mut cuts = vec![0usize];
        for h in 1..wanted {
            let target = total * h as f64 / wanted as f64;
            let b = cumulative.partition_point(|&c| c < target).min(states.len());
            if b > *cuts.last().unwrap() && b < states.len() {
                cuts.push(b);
            }
        }
        cuts.push(states.len());
        let bounds: Vec<(usize, usize)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
        let strata = bounds.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draws: Vec<(usize, usize)> = Vec::with_capacity(2 * strata);
        for (h, &(lo, hi)) in bounds.iter().enumerate() {
            for _ in 0..2 {
                let u = cumulative[lo] + rng.random::<f64>() * (cumulative[hi] - cumulative[lo]);
                let k = cumulative.partition_point(|&c| c <= u).saturating_sub(1).clamp(lo, hi - 1);
                draws.push((h, k));
            }
        }
        let values: Vec<Vec<f64>> = draws.par_iter().map(|&(_, k)| f(&states[k].index)).collect();
        let len = values.first().map_or(0, |v| v.len());
        let mut mean = vec![NeumaierSum::new(); len];
        let mut var = vec![NeumaierSum::new(); len];
        for h in 0..strata {
            let (lo, hi) = bounds[h];
            let w_h = cumulative[hi] - cumulative[lo];
            let a = &values[2 * h];
            let b = &values[2 * h + 1];
            for i in 0..len {
                mean[i].add(w_h * 0.5 * (a[i] + b[i]));
                // sample variance of two draws is (a-b)²/2, divided by m = 2
                let d = a[i] - b[i];
                var[i].add(w_h * w_h * d * d / 4.0);
            }
        }
        Estimate {
            mean: mean.iter().map(|m| m.value() / total).collect(),
            stderr: var.iter().map(|v| v.value().max(0.0).sqrt() / total).collect(),
            evaluations: draws.len(),
        }
    }
}

/// Spread of the `|n⟩ → |n'=n⟩` resonance frequencies over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRms {
    /// Weighted mean of `ν_n = E²_n - E¹_n` (angular, internal units).
    pub mean: f64,
    /// Weighted RMS deviation of `ν_n` about the mean (angular, internal units).
    pub rms: f64,
    /// `1/(2 Δ_RMS)` with `Δ_RMS` read as an ordinary frequency, i.e. `π / rms`.
    /// Infinite when the spread vanishes.
    pub decay_time: f64,
    /// True when the spread vanishes (single state or ε = 0).
    pub degenerate: bool,
}

/// Δ_RMS of per-axis resonance frequencies `nu[a][k] = E²_k - E¹_k` on axis `a`.
pub fn delta_rms_from_axes(nu: &[Vec<f64>], ensemble: &ThermalEnsemble) -> DeltaRms {
    // subtract each axis' plain mean so the variance is formed from small numbers
    let refs: Vec<f64> = nu.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let centred: Vec<Vec<f64>> = nu
        .iter()
        .zip(&refs)
        .map(|(v, r)| v.iter().map(|x| x - r).collect())
        .collect();
    let ones: Vec<Vec<f64>> = nu.iter().map(|v| vec![1.0; v.len()]).collect();
    let with = |a: usize, f: Vec<f64>, b: Option<(usize, Vec<f64>)>| -> f64 {
        let mut factors = ones.clone();
        factors[a] = f;
        if let Some((b, g)) = b {
            factors[b] = g;
        }
        ensemble.factorized_average_real(&factors)
    };
    let n = nu.len();
    let mut first = 0.0;
    let mut second = 0.0;
    for a in 0..n {
        first += with(a, centred[a].clone(), None);
        second += with(a, centred[a].iter().map(|x| x * x).collect(), None);
        for b in a + 1..n {
            second += 2.0 * with(a, centred[a].clone(), Some((b, centred[b].clone())));
        }
    }
    let var = (second - first * first).max(0.0);
    let rms = var.sqrt();
    let mean = first + refs.iter().sum::<f64>();
    let scale = nu.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let degenerate = ensemble.count() == 1 || rms <= 1e-14 * scale;
    DeltaRms {
        mean,
        rms: if degenerate { 0.0 } else { rms },
        decay_time: if degenerate { f64::INFINITY } else { std::f64::consts::PI / rms },
        degenerate,
    }
}

/// Δ_RMS over the branch-1 ensemble of `system`, pairing `|n⟩` with `|n'=n⟩`.
pub fn delta_rms(system: &System, ensemble: &ThermalEnsemble) -> Result<DeltaRms> {
    let extent = ensemble.extent();
    let mut nu = Vec::with_capacity(system.axes.len());
    for (a, (ax, &need)) in system.axes.iter().zip(&extent).enumerate() {
        if ax.n2() < need {
            return Err(Error::invariant(
                "branch-2 basis covers the ensemble",
                format!("axis {a}: ensemble reaches n = {} but branch 2 holds {} states", need - 1, ax.n2()),
            ));
        }
        nu.push((0..need).map(|k| ax.e2[k] - ax.e1[k]).collect());
    }
    Ok(delta_rms_from_axes(&nu, ensemble))
}

fn ensemble_loschmidt(system: &System, ensemble: &ThermalEnsemble, tau: f64) -> C64 {
    let f: Vec<Vec<C64>> = system
        .axes
        .iter()
        .map(|a| {
            crate::dynamics::ramsey_components(a, tau)
                .into_iter()
                .zip(&a.e1)
                .map(|(s, &e)| s * C64::from_polar(1.0, e * tau))
                .collect()
        })
        .collect();
    ensemble.factorized_average(&f)
}

/// Ensemble Ramsey fringe contrast `|Σ_n w_n e^{iE¹_nτ} S_n(τ)|`.
pub fn ensemble_ramsey_contrast(system: &System, ensemble: &ThermalEnsemble, tau: f64) -> f64 {
    ensemble_loschmidt(system, ensemble, tau).norm()
}

/// Ensemble-averaged Ramsey population `½(ν̄ + Re[e^{iΔτ} L̄(τ)])` at MW detuning `detuning`.
pub fn ensemble_ramsey(system: &System, ensemble: &ThermalEnsemble, tau: f64, detuning: f64) -> f64 {
    let retained: Vec<Vec<f64>> = system.axes.iter().map(|a| a.overlap.column_norms()).collect();
    let l = ensemble_loschmidt(system, ensemble, tau);
    0.5 * (ensemble.factorized_average_real(&retained) + (C64::from_polar(1.0, detuning * tau) * l).re)
}

/// Ensemble-averaged echo population at separation `tau`.
pub fn ensemble_echo(system: &System, ensemble: &ThermalEnsemble, tau: f64) -> f64 {
    let comps: Vec<_> = system.axes.iter().map(|a| crate::dynamics::echo_components(a, tau)).collect();
    let y: Vec<Vec<C64>> = comps.iter().map(|c| c.y.clone()).collect();
    let a: Vec<Vec<f64>> = comps.iter().map(|c| c.a.clone()).collect();
    let nu: Vec<Vec<f64>> = comps.iter().map(|c| c.nu.clone()).collect();
    0.25 * (ensemble.factorized_average_real(&a) + ensemble.factorized_average_real(&nu)
        - 2.0 * ensemble.factorized_average(&y).re)
}

/// Per-axis data for the stability average: levels above the minimum and `O_nn`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalAxis {
    pub energies: Vec<f64>,
    pub diagonal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityPoint {
    pub epsilon: f64,
    /// Ensemble average of `|O_nn|⁴`.
    pub avg_onn4: f64,
    /// Long-time echo level `½(1 - avg)`.
    pub p2_longtime: f64,
    pub stderr: f64,
    pub states: usize,
}

/// Ensemble average of `|O_nn|⁴` over a clipped thermal ensemble.
pub fn stability_point(epsilon: f64, axes: &[DiagonalAxis], kt: f64, clip_ratio: f64) -> Result<StabilityPoint> {
    let ens = ThermalEnsemble::new(axes.iter().map(|a| a.energies.clone()).collect(), kt, clip_ratio)?;
    let f: Vec<Vec<f64>> = axes.iter().map(|a| a.diagonal.iter().map(|d| d.powi(4)).collect()).collect();
    for (a, (fa, &need)) in f.iter().zip(&ens.extent()).enumerate() {
        if fa.len() < need {
            return Err(Error::invariant(
                "diagonal covers the ensemble",
                format!("axis {a}: {} diagonal entries, ensemble needs {need}", fa.len()),
            ));
        }
    }
    let avg = ens.factorized_average_real(&f);
    Ok(StabilityPoint {
        epsilon,
        avg_onn4: avg,
        p2_longtime: 0.5 * (1.0 - avg),
        stderr: 0.0,
        states: ens.count(),
    })
}

/// Stability curve over `epsilons`, with `build(ε)` supplying the per-axis diagonals.
pub fn stability_curve<B>(epsilons: &[f64], build: B, kt: f64, clip_ratio: f64) -> Result<Vec<StabilityPoint>>
where
    B: Fn(f64) -> Result<Vec<DiagonalAxis>> + Sync,
{
    if epsilons.iter().any(|&e| !(e >= 0.0)) || epsilons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invariant(
            "epsilons non-negative and ascending",
            format!("{epsilons:?}"),
        ));
    }
    epsilons
        .par_iter()
        .map(|&eps| stability_point(eps, &build(eps)?, kt, clip_ratio))
        .collect()
}

#[cfg(test)]
mod tests;
