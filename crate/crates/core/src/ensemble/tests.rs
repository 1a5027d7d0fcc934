use proptest::prelude::*;

use super::*;
use crate::dynamics::{echo_signal, loschmidt_amplitude, ramsey_signal, System};
use crate::spectral::harmonic_overlap_diagonal;
use crate::testutil::harmonic_axis;

fn ladder(omega: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| omega * (k as f64 + 0.5)).collect()
}

#[test]
fn constant_function_averages_to_itself() {
    let ens = ThermalEnsemble::new(vec![ladder(1.0, 40), ladder(1.3, 40)], 5.0, 1.5).unwrap();
    assert!((ens.average(|_| 0.37) - 0.37).abs() < 1e-14);
    let f = vec![vec![0.37; 40], vec![1.0; 40]];
    assert!((ens.factorized_average_real(&f) - 0.37).abs() < 1e-14);
    let total: f64 = ens.states().iter().map(|s| s.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn cold_limit_selects_the_ground_state() {
    let ens = ThermalEnsemble::new(vec![ladder(1.0, 10)], 1e-3, 1e4).unwrap();
    assert!((ens.weight(&[0]) - 1.0).abs() < 1e-12);
    assert!(ens.weight(&[1]) < 1e-300);
}

#[test]
fn clip_count_in_one_dimension() {
    // E_n = ω(n + ½) < 1.5 k_BT with k_BT = 1000 ω keeps n < 1500
    let ens = ThermalEnsemble::new(vec![ladder(1.0, 4000)], 1000.0, 1.5).unwrap();
    assert_eq!(ens.count(), 1500);
    assert_eq!(ens.extent(), vec![1500]);
}

#[test]
fn physical_scale_two_dimensional_count() {
    // k_BT/ħω for 20 µK and a 3.6 ms oscillation period
    let c = crate::units::PhysicalConstants::default();
    let omega = 2.0 * std::f64::consts::PI / 3.6e-3;
    let ratio = c.k_b * 20e-6 / (c.hbar * omega);
    let e = ladder(1.0, 4000);
    let ens = ThermalEnsemble::new(vec![e.clone(), e.clone()], ratio, 1.5).unwrap();
    let clip = 1.5 * ratio;
    let mut direct = 0usize;
    for &x in &e {
        for &y in &e {
            if x + y < clip {
                direct += 1;
            }
        }
    }
    assert_eq!(ens.count(), direct);
    assert!(ens.count() > 1_000_000, "{}", ens.count());
}

#[test]
fn truncated_geometric_spread_matches_closed_form() {
    // 1D harmonic: ν_n = (ω₂ - ω₁)(n + ½) + const, so Δ_RMS = (ω₂ - ω₁)·std(n)
    let (w1, w2, kt) = (1.0, 1.003, 12.0);
    let n_max = 200;
    let ens = ThermalEnsemble::new(vec![ladder(w1, n_max)], kt, 1.5).unwrap();
    let nu: Vec<f64> = (0..n_max).map(|k| (w2 - w1) * (k as f64 + 0.5) - 0.2).collect();
    let d = delta_rms_from_axes(&[nu], &ens);
    let n = ens.count() as f64;
    let q = (-w1 / kt).exp();
    let var = q / (1.0 - q).powi(2) - n * n * q.powf(n) / (1.0 - q.powf(n)).powi(2);
    let expect = (w2 - w1) * var.sqrt();
    assert!((d.rms - expect).abs() < 1e-12 * expect.max(1.0), "{} vs {expect}", d.rms);
    assert!((d.decay_time - std::f64::consts::PI / expect).abs() / d.decay_time < 1e-10);
}

#[test]
fn degenerate_spreads_are_flagged() {
    let ens = ThermalEnsemble::new(vec![ladder(1.0, 30)], 3.0, 1.5).unwrap();
    let flat = delta_rms_from_axes(&[vec![-0.4; 30]], &ens);
    assert!(flat.degenerate && flat.rms == 0.0 && flat.decay_time.is_infinite());
    let single = ThermalEnsemble::new(vec![ladder(1.0, 30)], 0.5, 1.5).unwrap();
    assert_eq!(single.count(), 1);
    let d = delta_rms_from_axes(&[ladder(0.01, 30)], &single);
    assert!(d.degenerate && d.decay_time.is_infinite());
    assert!(ThermalEnsemble::new(vec![ladder(1.0, 5)], 0.1, 1.0).is_err());
    assert!(ThermalEnsemble::new(vec![ladder(1.0, 5)], -1.0, 1.0).is_err());
}

#[test]
fn two_axis_delta_rms_matches_enumeration() {
    let ax = harmonic_axis(1.0, 0.02, 0.1, 40, 45);
    let ay = harmonic_axis(1.4, 0.02, 0.0, 30, 35);
    let sys = System::new(vec![ax, ay]);
    let ens = ThermalEnsemble::for_system(&sys, 8.0, 1.5).unwrap();
    let d = delta_rms(&sys, &ens).unwrap();
    let nu = |n: &[usize]| sys.energy2(n) - sys.energy1(n);
    let mean = ens.average(nu);
    let var = ens.average(|n| (nu(n) - mean).powi(2));
    assert!((d.mean - mean).abs() < 1e-12);
    assert!((d.rms - var.sqrt()).abs() < 1e-12);
}

#[test]
fn factorized_echo_and_contrast_match_enumeration() {
    let sys = System::new(vec![
        harmonic_axis(1.0, 0.05, 0.3, 30, 40),
        harmonic_axis(1.2, 0.05, 0.0, 25, 35),
    ]);
    let ens = ThermalEnsemble::for_system(&sys, 6.0, 1.5).unwrap();
    for tau in [0.5, 2.6, 9.0] {
        let direct = ens.average(|n| echo_signal(&sys, n, tau));
        assert!((ensemble_echo(&sys, &ens, tau) - direct).abs() < 1e-12);
        let re = ens.average(|n| loschmidt_amplitude(&sys, n, tau).re);
        let im = ens.average(|n| loschmidt_amplitude(&sys, n, tau).im);
        assert!((ensemble_ramsey_contrast(&sys, &ens, tau) - re.hypot(im)).abs() < 1e-12);
        let p2 = ens.average(|n| ramsey_signal(&sys, n, tau, 0.07));
        assert!((ensemble_ramsey(&sys, &ens, tau, 0.07) - p2).abs() < 1e-12);
    }
}

#[test]
fn stratified_estimate_brackets_full_sum() {
    let ens = ThermalEnsemble::new(vec![ladder(1.0, 120), ladder(1.1, 120)], 60.0, 1.5).unwrap();
    assert!(ens.count() > 1000);
    let f = |n: &[usize]| vec![(0.3 * n[0] as f64).sin() + 0.01 * n[1] as f64, (n[0] * n[1]) as f64];
    let full = ens.average_vec(f);
    let est = ens.stratified_average(f, 200, 7);
    for i in 0..2 {
        assert!(est.stderr[i] > 0.0);
        assert!((est.mean[i] - full[i]).abs() < 3.0 * est.stderr[i], "{i}: {} vs {}", est.mean[i], full[i]);
    }
    assert_eq!(est, ens.stratified_average(f, 200, 7));
    assert_ne!(est.mean, ens.stratified_average(f, 200, 8).mean);
    let exact = ens.stratified_average(f, 1_000_000, 1);
    assert_eq!(exact.mean, full);
    assert!(exact.stderr.iter().all(|&s| s == 0.0));
}

#[test]
fn stability_curve_limits_and_monotonicity() {
    let omega: f64 = 1.0;
    let kt = 30.0;
    let n = 80;
    let build = |eps: f64| -> Result<Vec<DiagonalAxis>> {
        let a1 = 1.0 / omega.sqrt();
        let w2 = omega * (1.0 + eps).sqrt();
        let a2 = 1.0 / w2.sqrt();
        // sag difference for a unit tilt
        let d = 0.3 * (1.0 / (omega * omega) - 1.0 / (w2 * w2));
        Ok(vec![
            DiagonalAxis {
                energies: ladder(omega, n),
                diagonal: harmonic_overlap_diagonal(a1, a2, d, n),
            },
            DiagonalAxis {
                energies: ladder(omega, n),
                diagonal: harmonic_overlap_diagonal(a1, a2, 0.0, n),
            },
        ])
    };
    let eps = [0.0, 1e-4, 1e-3, 3e-3, 1e-2, 3e-2];
    let curve = stability_curve(&eps, build, kt, 1.5).unwrap();
    assert!((curve[0].avg_onn4 - 1.0).abs() < 1e-12 && curve[0].p2_longtime.abs() < 1e-12);
    for w in curve.windows(2) {
        assert!(w[1].avg_onn4 <= w[0].avg_onn4);
    }
    assert!(stability_curve(&[1e-3, 1e-4], build, kt, 1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factorized_sum_matches_enumeration(
        ex in proptest::collection::vec(0.0f64..6.0, 1..25),
        ey in proptest::collection::vec(0.0f64..6.0, 1..25),
        kt in 0.3f64..4.0,
        clip in 0.5f64..3.0,
        seed in 0u64..1000,
    ) {
        let mut ex = ex;
        let mut ey = ey;
        ex.sort_by(f64::total_cmp);
        ey.sort_by(f64::total_cmp);
        let ens = ThermalEnsemble::new(vec![ex.clone(), ey.clone()], kt, clip);
        let min_sum = ex[0] + ey[0];
        prop_assume!(min_sum < clip * kt);
        let ens = ens.unwrap();
        let fx: Vec<f64> = (0..ex.len()).map(|i| ((i as u64 + seed) % 7) as f64 - 3.0).collect();
        let fy: Vec<f64> = (0..ey.len()).map(|i| ((i as u64 * 3 + seed) % 5) as f64 + 0.5).collect();
        let fast = ens.factorized_average_real(&[fx.clone(), fy.clone()]);
        let slow = ens.average(|n| fx[n[0]] * fy[n[1]]);
        prop_assert!((fast - slow).abs() < 1e-12 * (1.0 + slow.abs()));
        let total: f64 = ens.states().iter().map(|s| s.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
