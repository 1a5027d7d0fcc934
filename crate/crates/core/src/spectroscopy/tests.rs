use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::dynamics::{apply_sudden_pulse, AxisSystem};
use crate::linalg::expm_taylor;
use crate::testutil::{dense_gaussian, harmonic_axis};

fn two_level_p2(rabi: f64, det: f64, t: f64) -> f64 {
    let w = (rabi * rabi + det * det).sqrt();
    rabi * rabi / (w * w) * (0.5 * w * t).sin().powi(2)
}

fn identity_system() -> System {
    System::new(vec![harmonic_axis(1.0, 0.0, 0.0, 12, 12)])
}

#[test]
fn clean_pi_pulse_and_detuned_rabi_formula() {
    let sys = identity_system();
    let rabi = 0.02;
    let p = RabiProblem::new(rabi, PI / rabi, 1e-8, 2).unwrap();
    for n in [0usize, 4, 9] {
        assert!((evolve_rabi(&sys, &[n], &p, 0.0).unwrap() - 1.0).abs() < 1e-10);
        let shifted = evolve_rabi(&sys, &[n], &p, rabi).unwrap();
        assert!((shifted - two_level_p2(rabi, rabi, PI / rabi)).abs() < 1e-10);
    }
}

#[test]
fn sudden_limit_reproduces_instant_rotation() {
    let pair = dense_gaussian(24, 0.08, 0.1);
    let sys = &pair.system;
    let theta = 0.7 * PI;
    let t = 1e-8;
    let mut finite = JointState::ground_branch(sys, &[2], 0.0).unwrap();
    apply_finite_pulse(&mut finite, theta / t, 0.4, t, sys).unwrap();
    let mut sudden = JointState::ground_branch(sys, &[2], 0.0).unwrap();
    apply_sudden_pulse(&mut sudden, theta, 0.4, sys).unwrap();
    for (a, b) in finite.amp1.iter().chain(&finite.amp2).zip(sudden.amp1.iter().chain(&sudden.amp2)) {
        assert!((a - b).norm() < 1e-6);
    }
}

#[test]
fn finite_pulse_matches_dense_exponential_with_phase() {
    let ax = harmonic_axis(1.0, 0.1, 0.4, 6, 7);
    let sys = System::new(vec![ax.clone()]);
    let (rabi, phi, t, det) = (0.8, 1.1, 2.3, 0.15);
    let (d1, d2) = (ax.n1(), ax.n2());
    let h = Mat::from_fn(d1 + d2, d1 + d2, |i, j| {
        let z = C64::new(0.0, 0.0);
        match (i < d1, j < d1) {
            (true, true) if i == j => C64::new(ax.e1[i], 0.0),
            (false, false) if i == j => C64::new(ax.e2[i - d1] - det, 0.0),
            (false, true) => C64::from_polar(0.5 * rabi * ax.overlap.get(i - d1, j), phi),
            (true, false) => C64::from_polar(0.5 * rabi * ax.overlap.get(j - d1, i), -phi),
            _ => z,
        }
    });
    let u = expm_taylor(&h.scale(C64::new(0.0, -t)));
    let mut s = JointState::ground_branch(&sys, &[1], det).unwrap();
    let mut psi = s.amp1.clone();
    psi.extend(s.amp2.iter().copied());
    let expect = u.mul_vec(&psi);
    apply_finite_pulse(&mut s, rabi, phi, t, &sys).unwrap();
    for (a, b) in s.amp1.iter().chain(&s.amp2).zip(&expect) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn spectrum_ignores_rigid_energy_shifts() {
    let ax = harmonic_axis(1.0, 0.05, 0.5, 20, 24);
    let mut shifted: AxisSystem = ax.clone();
    shifted.e1.iter_mut().for_each(|e| *e += 3.7);
    shifted.e2.iter_mut().for_each(|e| *e += 3.7);
    let (a, b) = (System::new(vec![ax]), System::new(vec![shifted]));
    let p = RabiProblem::new(0.1, 40.0, 1e-8, 2).unwrap();
    for det in [-1.2, -0.05, 0.0, 0.9] {
        let x = evolve_rabi(&a, &[3], &p, det).unwrap();
        let y = evolve_rabi(&b, &[3], &p, det).unwrap();
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn window_reports_an_incomplete_basis() {
    let sys = System::new(vec![harmonic_axis(1.0, 0.2, 1.5, 30, 8)]);
    let err = select_window(&sys, &[25], 1e-8, 2).unwrap_err();
    assert!(err.to_string().contains("window"), "{err}");
    let ok = select_window(&sys, &[0], 1e-8, 2).unwrap();
    assert!(ok.branch2[0].contains(&0));
}

#[test]
fn window_keeps_the_transfer_weight() {
    let sys = System::new(vec![harmonic_axis(1.0, 0.05, 0.6, 40, 60)]);
    for n in [0usize, 10, 30] {
        let w = select_window(&sys, &[n], 1e-8, 0).unwrap();
        let col = sys.axes[0].overlap.entries.col(n);
        let kept: f64 = col[w.branch2[0].clone()].iter().map(|x| x * x).sum();
        let total: f64 = col.iter().map(|x| x * x).sum();
        assert!(total - kept <= 1e-8 * total);
        assert!(w.branch1[0].contains(&n));
    }
}

#[test]
fn sideband_report_on_synthetic_lines() {
    let omega = 10.0;
    let x: Vec<f64> = (0..801).map(|i| -40.0 + 0.1 * i as f64).collect();
    let line = |c: f64, h: f64, xv: f64| h * (-((xv - c) / 0.5).powi(2)).exp();
    let y: Vec<f64> = x
        .iter()
        .map(|&v| line(1.0, 0.8, v) + line(11.2, 0.2, v) + line(-9.0, 0.12, v) + line(21.0, 0.05, v))
        .collect();
    let spec = Spectrum {
        detuning: x,
        p2: y,
        stderr: vec![],
        carrier: 1.3,
        area: PI,
        duration: 1.0,
        evaluations: 1,
    };
    let r = analyze_sidebands(&spec, omega, 2).unwrap();
    assert!((r.carrier.position - 1.0).abs() < 1e-9);
    assert!((r.offset(1).unwrap() - 10.1).abs() < 1e-9);
    assert!((r.offset(2).unwrap() - 20.0).abs() < 1e-9);
    assert!((r.ratio(1) - 0.25).abs() < 1e-3);
    assert!(r.get(-2).unwrap().peak.is_none());
    assert!((r.max_ratio() - 0.25).abs() < 1e-3);
    assert!((r.max_peak_ratio() - 0.25).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn two_level_closed_form(det in -0.1f64..0.1, t in 1.0f64..400.0) {
        let sys = identity_system();
        let rabi = 0.03;
        let p = RabiProblem::new(rabi, t, 1e-8, 1).unwrap();
        let got = evolve_rabi(&sys, &[2], &p, det).unwrap();
        prop_assert!((got - two_level_p2(rabi, det, t)).abs() < 1e-10);
    }

    #[test]
    fn finite_pulses_preserve_norm(rabi in 0.01f64..2.0, t in 0.1f64..50.0, phi in -PI..PI) {
        let sys = System::new(vec![harmonic_axis(1.0, 0.07, 0.3, 10, 12)]);
        let mut s = JointState::ground_branch(&sys, &[3], 0.05).unwrap();
        apply_finite_pulse(&mut s, rabi, phi, t, &sys).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-8);
    }
}
