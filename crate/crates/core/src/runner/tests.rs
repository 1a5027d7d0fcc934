use super::*;

fn quick(preset: Preset, extra: Value) -> Config {
    let mut v = json!({"numerics": {"desk_thermal_quanta": 10.3}, "scan": {"tau_points": 21}});
    merge_json(&mut v, &extra);
    resolve_config(preset, Some(&v)).unwrap()
}

#[test]
fn every_preset_resolves_without_overrides() {
    for p in Preset::ALL {
        let c = resolve_config(p, None).unwrap();
        assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        assert!(c.numerics.desk_thermal_quanta.is_some(), "{p}");
    }
    assert!("nope".parse::<Preset>().is_err());
}

#[test]
fn crossing_interpolates() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y = [1.0, 0.8, 0.2, 0.1];
    assert!((first_crossing(&x, &y, 0.5).unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(first_crossing(&x, &y, 0.05), None);
}

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let c = quick(Preset::EchoVsTau, json!({}));
    let opts = |sub: &str| RunOptions {
        out: dir.path().join(sub),
        plot: true,
        ..Default::default()
    };
    let a = run(Preset::EchoVsTau, &c, &opts("a")).unwrap();
    run(Preset::EchoVsTau, &c, &opts("b")).unwrap();
    assert_eq!(a.files, vec!["trace.csv", "plot.svg", "meta.json"]);
    for f in &a.files {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let names: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 3);
}

#[test]
fn failed_runs_leave_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let c = quick(Preset::EchoVsTau, json!({"scan": {"initial_state": [100000, 0]}}));
    let out = dir.path().join("x");
    let err = run(Preset::EchoVsTau, &c, &RunOptions { out: out.clone(), ..Default::default() }).unwrap_err();
    assert!(err.is_config_error());
    assert_eq!(fs::read_dir(&out).unwrap().count(), 0);
}

#[test]
fn curve_csv_matches_the_library_call() {
    let c = quick(Preset::StabilityCurve, json!({"scan": {"epsilons": [1e-4, 1e-3, 4e-3]}}));
    let dir = tempfile::tempdir().unwrap();
    run(Preset::StabilityCurve, &c, &RunOptions { out: dir.path().into(), ..Default::default() }).unwrap();
    let table = CsvTable::read(&dir.path().join("curve.csv")).unwrap();
    let lib = stability(&c, false).unwrap();
    let avg = table.numbers("avg_Onn4").unwrap();
    let eps = table.numbers("epsilon").unwrap();
    for (i, p) in lib.points.iter().enumerate() {
        assert_eq!(eps[i], p.epsilon);
        assert!((avg[i] - p.avg_onn4).abs() <= 1e-15 * p.avg_onn4.abs().max(1.0));
    }
}

#[test]
fn spectrum_preset_reports_sidebands() {
    let c = quick(
        Preset::MwSpectrum,
        json!({"spectroscopy": {"detuning_points": 69, "detuning_start_hz": -600.0, "detuning_stop_hz": 600.0}}),
    );
    let dir = tempfile::tempdir().unwrap();
    let out = run(Preset::MwSpectrum, &c, &RunOptions { out: dir.path().into(), ..Default::default() }).unwrap();
    assert!(out.files.contains(&"spectrum.csv".to_string()) && out.files.contains(&"spectrum_1.csv".to_string()));
    let t = CsvTable::read(&dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(t.header, ["detuning_hz", "P2", "stderr"]);
    assert!(t.numbers("P2").unwrap().iter().all(|p| (0.0..=1.0).contains(p)));
    assert!(t.meta("carrier_hz").is_some());
}
