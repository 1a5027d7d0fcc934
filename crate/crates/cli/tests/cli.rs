use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn trap_echo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trap-echo")).args(args).output().unwrap()
}

fn write_config(dir: &Path, value: serde_json::Value) -> String {
    let p = dir.join("config.json");
    fs::write(&p, value.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn zero_scaling_echo_stays_dark() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        serde_json::json!({"trap": {"epsilon_override": 0.0}, "numerics": {"desk_thermal_quanta": 10.3}, "scan": {"tau_points": 11}}),
    );
    let out = dir.path().join("run");
    let o = trap_echo(&["echo-vs-tau", "--config", &cfg, "--out", out.to_str().unwrap(), "--plot", "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "P2").unwrap();
    for l in lines {
        let p: f64 = l.split(',').nth(col).unwrap().parse().unwrap();
        assert!(p < 1e-10, "{l}");
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["preset"], "echo-vs-tau");
    assert!(out.join("plot.svg").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({"trap": {"wavelength_lambda": -1.0}}));
    let out = dir.path().join("run");
    let o = trap_echo(&["ramsey-decay", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wavelength_lambda"));
    assert_eq!(fs::read_dir(&out).map(|d| d.count()).unwrap_or(0), 0);

    let cfg = write_config(dir.path(), serde_json::json!({"trap": {"unknown_field": 1}}));
    assert_eq!(trap_echo(&["echo-vs-tau", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn plot_subcommand_reports_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    fs::write(&csv, "epsilon,avg_Onn4,P2_longtime,stderr\n1e-4,0.99,0.005,0\n1e-3,x,0.1,0\n").unwrap();
    let o = trap_echo(&["plot", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));

    fs::write(&csv, "epsilon,avg_Onn4,P2_longtime,stderr\n1e-4,0.99,0.005,0\n1e-3,0.9,0.05,0\n").unwrap();
    let o = trap_echo(&["plot", csv.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(fs::read_to_string(dir.path().join("curve.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn unknown_preset_is_rejected() {
    let o = trap_echo(&["no-such-preset"]);
    assert!(!o.status.success());
}
