use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

/// Named experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    RamseyDecay,
    EchoVsTau,
    WavelengthCompare,
    StabilityCurve,
    MwSpectrum,
    EigensolveReport,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::RamseyDecay,
        Preset::EchoVsTau,
        Preset::WavelengthCompare,
        Preset::StabilityCurve,
        Preset::MwSpectrum,
        Preset::EigensolveReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::RamseyDecay => "ramsey-decay",
            Preset::EchoVsTau => "echo-vs-tau",
            Preset::WavelengthCompare => "wavelength-compare",
            Preset::StabilityCurve => "stability-curve",
            Preset::MwSpectrum => "mw-spectrum",
            Preset::EigensolveReport => "eigensolve-report",
        }
    }

    /// Configuration overlay applied beneath the user's file.
    pub fn defaults(self) -> Value {
        let desk = json!({
            "trap": {"model": "harmonic", "oscillation_period": 3.6e-3, "wavelength_lambda": 800e-9},
            "numerics": {"desk_thermal_quanta": 50.0, "dimensionality": 2},
            "scan": {"tau_start": 0.0, "tau_stop": 10e-3, "tau_points": 201}
        });
        let mut v = desk;
        let extra = match self {
            Preset::RamseyDecay | Preset::EchoVsTau => json!({}),
            Preset::WavelengthCompare => json!({
                "scan": {"wavelengths": [805e-9, 798.25e-9, 796.25e-9]}
            }),
            Preset::StabilityCurve => json!({
                "scan": {"epsilons": log_grid(1e-5, 1e-2, 31)}
            }),
            Preset::MwSpectrum => json!({
                "trap": {"wavelength_lambda": 805e-9},
                "numerics": {"dimensionality": 1, "axis_1d": "vertical"},
                "scan": {"samples": 400},
                "spectroscopy": {
                    "pulse_duration": 20e-3,
                    "pulse_areas": [PI, 4.0 * PI],
                    "detuning_start_hz": -700.0,
                    "detuning_stop_hz": 1000.0,
                    "detuning_points": 341
                }
            }),
            Preset::EigensolveReport => json!({
                "trap": {"model": "gaussian", "oscillation_period": null},
                "numerics": {"grid_points_per_axis": 512}
            }),
        };
        crate::config::merge_json(&mut v, &extra);
        strip_nulls(&mut v);
        v
    }
}

fn strip_nulls(v: &mut Value) {
    if let Value::Object(m) = v {
        m.retain(|_, x| !x.is_null());
        m.values_mut().for_each(strip_nulls);
    }
}

/// `points` values spaced evenly in log between `lo` and `hi`, rounded to 6 significant digits.
fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..points)
        .map(|i| {
            let x = 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64);
            format!("{x:.5e}").parse().expect("formatted float parses")
        })
        .collect()
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                format!("unknown preset `{s}`; expected one of {}", names.join(", "))
            })
    }
}
