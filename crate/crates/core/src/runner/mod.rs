//! Experiment presets, artifact emission and the run driver behind the CLI.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{merge_json, read_json, Config};
use crate::dynamics::{echo_signal, ramsey_contrast, SignalTrace};
use crate::ensemble::{
    ensemble_echo, ensemble_ramsey, ensemble_ramsey_contrast, stability_curve, DeltaRms, StabilityPoint,
};
use crate::error::{Error, Result};
use crate::experiment::{build_system, harmonic_delta_rms, harmonic_diagonals, harmonic_parameters, BuiltSystem, Mismatch};
use crate::plot::{render_svg, CsvTable, PlotKind};
use crate::spectral::BasisCache;
use crate::spectroscopy::{analyze_sidebands, scan_spectrum, RabiProblem, Sampling, SidebandReport, Spectrum};

mod presets;

pub use presets::Preset;

/// Run-time switches that are not part of the physical configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Physical regime (no desk reduction) for the presets that factorize.
    pub full: bool,
    pub plot: bool,
    /// Directory for cached numerical spectra.
    pub cache: Option<PathBuf>,
}

/// Files written by a run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<String>,
    pub meta: Value,
}

/// Preset defaults overlaid by `user` (a parsed JSON configuration object).
pub fn resolve_config(preset: Preset, user: Option<&Value>) -> Result<Config> {
    let mut v = preset.defaults();
    if let Some(u) = user {
        merge_json(&mut v, u);
    }
    Config::from_value(v)
}

pub fn load_preset_config(preset: Preset, path: Option<&Path>) -> Result<Config> {
    let user = path.map(read_json).transpose()?;
    resolve_config(preset, user.as_ref())
}

fn with_seed(config: &Config, seed: Option<u64>) -> Config {
    let mut c = config.clone();
    if let Some(s) = seed {
        c.scan.seed = s;
    }
    c
}

fn physical_regime(config: &Config) -> Config {
    let mut c = config.clone();
    c.numerics.desk_thermal_quanta = None;
    c
}

fn delta_json(d: &DeltaRms, b: &crate::potentials::ModelScales, states: usize) -> Value {
    let hz = |w: f64| b.units.angular_from_internal(w) / (2.0 * std::f64::consts::PI);
    json!({
        "states": states,
        "mean_resonance_hz": hz(d.mean),
        "delta_rms_hz": hz(d.rms),
        "decay_time_s": if d.decay_time.is_finite() { json!(b.units.time_from_internal(d.decay_time)) } else { Value::Null },
        "degenerate": d.degenerate,
    })
}

fn diagnostics_json(b: &BuiltSystem) -> Value {
    json!({
        "axes": b.diagnostics,
        "epsilon_physical": b.scales.epsilon_physical,
        "epsilon_internal": b.scales.epsilon,
        "quantum_scale": b.scales.units.quantum_scale,
        "oscillation_period_s": b.scales.oscillation_period_s(),
        "thermal_energy_U0": b.kt,
    })
}

/// First abscissa where `y` drops below `level`, linearly interpolated.
pub fn first_crossing(x: &[f64], y: &[f64], level: f64) -> Option<f64> {
    (1..y.len()).find(|&i| y[i] < level && y[i - 1] >= level).map(|i| {
        let f = (y[i - 1] - level) / (y[i - 1] - y[i]);
        x[i - 1] + f * (x[i] - x[i - 1])
    })
}

fn cache_of(opts: Option<&Path>) -> Result<Option<BasisCache>> {
    opts.map(BasisCache::new).transpose()
}

/// Ensemble Ramsey trace with the microwave on the mean resonance.
#[derive(Debug, Clone)]
pub struct RamseyDecay {
    pub trace: SignalTrace,
    pub delta: DeltaRms,
    pub decay_time_s: f64,
    /// Where the ensemble contrast first falls below `1/e`.
    pub contrast_crossing_s: Option<f64>,
    pub system: BuiltSystem,
    /// Physical-regime Δ_RMS and decay time (s) from the analytic harmonic spectra.
    pub full: Option<(DeltaRms, f64, usize)>,
}

pub fn ramsey_decay(config: &Config, full: bool, cache: Option<&BasisCache>) -> Result<RamseyDecay> {
    let b = build_system(config, cache)?;
    let ens = b.ensemble()?;
    let delta = crate::ensemble::delta_rms(&b.system, &ens)?;
    let taus = config.scan.taus();
    let rows: Vec<(f64, f64)> = taus
        .par_iter()
        .map(|&t| {
            let tau = b.seconds_to_internal(t);
            (
                ensemble_ramsey(&b.system, &ens, tau, delta.mean),
                ensemble_ramsey_contrast(&b.system, &ens, tau),
            )
        })
        .collect();
    let contrast: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let crossing = first_crossing(&taus, &contrast, (-1f64).exp());
    let decay_time_s = b.scales.units.time_from_internal(delta.decay_time);
    let full = if full {
        let (d, ens_full, scales) = harmonic_delta_rms(&physical_regime(config))?;
        Some((d, scales.units.time_from_internal(d.decay_time), ens_full.count()))
    } else {
        None
    };
    let trace = SignalTrace {
        tau_s: taus,
        p2: rows.iter().map(|r| r.0).collect(),
        contrast,
        label: "ensemble".into(),
        metadata: vec![
            ("sequence".into(), "ramsey".into()),
            ("epsilon".into(), format!("{:e}", b.scales.epsilon_physical)),
            ("ensemble_states".into(), ens.count().to_string()),
            ("detuning".into(), "mean resonance".into()),
        ],
    };
    Ok(RamseyDecay {
        trace,
        delta,
        decay_time_s,
        contrast_crossing_s: crossing,
        system: b,
        full,
    })
}

/// Spin-echo trace of the thermal ensemble, or of `scan.initial_state` when set.
pub fn echo_trace(b: &BuiltSystem, config: &Config) -> Result<SignalTrace> {
    let taus = config.scan.taus();
    let (rows, label, states): (Vec<(f64, f64)>, String, usize) = match &config.scan.initial_state {
        Some(n) => {
            for (a, (&k, ax)) in n.iter().zip(&b.system.axes).enumerate() {
                if k >= ax.n1() {
                    return Err(Error::config(
                        "scan.initial_state",
                        format!("index {k} on axis {a} exceeds the {} retained states", ax.n1()),
                    ));
                }
            }
            let rows = taus
                .par_iter()
                .map(|&t| {
                    let tau = b.seconds_to_internal(t);
                    (echo_signal(&b.system, n, tau), ramsey_contrast(&b.system, n, tau).contrast)
                })
                .collect();
            let label = n.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
            (rows, label, 1)
        }
        None => {
            let ens = b.ensemble()?;
            let rows = taus
                .par_iter()
                .map(|&t| {
                    let tau = b.seconds_to_internal(t);
                    (ensemble_echo(&b.system, &ens, tau), ensemble_ramsey_contrast(&b.system, &ens, tau))
                })
                .collect();
            (rows, "ensemble".into(), ens.count())
        }
    };
    Ok(SignalTrace {
        tau_s: taus,
        p2: rows.iter().map(|r| r.0).collect(),
        contrast: rows.iter().map(|r| r.1).collect(),
        label,
        metadata: vec![
            ("sequence".into(), "echo".into()),
            ("epsilon".into(), format!("{:e}", b.scales.epsilon_physical)),
            ("ensemble_states".into(), states.to_string()),
        ],
    })
}

/// One echo trace per configured wavelength.
pub fn wavelength_compare(config: &Config, cache: Option<&BasisCache>) -> Result<Vec<(f64, BuiltSystem, SignalTrace)>> {
    if config.scan.wavelengths.is_empty() {
        return Err(Error::config("scan.wavelengths", "wavelength-compare needs at least one wavelength"));
    }
    config
        .scan
        .wavelengths
        .iter()
        .map(|&l| {
            let mut c = config.clone();
            c.trap.wavelength_lambda = l;
            c.trap.epsilon_override = None;
            let b = build_system(&c, cache)?;
            let mut t = echo_trace(&b, &c)?;
            t.label = format!("{:.2}nm", l * 1e9);
            Ok((l, b, t))
        })
        .collect()
}

/// Stability curve with its two mismatch contributions.
#[derive(Debug, Clone)]
pub struct StabilityResult {
    pub points: Vec<StabilityPoint>,
    pub scaling_only: Vec<StabilityPoint>,
    pub displacement_only: Vec<StabilityPoint>,
    pub thermal_energy: f64,
}

pub fn stability(config: &Config, full: bool) -> Result<StabilityResult> {
    let c = if full { physical_regime(config) } else { config.clone() };
    if c.scan.epsilons.is_empty() {
        return Err(Error::config("scan.epsilons", "stability-curve needs at least one epsilon"));
    }
    let eps = &c.scan.epsilons;
    let kt = harmonic_parameters(&c, eps[0])?.0.units.thermal_energy;
    let clip = c.trap.clip_ratio;
    let curve = |m: Mismatch| stability_curve(eps, |e| harmonic_diagonals(&c, e, m), kt, clip);
    Ok(StabilityResult {
        points: curve(Mismatch::Both)?,
        scaling_only: curve(Mismatch::ScalingOnly)?,
        displacement_only: curve(Mismatch::DisplacementOnly)?,
        thermal_energy: kt,
    })
}

/// One scanned spectrum with its sideband analysis.
#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub area: f64,
    pub rabi: f64,
    pub spectrum: Spectrum,
    pub report: Option<SidebandReport>,
    pub report_error: Option<String>,
}

pub fn mw_spectrum(config: &Config, cache: Option<&BasisCache>) -> Result<(BuiltSystem, Vec<SpectrumRun>)> {
    let b = build_system(config, cache)?;
    let ens = b.ensemble()?;
    let carrier = ens.average(|n| b.system.energy2(n) - b.system.energy1(n));
    let detunings: Vec<f64> = config
        .spectroscopy
        .detunings_hz()
        .iter()
        .map(|&f| carrier + b.from_hz(f))
        .collect();
    let sampling = if b.system.axes.len() == 1 {
        Sampling::Full
    } else {
        Sampling::Stratified {
            samples: config.scan.samples.unwrap_or(400),
            seed: config.scan.seed,
        }
    };
    let duration = b.seconds_to_internal(config.spectroscopy.pulse_duration);
    let runs = config
        .spectroscopy
        .rabi_frequencies()
        .into_iter()
        .map(|rabi_si| {
            let rabi = b.scales.units.angular_to_internal(rabi_si);
            let problem = RabiProblem::new(
                rabi,
                duration,
                config.spectroscopy.window_tail,
                config.spectroscopy.window_padding,
            )?;
            let spectrum = scan_spectrum(&b.system, &ens, &problem, &detunings, sampling)?;
            let (report, report_error) = match analyze_sidebands(&spectrum, b.scales.omega_ref, 2) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(SpectrumRun {
                area: problem.area(),
                rabi: rabi_si,
                spectrum,
                report,
                report_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((b, runs))
}

fn spectrum_csv(b: &BuiltSystem, run: &SpectrumRun) -> String {
    let s = &run.spectrum;
    let mut out = String::new();
    out.push_str(&format!("# carrier_hz: {:.9e}\n", b.to_hz(s.carrier)));
    out.push_str(&format!("# pulse_area_rad: {:.9e}\n", run.area));
    out.push_str(&format!("# pulse_duration_s: {:.9e}\n", b.scales.units.time_from_internal(s.duration)));
    out.push_str(&format!("# initial_states: {}\n", s.evaluations));
    out.push_str("detuning_hz,P2,stderr\n");
    for i in 0..s.detuning.len() {
        let e = s.stderr.get(i).copied().unwrap_or(0.0);
        out.push_str(&format!("{:.9e},{:.12e},{:.6e}\n", b.to_hz(s.detuning[i]), s.p2[i], e));
    }
    out
}

fn report_json(b: &BuiltSystem, r: &SidebandReport) -> Value {
    let omega_hz = b.to_hz(b.scales.omega_ref);
    let sidebands: Vec<Value> = r
        .sidebands
        .iter()
        .map(|s| {
            json!({
                "order": s.order,
                "peak_hz": s.peak.map(|p| b.to_hz(p.position)),
                "peak_height": s.peak.map(|p| p.height),
                "band_max": s.band_max,
            })
        })
        .collect();
    let offsets: Vec<Value> = (1..=2)
        .map(|k| {
            json!({
                "order": k,
                "offset_hz": r.offset(k).map(|o| b.to_hz(o)),
                "offset_over_omega": r.offset(k).map(|o| o / b.scales.omega_ref),
                "peak_ratio": r.ratio(k),
            })
        })
        .collect();
    json!({
        "carrier_peak_hz": b.to_hz(r.carrier.position),
        "carrier_height": r.carrier.height,
        "oscillation_hz": omega_hz,
        "sidebands": sidebands,
        "offsets": offsets,
        "max_peak_ratio": r.max_peak_ratio(),
        "max_band_ratio": r.max_ratio(),
    })
}

fn curve_csv(points: &[StabilityPoint], meta: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str("epsilon,avg_Onn4,P2_longtime,stderr\n");
    for p in points {
        out.push_str(&format!(
            "{:.9e},{:.15e},{:.15e},{:.3e}\n",
            p.epsilon, p.avg_onn4, p.p2_longtime, p.stderr
        ));
    }
    out
}

/// Several traces in one file, sharing the first trace's metadata.
fn traces_csv(traces: &[&SignalTrace]) -> String {
    let mut out = String::new();
    for (i, t) in traces.iter().enumerate() {
        let csv = t.to_csv();
        if i == 0 {
            out.push_str(&csv);
        } else {
            out.extend(csv.lines().skip_while(|l| l.starts_with('#')).skip(1).map(|l| format!("{l}\n")));
        }
    }
    out
}

struct Artifacts {
    files: Vec<(String, String)>,
    plot: Option<(String, PlotKind)>,
    meta: Map<String, Value>,
}

fn points_json(points: &[StabilityPoint]) -> Value {
    Value::Array(
        points
            .iter()
            .map(|p| json!({"epsilon": p.epsilon, "avg_Onn4": p.avg_onn4, "P2_longtime": p.p2_longtime}))
            .collect(),
    )
}

fn compute(preset: Preset, config: &Config, opts: &RunOptions) -> Result<Artifacts> {
    let cache = cache_of(opts.cache.as_deref())?;
    let cache = cache.as_ref();
    let mut meta = Map::new();
    let mut files = Vec::new();
    let mut plot = None;
    match preset {
        Preset::RamseyDecay => {
            let r = ramsey_decay(config, opts.full, cache)?;
            let states = r.system.ensemble()?.count();
            meta.insert("system".into(), diagnostics_json(&r.system));
            meta.insert("delta_rms".into(), delta_json(&r.delta, &r.system.scales, states));
            meta.insert("contrast_below_1_over_e_s".into(), json!(r.contrast_crossing_s));
            if let Some((d, _, n)) = &r.full {
                let scales = crate::potentials::model_scales(
                    &physical_regime(config).trap,
                    &physical_regime(config).numerics,
                    &config.constants,
                )?;
                meta.insert("delta_rms_full".into(), delta_json(d, &scales, *n));
            }
            files.push(("trace.csv".into(), r.trace.to_csv()));
            plot = Some(("trace.csv".into(), PlotKind::Trace));
        }
        Preset::EchoVsTau => {
            let b = build_system(config, cache)?;
            let t = echo_trace(&b, config)?;
            meta.insert("system".into(), diagnostics_json(&b));
            files.push(("trace.csv".into(), t.to_csv()));
            plot = Some(("trace.csv".into(), PlotKind::Trace));
        }
        Preset::WavelengthCompare => {
            let runs = wavelength_compare(config, cache)?;
            let mut per = Vec::new();
            for (l, b, _) in &runs {
                per.push(json!({"wavelength_m": l, "system": diagnostics_json(b)}));
            }
            meta.insert("wavelengths".into(), Value::Array(per));
            let traces: Vec<&SignalTrace> = runs.iter().map(|r| &r.2).collect();
            files.push(("trace.csv".into(), traces_csv(&traces)));
            plot = Some(("trace.csv".into(), PlotKind::Trace));
        }
        Preset::StabilityCurve => {
            let r = stability(config, opts.full)?;
            let states = r.points.first().map(|p| p.states).unwrap_or(0);
            meta.insert("regime".into(), json!(if opts.full { "physical" } else { "desk" }));
            meta.insert("ensemble_states".into(), json!(states));
            meta.insert("thermal_energy_U0".into(), json!(r.thermal_energy));
            meta.insert("scaling_only".into(), points_json(&r.scaling_only));
            meta.insert("displacement_only".into(), points_json(&r.displacement_only));
            let head = vec![
                (
                    "model".to_string(),
                    format!("{}D harmonic, analytic overlap diagonal", config.numerics.dimensionality),
                ),
                ("ensemble_states".to_string(), states.to_string()),
            ];
            files.push(("curve.csv".into(), curve_csv(&r.points, &head)));
            plot = Some(("curve.csv".into(), PlotKind::Curve));
        }
        Preset::MwSpectrum => {
            let (b, runs) = mw_spectrum(config, cache)?;
            meta.insert("system".into(), diagnostics_json(&b));
            let mut spectra = Vec::new();
            for (i, run) in runs.iter().enumerate() {
                let name = if i == 0 { "spectrum.csv".to_string() } else { format!("spectrum_{i}.csv") };
                spectra.push(json!({
                    "file": name,
                    "pulse_area_rad": run.area,
                    "rabi_rad_per_s": run.rabi,
                    "initial_states": run.spectrum.evaluations,
                    "carrier_hz": b.to_hz(run.spectrum.carrier),
                    "sidebands": run.report.as_ref().map(|r| report_json(&b, r)),
                    "sideband_error": run.report_error,
                }));
                files.push((name, spectrum_csv(&b, run)));
            }
            meta.insert("spectra".into(), Value::Array(spectra));
            meta.insert(
                "sampling".into(),
                json!(if b.system.axes.len() == 1 { "full" } else { "stratified" }),
            );
            plot = Some(("spectrum.csv".into(), PlotKind::Spectrum));
        }
        Preset::EigensolveReport => {
            let b = build_system(config, cache)?;
            meta.insert("system".into(), diagnostics_json(&b));
            for (i, (b1, b2)) in b.bases1.iter().zip(&b.bases2).enumerate() {
                let label = b1.axis.label();
                let mut text = String::from("branch,n,energy_U0,energy_hz\n");
                for (branch, basis) in [(1, b1), (2, b2)] {
                    for (n, e) in basis.energies.iter().enumerate() {
                        text.push_str(&format!("{branch},{n},{e:.15e},{:.9e}\n", b.to_hz(*e)));
                    }
                }
                files.push((format!("energies_{label}.csv"), text));
                let o = &b.system.axes[i].overlap;
                let mut text = String::from("n,column_norm,O_nn\n");
                for n in 0..o.cols() {
                    text.push_str(&format!("{n},{:.15e},{:.15e}\n", o.column_norm_sqr(n), o.diag(n)));
                }
                files.push((format!("overlap_{label}.csv"), text));
            }
        }
    }
    Ok(Artifacts { files, plot, meta })
}

/// Runs `preset`, writing its artifacts and `meta.json` into `opts.out`.
///
/// Files are staged in a hidden directory and moved into place only when
/// every computation succeeded; on error the staging directory is removed.
pub fn run(preset: Preset, config: &Config, opts: &RunOptions) -> Result<RunOutput> {
    let config = with_seed(config, opts.seed);
    fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let stage = opts.out.join(format!(".staging-{}", preset.name()));
    if stage.exists() {
        fs::remove_dir_all(&stage).map_err(|e| Error::io(&stage, e))?;
    }
    fs::create_dir(&stage).map_err(|e| Error::io(&stage, e))?;
    let result = stage_artifacts(preset, &config, opts, &stage);
    let out = match result {
        Ok(out) => out,
        Err(e) => {
            let _ = fs::remove_dir_all(&stage);
            return Err(e);
        }
    };
    for f in &out.files {
        let dst = opts.out.join(f);
        fs::rename(stage.join(f), &dst).map_err(|e| Error::io(&dst, e))?;
    }
    fs::remove_dir_all(&stage).map_err(|e| Error::io(&stage, e))?;
    Ok(out)
}

fn stage_artifacts(preset: Preset, config: &Config, opts: &RunOptions, stage: &Path) -> Result<RunOutput> {
    let art = compute(preset, config, opts)?;
    let mut names = Vec::new();
    for (name, text) in &art.files {
        let p = stage.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        names.push(name.clone());
    }
    if opts.plot {
        if let Some((csv, kind)) = &art.plot {
            let text = &art.files.iter().find(|(n, _)| n == csv).expect("plotted file exists").1;
            let table = CsvTable::parse(text, Path::new(csv))?;
            let svg = render_svg(&table, *kind)?;
            let p = stage.join("plot.svg");
            fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
            names.push("plot.svg".into());
        }
    }
    let mut meta = Map::new();
    meta.insert("preset".into(), json!(preset.name()));
    meta.insert("code_version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("seed".into(), json!(config.scan.seed));
    meta.insert("full".into(), json!(opts.full));
    meta.insert("config".into(), config.to_value());
    meta.insert("files".into(), json!(names));
    meta.insert("results".into(), Value::Object(art.meta));
    let meta = Value::Object(meta);
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    let p = stage.join("meta.json");
    fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    names.push("meta.json".into());
    Ok(RunOutput { files: names, meta })
}

#[cfg(test)]
mod tests;
