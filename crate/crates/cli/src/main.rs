use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use trap_echo::plot::{plot_file, PlotKind};
use trap_echo::runner::{load_preset_config, run, Preset, RunOptions};
use trap_echo::Error;

#[derive(Parser)]
#[command(name = "trap-echo", version, about = "Microwave Ramsey, echo and spectrum simulations in a state-dependent dipole trap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free-induction decay and the Δ_RMS estimate
    RamseyDecay(RunArgs),
    /// Spin-echo signal against pulse separation
    EchoVsTau(RunArgs),
    /// Echo traces at several trap wavelengths
    WavelengthCompare(RunArgs),
    /// Long-time echo average against potential scaling ε
    StabilityCurve(RunArgs),
    /// Finite-pulse microwave spectra with sideband analysis
    MwSpectrum(RunArgs),
    /// Eigenvalues and overlap diagnostics of the trap bases
    EigensolveReport(RunArgs),
    /// Render an existing trace, spectrum or curve CSV as SVG
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration overlaid on the preset defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (defaults to all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the configured random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Physical regime instead of the desk reduction (ramsey-decay and stability-curve)
    #[arg(long)]
    full: bool,
    /// Also write plot.svg
    #[arg(long)]
    plot: bool,
    /// Directory for cached eigensolutions
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Trace,
    Spectrum,
    Curve,
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    /// Artifact kind; inferred from the header when omitted
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// SVG path (defaults to the CSV path with an .svg extension)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_config_error() => 2,
        Error::Numerical(_) | Error::GridMismatch(_) => 3,
        _ => 1,
    }
}

fn run_preset(preset: Preset, a: RunArgs) -> Result<(), Error> {
    if let Some(n) = a.threads {
        trap_echo::set_threads(n)?;
    }
    let config = load_preset_config(preset, a.config.as_deref())?;
    let opts = RunOptions {
        out: a.out,
        seed: a.seed,
        full: a.full,
        plot: a.plot,
        cache: a.cache,
    };
    let out = run(preset, &config, &opts)?;
    for f in &out.files {
        println!("{}", opts.out.join(f).display());
    }
    info!("{preset}: wrote {} file(s)", out.files.len());
    Ok(())
}

fn run_plot(a: PlotArgs) -> Result<(), Error> {
    let out = a.out.unwrap_or_else(|| a.csv.with_extension("svg"));
    let kind = a.kind.map(|k| match k {
        Kind::Trace => PlotKind::Trace,
        Kind::Spectrum => PlotKind::Spectrum,
        Kind::Curve => PlotKind::Curve,
    });
    plot_file(&a.csv, kind, &out)?;
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RamseyDecay(a) => run_preset(Preset::RamseyDecay, a),
        Command::EchoVsTau(a) => run_preset(Preset::EchoVsTau, a),
        Command::WavelengthCompare(a) => run_preset(Preset::WavelengthCompare, a),
        Command::StabilityCurve(a) => run_preset(Preset::StabilityCurve, a),
        Command::MwSpectrum(a) => run_preset(Preset::MwSpectrum, a),
        Command::EigensolveReport(a) => run_preset(Preset::EigensolveReport, a),
        Command::Plot(a) => run_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
