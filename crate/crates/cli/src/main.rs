mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use photonbench::{Error, ErrorKind};

/// Single-photon source workbench: emitter simulation, g²(τ) analysis,
/// photophysics fits and nanofiber design.
#[derive(Parser, Debug)]
#[command(name = "photonbench", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a time-tag stream from a scenario file.
    Simulate(SimulateArgs),
    /// Correlate a time-tag file and report g²(0).
    Correlate(CorrelateArgs),
    /// Fit a saturation curve to repeated intensity measurements.
    Saturation(SaturationArgs),
    /// Fit a Gaussian line to wavelength samples or a binned spectrum.
    Spectrum(SpectrumArgs),
    /// Stokes parameters and degree of polarization from six intensities.
    Polarization(PolarizationArgs),
    /// Guidance and mode properties of an air-clad fiber.
    Fiber(FiberArgs),
    /// Taper profile, pull program and adiabaticity check.
    Taper(TaperArgs),
    /// Rerun a headline scenario and check its bounds.
    Repro(ReproArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TagFormat {
    Ntag,
    Csv,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub duration_s: Option<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Defaults to csv for a .csv extension, ntag otherwise.
    #[arg(long, value_enum)]
    pub format: Option<TagFormat>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CorrelateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<TagFormat>,
    /// Analysis settings; defaults to the input's sidecar scenario if any.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub bin_width_ps: Option<i64>,
    #[arg(long, conflicts_with = "cw")]
    pub period_ns: Option<f64>,
    #[arg(long)]
    pub zero_delay_ns: Option<f64>,
    #[arg(long, conflicts_with = "cw")]
    pub dead_time_ns: Option<f64>,
    #[arg(long, conflicts_with = "cw")]
    pub lifetime_ns: Option<f64>,
    #[arg(long, conflicts_with = "cw")]
    pub window_ns: Option<f64>,
    #[arg(long, conflicts_with = "cw", requires = "long_to_ns")]
    pub long_from_ns: Option<f64>,
    #[arg(long, conflicts_with = "cw", requires = "long_from_ns")]
    pub long_to_ns: Option<f64>,
    /// Continuous-wave normalization instead of pulsed peak integration.
    #[arg(long)]
    pub cw: bool,
    #[arg(long, default_value_t = 1000.0, requires = "cw")]
    pub max_tau_ns: f64,
    /// Histogram CSV (tau_ps, raw, masked_flag, normalized).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Full JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SaturationArgs {
    /// CSV rows: power_nW, repeat_1, ..., repeat_n.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub keep: usize,
    /// Fit the plain mean of all repeats.
    #[arg(long, conflicts_with = "keep")]
    pub unfiltered: bool,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SpectrumArgs {
    /// One column of wavelengths (nm) or two columns wavelength_nm, counts.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct PolarizationArgs {
    /// CSV rows: H, V, D, A, R, L intensities.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value_t = photonbench::photostats::UNPOLARIZED_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct FiberArgs {
    #[arg(long)]
    pub radius_nm: f64,
    #[arg(long)]
    pub wavelength_nm: f64,
    /// Glass index, or "auto" for fused silica.
    #[arg(long, default_value = "auto")]
    pub n1: String,
    #[arg(long, default_value_t = 1.0)]
    pub n2: f64,
    /// Emitter distance from the surface for the coupling estimate.
    #[arg(long, default_value_t = 0.0)]
    pub offset_nm: f64,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct TaperArgs {
    #[arg(long, default_value_t = 62.5)]
    pub r0_um: f64,
    #[arg(long, default_value_t = 150.0)]
    pub target_nm: f64,
    #[arg(long, default_value_t = 0.5)]
    pub hotzone_mm: f64,
    /// Hot zone grows by alpha per unit elongation (linear profile mode).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Elongation per pull step; defaults to L0/20.
    #[arg(long)]
    pub step_mm: Option<f64>,
    /// Wavelength for the adiabaticity check.
    #[arg(long, default_value_t = 600.0)]
    pub wavelength_nm: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig4,
    Fig6,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Replaces the built-in scenario.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub duration_s: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    /// A repro bound was not met.
    Check(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 3,
                ErrorKind::Numerical => 4,
                ErrorKind::Io => 5,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Check(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command, &argv[1..]) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.code();
            eprintln!("error: {}", e.message());
            println!(
                "{}",
                serde_json::json!({ "status": "error", "exit_code": code, "error": e.message() })
            );
            ExitCode::from(code)
        }
    }
}
