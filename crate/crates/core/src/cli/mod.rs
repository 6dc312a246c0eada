//! The `nvsim` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error (bad flag, unreadable file,
//! malformed config), 2 physics or validation error from a library module.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::sequence::{Dimension, Unit};

pub use config::{Resolved, RunConfig};
pub use output::{Document, Format, Table, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Physics(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Physics(_) => 2,
        }
    }
}

macro_rules! physics_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Physics(e.into())
            }
        }
    )*};
}
physics_from!(
    crate::hamiltonian::HamiltonianError,
    crate::dynamics::DynamicsError,
    crate::sequence::SequenceError,
    crate::analysis::FitError,
    crate::sgi::SgiError,
    crate::resonator::ResonatorError
);

/// NV spin simulator: ODMR, pulsed protocols, fits, Stern-Gerlach and
/// resonator design.
#[derive(Debug, Parser)]
#[command(name = "nvsim", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ODMR spectrum (analytic, pulsed or CW).
    Odmr(OdmrArgs),
    /// Rabi oscillation vs MW pulse length.
    Rabi(RabiArgs),
    /// Ramsey fringes vs free-evolution time.
    RamseyTime(RamseyTimeArgs),
    /// Ramsey fringes vs MW frequency at fixed free-evolution time.
    RamseyFreq(RamseyFreqArgs),
    /// Spin-lattice relaxation: dark time between pump and readout.
    T1(T1Args),
    /// Hahn echo decay.
    Echo(EchoArgs),
    /// Execute a sequence file.
    Run(RunArgs),
    /// Stern-Gerlach interferometer splitting of a nanodiamond.
    Sgi(SgiArgs),
    /// Loop resonator design and field map.
    Resonator(ResonatorArgs),
    /// Fit a model to two columns of a CSV file.
    Fit(FitArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat JSON configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// RNG seed (default: $NVSIM_SEED, else 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Repetitions per readout (at least 1).
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file, written atomically (default: stdout).
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Print the output schema and exit.
    #[arg(long)]
    pub schema: bool,
}

/// NV and relaxation overrides shared by the simulation subcommands.
#[derive(Debug, Clone, Args)]
pub struct Physics {
    /// Static field Bx,By,Bz in tesla (crystal frame).
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub b_field: Option<[f64; 3]>,
    /// NV axis x,y,z.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub axis: Option<[f64; 3]>,
    /// Transverse strain E.
    #[arg(long, value_parser = frequency, allow_hyphen_values = true)]
    pub strain: Option<f64>,
    /// Drop the ¹⁴N hyperfine and quadrupole terms.
    #[arg(long)]
    pub no_hyperfine: bool,
    #[arg(long, value_parser = time)]
    pub t1: Option<f64>,
    #[arg(long, value_parser = time)]
    pub t2_star: Option<f64>,
    #[arg(long, value_parser = time)]
    pub t2_echo: Option<f64>,
    /// Rabi frequency of the MW pulses.
    #[arg(long, value_parser = frequency)]
    pub rabi: Option<f64>,
    /// NV centers contributing to each readout.
    #[arg(long)]
    pub ensemble: Option<f64>,
}

impl Physics {
    fn overrides(&self) -> RunConfig {
        RunConfig {
            b_field: self.b_field,
            nv_axis: self.axis,
            e_strain: self.strain,
            hyperfine: self.no_hyperfine.then_some(false),
            t1: self.t1,
            t2_star: self.t2_star,
            t2_echo: self.t2_echo,
            rabi: self.rabi,
            ensemble_size: self.ensemble,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Orientations {
    /// The configured NV axis only.
    Single,
    /// The four ⟨111⟩ axes of bulk diamond.
    Bulk4,
    /// Random axes (analytic method only).
    Powder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OdmrMethod {
    /// Lorentzian lines from the transition table.
    Spectrum,
    /// π pulse at each frequency, simulated.
    Pulsed,
    /// Weak long MW at each frequency, simulated.
    Cw,
}

#[derive(Debug, Args)]
pub struct OdmrArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub physics: Physics,
    #[arg(long, value_enum, default_value = "single")]
    pub orientations: Orientations,
    #[arg(long, value_enum, default_value = "spectrum")]
    pub method: OdmrMethod,
    #[arg(long, value_parser = frequency, default_value = "2.8GHz")]
    pub from: f64,
    #[arg(long, value_parser = frequency, default_value = "2.94GHz")]
    pub to: f64,
    #[arg(long, default_value_t = 701)]
    pub points: usize,
    /// Lorentzian FWHM (analytic method).
    #[arg(long, value_parser = frequency, default_value = "1MHz")]
    pub linewidth: f64,
    /// Depth of a fully allowed line (analytic method).
    #[arg(long, default_value_t = 0.1)]
    pub contrast: f64,
    /// Powder samples.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

/// Sweep and fit flags of the pulsed protocols.
#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Skip the fit of the protocol's standard model.
    #[arg(long)]
    pub no_fit: bool,
}

#[derive(Debug, Args)]
pub struct RabiArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// MW carrier (default: the m_s 0 → −1 line).
    #[arg(long, value_parser = frequency)]
    pub frequency: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RamseyTimeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// MW carrier (default: the m_s 0 → −1 line plus --detuning).
    #[arg(long, value_parser = frequency)]
    pub frequency: Option<f64>,
    #[arg(long, value_parser = frequency, default_value = "0Hz", allow_hyphen_values = true)]
    pub detuning: f64,
}

#[derive(Debug, Args)]
pub struct RamseyFreqArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Free-evolution time.
    #[arg(long, value_parser = time, default_value = "1us")]
    pub tau: f64,
}

#[derive(Debug, Args)]
pub struct T1Args {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub scan: ScanArgs,
}

#[derive(Debug, Args)]
pub struct EchoArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub physics: Physics,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[arg(long, value_parser = frequency)]
    pub frequency: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub physics: Physics,
    /// Sequence file.
    pub file: PathBuf,
    /// Add or replace a sweep, e.g. `tau=0:10us:200`.
    #[arg(long)]
    pub sweep: Vec<String>,
    /// Fit readout `--readout` against the single sweep variable.
    #[arg(long)]
    pub fit: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub readout: usize,
}

#[derive(Debug, Args)]
pub struct SgiArgs {
    #[command(flatten)]
    pub common: Common,
    /// Carbon atoms in the nanodiamond.
    #[arg(long, default_value_t = 1e7)]
    pub atoms: f64,
    /// Peak gradient, T/m.
    #[arg(long, default_value_t = 1e5, allow_hyphen_values = true)]
    pub gradient: f64,
    /// Total interferometer time.
    #[arg(long, value_parser = time, default_value = "40us")]
    pub duration: f64,
    /// Spin states of the two arms, e.g. `0,1` or `1,-1`.
    #[arg(long, default_value = "0,1", value_parser = parse_arms, allow_hyphen_values = true)]
    pub arms: (i8, i8),
    /// Spin coherence time for the contrast estimate.
    #[arg(long, value_parser = time, default_value = "79us")]
    pub t2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub exponent: f64,
    /// Trajectory samples per gradient segment.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GeometryKind {
    Loop,
    SplitRing,
}

#[derive(Debug, Args)]
pub struct ResonatorArgs {
    #[command(flatten)]
    pub common: Common,
    /// Target resonance.
    #[arg(long, value_parser = frequency, default_value = "2.87GHz")]
    pub frequency: f64,
    /// Loop inductance, H.
    #[arg(long, default_value_t = 1e-9)]
    pub inductance: f64,
    /// Capacitance, F (default: solved from the target resonance).
    #[arg(long)]
    pub capacitance: Option<f64>,
    /// Target 3 dB bandwidth, used to solve the series resistance.
    #[arg(long, value_parser = frequency, default_value = "270MHz")]
    pub bandwidth: f64,
    /// Series resistance, Ω (overrides --bandwidth).
    #[arg(long)]
    pub resistance: Option<f64>,
    /// Drive power, W.
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Matching network source impedance, Ω.
    #[arg(long, default_value_t = 100.0)]
    pub z_source: f64,
    /// Matching network load impedance, Ω.
    #[arg(long, default_value_t = 650.0)]
    pub z_load: f64,
    #[arg(long, value_enum, default_value = "loop")]
    pub geometry: GeometryKind,
    /// JSON geometry file (overrides --geometry).
    #[arg(long, value_name = "FILE")]
    pub geometry_file: Option<PathBuf>,
    /// Loop radius, m.
    #[arg(long, default_value_t = 1e-3)]
    pub radius: f64,
    /// Split-ring gap angle, rad.
    #[arg(long, default_value_t = 0.2)]
    pub gap: f64,
    /// Split-ring feed length, m.
    #[arg(long, default_value_t = 1e-3)]
    pub feed: f64,
    /// Grid points per side of the field map.
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// Half-width of the mapped square, m (default: half the radius).
    #[arg(long)]
    pub extent: Option<f64>,
    /// Height of the mapped plane, m.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub height: f64,
    /// Side of the central square used for the metrics, m (default: 0.2·radius).
    #[arg(long)]
    pub region: Option<f64>,
    /// Chords per circular loop.
    #[arg(long, default_value_t = 10_000)]
    pub segments: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    /// exp_decay, damped_sin, ramsey_3cos or lorentzian_multi(N).
    pub model: String,
    /// CSV file; non-numeric lines and `#` comments are skipped.
    pub datafile: PathBuf,
    /// Zero-based x and y columns.
    #[arg(long, default_value = "0,1")]
    pub columns: String,
    /// Weight residuals by 1/√y.
    #[arg(long)]
    pub poisson: bool,
}

/// Parse `<number><unit>` into SI, requiring the unit's dimension (a bare
/// number is taken as SI).
pub fn parse_quantity(s: &str, want: Dimension) -> Result<f64, String> {
    let s = s.trim();
    let split = s
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(s.len()))
        .filter(|&i| s[..i].parse::<f64>().is_ok())
        .last()
        .ok_or_else(|| format!("'{s}' is not a number"))?;
    let (num, unit) = s.split_at(split);
    let x: f64 = num.parse().map_err(|_| format!("'{s}' is not a number"))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok(x);
    }
    match Unit::parse(unit) {
        Some(u) if u.dimension() == want => Ok(u.to_si(x)),
        Some(u) => Err(format!("'{unit}' is a {:?} unit, expected {want:?}", u.dimension())),
        None => Err(format!("unknown unit '{unit}'")),
    }
}

fn time(s: &str) -> Result<f64, String> {
    parse_quantity(s, Dimension::Time)
}

fn frequency(s: &str) -> Result<f64, String> {
    parse_quantity(s, Dimension::Frequency)
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> =
        s.split(',').map(|c| c.trim().parse::<f64>().map_err(|e| format!("'{c}': {e}"))).collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected three comma-separated numbers".to_string())
}

fn parse_arms(s: &str) -> Result<(i8, i8), String> {
    let v: Vec<i8> =
        s.split(',').map(|c| c.trim().parse::<i8>().map_err(|e| format!("'{c}': {e}"))).collect::<Result<_, _>>()?;
    match v.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err("expected two comma-separated spin projections".into()),
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("NVSIM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("NVSIM_SEED must be an unsigned integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Config file, then flags, then defaults.
fn settings(common: &Common, physics: Option<&Physics>) -> Result<Resolved, CliError> {
    let file = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut flags = physics.map(Physics::overrides).unwrap_or_default();
    flags.seed = common.seed;
    flags.shots = common.shots;
    flags.format = common.format;
    flags.output = common.output.clone();
    file.merge(flags).resolve(env_seed()?)
}

/// Run one parsed command and return its document.
pub fn run_command(command: &Command) -> Result<(Document, Format, Option<PathBuf>), CliError> {
    let (common, physics) = match command {
        Command::Odmr(a) => (&a.common, Some(&a.physics)),
        Command::Rabi(a) => (&a.common, Some(&a.physics)),
        Command::RamseyTime(a) => (&a.common, Some(&a.physics)),
        Command::RamseyFreq(a) => (&a.common, Some(&a.physics)),
        Command::T1(a) => (&a.common, Some(&a.physics)),
        Command::Echo(a) => (&a.common, Some(&a.physics)),
        Command::Run(a) => (&a.common, Some(&a.physics)),
        Command::Sgi(a) => (&a.common, None),
        Command::Resonator(a) => (&a.common, None),
        Command::Fit(a) => (&a.common, None),
    };
    let s = settings(common, physics)?;
    let doc = if common.schema {
        Document { command: "schema".into(), summary: commands::schema(command), data: None }
    } else {
        commands::dispatch(command, &s)?
    };
    let format = if common.schema { Format::Json } else { s.format };
    Ok((doc, format, s.output.clone()))
}

/// Entry point with explicit arguments; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = run_command(&cli.command).and_then(|(doc, format, output)| {
        output::emit(&doc, format, output.as_deref()).map_err(|e| CliError::Usage(format!("cannot write output: {e}")))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nvsim: error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}
