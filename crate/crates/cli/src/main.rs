use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ftn_core::capacity::Expression;
use ftn_core::modem::ModScheme;
use ftn_core::pulses::PulseFamily;
use ftn_core::snr::DbScale;

mod commands;
mod config;
mod error;
mod output;

use config::{parse_grid, ExperimentConfig, Grid};
use error::{CliError, Result};

/// Faster-than-Nyquist signalling experiments: channel taps, capacity
/// curves, AWGN baselines, threshold tables, water-filling and OFDM
/// Monte Carlo runs. Every command writes CSV files plus manifest.json.
#[derive(Parser)]
#[command(name = "ftn", version, propagate_version = true)]
struct Cli {
    /// Worker threads (default: one per core)
    #[arg(long, global = true, env = "FTN_THREADS", value_parser = parse_positive)]
    threads: Option<usize>,
    /// Fixed manifest timestamp so reruns are byte-identical
    #[arg(long, global = true)]
    timestamp: Option<String>,
    /// TOML experiment config; flags given on the command line win
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir)
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Composite ISI taps h[n] and subcarrier gains H[i]
    Channel(ChannelArgs),
    /// Capacity curves over (tau, SNR)
    Capacity(CapacityArgs),
    /// Per-scheme AWGN goodput and correct-bit rate
    Baseline(BaselineArgs),
    /// Threshold table from a baseline CSV, or from a fresh baseline run
    Thresholds(ThresholdsArgs),
    /// Water-filling powers for a gains CSV
    Alloc(AllocArgs),
    /// OFDM over the FTN channel with water-filling and bit loading
    Sim(SimArgs),
    /// Sampled pulse and spectrum
    Pulse(PulseArgs),
    /// Constellation points and labels
    Constellation(ConstellationArgs),
}

#[derive(Args)]
pub struct ChannelArgs {
    /// Transmit pulse: srrc or rect
    #[arg(long, value_parser = parse_family)]
    pub pulse: Option<PulseFamily>,
    /// Roll-off in [0, 1]
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<f64>,
    /// Time acceleration factor in (0, 1]
    #[arg(long, value_parser = parse_tau)]
    pub tau: Option<f64>,
    /// Nyquist period T
    #[arg(long)]
    pub period: Option<f64>,
    /// Pulse truncation in periods
    #[arg(long)]
    pub span: Option<f64>,
    /// Number of subcarriers (power of two)
    #[arg(long, value_parser = parse_positive)]
    pub n: Option<usize>,
}

#[derive(Args)]
pub struct CapacityArgs {
    /// flat, nonflat, nonflat-rect, dt, ftn-srrc or ftn-rect
    #[arg(long, value_parser = parse_expr)]
    pub expr: Option<Expression>,
    /// SNR grid in power dB: start:stop:step or a comma list
    #[arg(long, value_parser = parse_grid)]
    pub snr_db: Option<Grid>,
    /// Comma-separated tau values
    #[arg(long, value_delimiter = ',', value_parser = parse_tau)]
    pub tau: Option<Vec<f64>>,
    /// Roll-off in [0, 1]
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<f64>,
    /// Nyquist period T
    #[arg(long)]
    pub period: Option<f64>,
}

#[derive(Args)]
pub struct BaselineArgs {
    /// SNR grid in dB: start:stop:step or a comma list
    #[arg(long, value_parser = parse_grid)]
    pub snr_db: Option<Grid>,
    /// Packets per (scheme, SNR) cell
    #[arg(long, value_parser = parse_positive)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Symbols per packet
    #[arg(long, value_parser = parse_positive)]
    pub symbols_per_packet: Option<usize>,
    /// Comma-separated schemes, e.g. BPSK,QPSK,16QAM
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
    pub schemes: Option<Vec<ModScheme>>,
    /// dB convention: amplitude (10^(dB/5)) or power (10^(dB/10))
    #[arg(long, value_parser = parse_scale)]
    pub db_scale: Option<DbScale>,
}

#[derive(Args)]
pub struct ThresholdsArgs {
    /// Existing baseline CSV; without it a baseline is run first
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[command(flatten)]
    pub run: BaselineArgs,
}

#[derive(Args)]
pub struct AllocArgs {
    /// CSV with a `magnitude` or `gain` column holding |H[i]|
    #[arg(long)]
    pub gains: Option<PathBuf>,
    /// Channel SNR in dB
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// dB convention: amplitude or power
    #[arg(long, value_parser = parse_scale)]
    pub db_scale: Option<DbScale>,
}

#[derive(Args)]
pub struct SimArgs {
    /// Comma-separated tau values, one curve each
    #[arg(long, value_delimiter = ',', value_parser = parse_tau)]
    pub tau: Option<Vec<f64>>,
    /// SNR grid in dB: start:stop:step or a comma list
    #[arg(long, value_parser = parse_grid)]
    pub snr_db: Option<Grid>,
    /// Trials per SNR point
    #[arg(long, value_parser = parse_positive)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of subcarriers (power of two)
    #[arg(long, value_parser = parse_positive)]
    pub n: Option<usize>,
    /// Transmit pulse: srrc or rect
    #[arg(long, value_parser = parse_family)]
    pub pulse: Option<PulseFamily>,
    /// Roll-off in [0, 1]
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<f64>,
    /// Water-filling on or off
    #[arg(long)]
    pub waterfilling: Option<bool>,
    /// Adaptive bit loading on or off
    #[arg(long)]
    pub loading: Option<bool>,
    /// Scheme used on every carrier when loading is off
    #[arg(long, value_parser = parse_scheme)]
    pub fixed_scheme: Option<ModScheme>,
    /// Threshold CSV for adaptive loading
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    /// OFDM frames per trial (the packet length in symbols)
    #[arg(long, value_parser = parse_positive)]
    pub frames_per_trial: Option<usize>,
    /// Cyclic prefix length in samples (default: channel memory)
    #[arg(long)]
    pub cp_len: Option<usize>,
    /// Shape the noise by sqrt(H) per carrier
    #[arg(long)]
    pub colored_noise: Option<bool>,
    /// dB convention: amplitude or power
    #[arg(long, value_parser = parse_scale)]
    pub db_scale: Option<DbScale>,
    /// Run every water-filling/loading on/off combination
    #[arg(long)]
    pub compare: bool,
}

#[derive(Args)]
pub struct PulseArgs {
    /// srrc, rc, rect or tri
    #[arg(long, value_parser = parse_family, default_value = "srrc")]
    pub pulse: PulseFamily,
    /// Roll-off in [0, 1]
    #[arg(long, value_parser = parse_alpha, default_value_t = 0.3)]
    pub alpha: f64,
    /// Nyquist period T
    #[arg(long, default_value_t = 1.0)]
    pub period: f64,
    /// Truncation in periods
    #[arg(long, default_value_t = 16.0)]
    pub span: f64,
    /// Time samples per period
    #[arg(long, value_parser = parse_positive, default_value_t = 16)]
    pub samples_per_period: usize,
    /// Frequency points over [-2/T, 2/T]
    #[arg(long, value_parser = parse_positive, default_value_t = 513)]
    pub freq_points: usize,
}

#[derive(Args)]
pub struct ConstellationArgs {
    /// Scheme to dump (default: all six)
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<ModScheme>,
}

fn parse_tau(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("tau must lie in (0, 1], got {v}"))
    }
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("alpha must lie in [0, 1], got {v}"))
    }
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_scale(s: &str) -> std::result::Result<DbScale, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "power" => Ok(DbScale::Power),
        "amplitude" => Ok(DbScale::Amplitude),
        _ => Err(format!("expected `power` or `amplitude`, got `{s}`")),
    }
}

fn parse_scheme(s: &str) -> std::result::Result<ModScheme, String> {
    s.parse().map_err(|e: ftn_core::Error| e.to_string())
}

fn parse_family(s: &str) -> std::result::Result<PulseFamily, String> {
    s.parse().map_err(|e: ftn_core::Error| e.to_string())
}

fn parse_expr(s: &str) -> std::result::Result<Expression, String> {
    s.parse().map_err(|e: ftn_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set [output] dir".into()))?;
    let ctx = commands::Context { config, out_dir, timestamp: cli.timestamp };
    match cli.command {
        Command::Channel(a) => commands::channel(ctx, a),
        Command::Capacity(a) => commands::capacity(ctx, a),
        Command::Baseline(a) => commands::baseline(ctx, a),
        Command::Thresholds(a) => commands::thresholds(ctx, a),
        Command::Alloc(a) => commands::alloc(ctx, a),
        Command::Sim(a) => commands::sim(ctx, a),
        Command::Pulse(a) => commands::pulse(ctx, a),
        Command::Constellation(a) => commands::constellation(ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
