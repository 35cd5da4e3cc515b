//! `secp`: batch driver for clean-speech curation.

mod commands;
mod corpus;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use secp_core::curation::{ConfigError, CurationError};

/// Curate clean speech from audio corpora.
#[derive(Debug, Parser)]
#[command(name = "secp", version, about)]
struct Cli {
    /// Worker threads for file-level parallelism (default: logical CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Curate a corpus and append accepted segments to a manifest.
    Curate(CurateArgs),
    /// Generate a synthetic clean/noisy corpus.
    Synth(SynthArgs),
    /// Score an enhancer on clean/noisy pairs.
    Eval(EvalArgs),
    /// Summarize curated hours and frame-score histograms across rounds.
    Report(ReportArgs),
    /// Write unprocessed/enhanced WAV pairs for listening tests.
    ExportAb(ExportArgs),
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    /// JSON or TOML curation config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory of WAV files or a glob pattern.
    #[arg(long)]
    pub corpus: String,
    /// Manifest to append to.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Round id recorded in the manifest; overrides the config value.
    #[arg(long)]
    pub round: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives clean/, noisy/ and metadata.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Seconds per file.
    #[arg(long, default_value_t = 24.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// white, pink or babble.
    #[arg(long, default_value = "white")]
    pub noise: String,
    /// Rayleigh scale of the drawn SNR, in dB.
    #[arg(long, default_value_t = 15.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub snr_min: f64,
    #[arg(long, default_value_t = 60.0)]
    pub snr_max: f64,
    #[arg(long, default_value_t = 48_000)]
    pub sample_rate: u32,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Config whose enhancer is evaluated; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding clean/ and noisy/ subdirectories.
    #[arg(long)]
    pub corpus: PathBuf,
    /// `segmental_snr` or `external:<command with {reference} {degraded}>`.
    #[arg(long, default_value = "segmental_snr")]
    pub metric: String,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// One or more manifests.
    #[arg(long, required = true, num_args = 1..)]
    pub manifest: Vec<PathBuf>,
    /// Output directory for report.json and report.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Config naming the enhancer that produced the manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep segments whose every frame scores at least this (dB).
    #[arg(long, allow_hyphen_values = true)]
    pub min_rho: Option<f64>,
    /// Keep segments whose every frame scores at most this (dB).
    #[arg(long, allow_hyphen_values = true)]
    pub max_rho: Option<f64>,
}

/// Failures with a dedicated exit status.
#[derive(Debug)]
pub enum Exit {
    Config(String),
    EmptyCorpus(String),
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exit::Config(m) => write!(f, "config error: {m}"),
            Exit::EmptyCorpus(m) => write!(f, "no input files: {m}"),
        }
    }
}

impl std::error::Error for Exit {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Exit>() {
            return match e {
                Exit::Config(_) => 2,
                Exit::EmptyCorpus(_) => 3,
            };
        }
        if cause.downcast_ref::<ConfigError>().is_some()
            || matches!(cause.downcast_ref::<CurationError>(), Some(CurationError::Config(_)))
        {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SECP_LOG", "info")).init();
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }

    let result = match cli.command {
        Command::Curate(a) => commands::curate::run(a),
        Command::Synth(a) => commands::synth::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Report(a) => commands::report::run(a),
        Command::ExportAb(a) => commands::export::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
