//! `meanfield-lab`: run the mean-field numerics from a JSON configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use meanfield_core::{Error, ErrorKind, Result};

use config::{missing, RunConfig};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  invalid configuration, model or input file contents
  3  numerical precondition violated
  4  file could not be read or written
  5  internal error

On failure a JSON object {\"error\", \"kind\", \"message\"} is written to stderr.";

#[derive(Debug, Parser)]
#[command(name = "meanfield-lab", version, about = "Mean-field spin model numerics", after_help = EXIT_CODES)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for sampling; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fixed points, their classification and the pressure limit (JSON).
    Solve,
    /// Finite-size pressure along a size ladder with bounds (CSV).
    Pressure,
    /// Exact draws of the per-species spin sums (CSV).
    Sample,
    /// Limit laws and their distance to the exact finite-size laws (JSON).
    Limits,
    /// Couplings and fields estimated from a sample file (JSON).
    Invert {
        /// Sample file written by `sample`.
        samples: PathBuf,
        /// Keep only rows in the ball `c_1,...,c_n,radius`.
        #[arg(long, allow_hyphen_values = true)]
        ball: Option<String>,
    },
    /// Curie-Weiss scan over the coupling grid (CSV).
    Phase,
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidOptions(e.to_string()))?;
    }
    let cfg = RunConfig::read(cli.config.as_deref().ok_or_else(|| missing("--config"))?)?;
    let output = match &cli.command {
        Command::Solve => commands::solve(&cfg)?,
        Command::Pressure => commands::pressure(&cfg)?,
        Command::Sample => commands::sample(&cfg, cli.seed)?,
        Command::Limits => commands::limits(&cfg)?,
        Command::Invert { samples, ball } => commands::invert(&cfg, samples, ball.as_deref())?,
        Command::Phase => commands::phase(&cfg)?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, output)?,
        None => print!("{output}"),
    }
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Numeric => 3,
        ErrorKind::Io => 4,
        ErrorKind::Internal => 5,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Config => "config",
        ErrorKind::Numeric => "numeric",
        ErrorKind::Io => "io",
        ErrorKind::Internal => "internal",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({
                "error": e.code(),
                "kind": kind_name(e.kind()),
                "message": e.to_string(),
            });
            eprintln!("{report}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
