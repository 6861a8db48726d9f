//! `drmean`: simulation, estimation, sensitivity and density commands.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Failure categories, each mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 3.
    Data(String),
    /// Exit code 1.
    Other(anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "drmean", version, about = "Doubly-robust estimation of a mean with missing outcomes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Monte Carlo grid and write results.csv, draws.csv and metadata.json.
    Simulate {
        /// JSON run configuration; defaults reproduce the benchmark grid.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; does not affect the output.
        #[arg(long)]
        workers: Option<usize>,
        /// Analyse 1 - T as the response indicator.
        #[arg(long)]
        reverse: bool,
    },
    /// Point estimates for one dataset, as JSON.
    Estimate {
        /// Dataset CSV with columns t, y and numeric covariates.
        #[arg(long)]
        data: PathBuf,
        /// JSON model configuration; defaults use every covariate.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Matrix of DR estimates over working models, with homogeneity tests.
    Sensitivity {
        #[arg(long)]
        data: PathBuf,
        /// JSON list of propensity and outcome models.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Threads for the bootstrap; does not affect the output.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Gaussian kernel density of one column of a CSV.
    Density {
        /// CSV holding the values, e.g. draws.csv from `simulate`.
        #[arg(long)]
        data: PathBuf,
        /// Column to read.
        #[arg(long, default_value = "value")]
        column: String,
        /// Keep rows where COLUMN equals VALUE; repeatable.
        #[arg(long, value_name = "COLUMN=VALUE")]
        filter: Vec<String>,
        /// `auto` (Silverman) or a positive number.
        #[arg(long, default_value = "auto")]
        bandwidth: String,
        /// Drop values outside the [q, 1 - q] quantile range first.
        #[arg(long)]
        clip_quantile: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one simulated dataset as CSV (t, y, z1..z4, x1..x4).
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Swap respondents and nonrespondents.
        #[arg(long)]
        reverse: bool,
        /// JSON data-generating overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            workers,
            reverse,
        } => commands::simulate(config.as_deref(), out, workers, reverse),
        Command::Estimate { data, config, out } => commands::estimate(&data, config.as_deref(), out.as_deref()),
        Command::Sensitivity {
            data,
            config,
            out,
            workers,
        } => commands::sensitivity(&data, &config, out.as_deref(), workers),
        Command::Density {
            data,
            column,
            filter,
            bandwidth,
            clip_quantile,
            out,
        } => commands::density(&data, &column, &filter, &bandwidth, clip_quantile, out.as_deref()),
        Command::Generate {
            n,
            seed,
            reverse,
            config,
            out,
        } => commands::generate(n, seed, reverse, config.as_deref(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("drmean: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
