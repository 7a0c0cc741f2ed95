//! `fprw`: return-probability asymptotics for random walks on free products.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(fprw::Error),
    #[error("phase diagrams are defined for two factors only; the config has {0}")]
    PhaseNeedsTwo(usize),
    #[error("{0}")]
    Io(String),
}

impl From<fprw::Error> for CliError {
    fn from(e: fprw::Error) -> Self {
        match e {
            fprw::Error::InvalidSpec(_)
            | fprw::Error::TargetOutOfRange { .. }
            | fprw::Error::InvalidSingularity { .. } => CliError::Config(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{what}: {m}")),
            other => other,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::PhaseNeedsTwo(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "fprw",
    version,
    about = "Return-probability asymptotics and phase diagrams for random walks on free products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON description of the free product
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Series truncation order
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Number of grid points in the phase sweep
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Steps per simulated walk
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Number of simulated walks
    #[arg(long, global = true)]
    walks: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-factor analytics, spectral radius and asymptotic law (JSON)
    Analyze,
    /// Exact return probabilities up to --order (CSV by default)
    Series,
    /// Phase diagram in the first mixing weight (two factors)
    Phase,
    /// Monte Carlo return frequencies against the exact values
    Simulate,
    /// Run the acceptance suite
    Selftest,
}

const DEFAULT_ORDER: usize = fprw::series::DEFAULT_ORDER;
const DEFAULT_GRID: usize = fprw::phase::DEFAULT_GRID;
const DEFAULT_STEPS: usize = 12;
const DEFAULT_WALKS: u64 = 100_000;

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FPRW_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n >= 1).ok_or_else(|| {
        CliError::Config(format!(
            "FPRW_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("FPRW_THREADS: {e}")))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    init_threads()?;
    if let Command::Selftest = cli.command {
        let (text, ok) = commands::selftest(cli.format);
        emit(&cli.out, &text)?;
        return Ok(ok);
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let config = Config::load(path)?;
    let (spec, warnings) = config.product()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let o = &config.options;
    let order = cli.order.or(o.order).unwrap_or(DEFAULT_ORDER);
    let text = match cli.command {
        Command::Analyze => commands::analyze(&spec, warnings, cli.format.unwrap_or(Format::Json))?,
        Command::Series => commands::series(&spec, order, cli.format.unwrap_or(Format::Csv))?,
        Command::Phase => {
            let grid = cli.grid.or(o.grid).unwrap_or(DEFAULT_GRID);
            commands::phase(&spec, grid, cli.format.unwrap_or(Format::Csv))?
        }
        Command::Simulate => commands::simulate_cmd(
            &spec,
            cli.steps.or(o.steps).unwrap_or(DEFAULT_STEPS),
            cli.walks.or(o.walks).unwrap_or(DEFAULT_WALKS),
            cli.seed.or(o.seed).unwrap_or(0),
            cli.format.unwrap_or(Format::Csv),
        )?,
        Command::Selftest => unreachable!(),
    };
    emit(&cli.out, &text)?;
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
