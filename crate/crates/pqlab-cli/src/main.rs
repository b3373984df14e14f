//! Batch driver: reads a flat key-value configuration, runs one experiment
//! stage, and writes a manifest plus CSV reports into the output directory.
//!
//! Exit codes: 0 success; 2 configuration, argument, or I/O error; 3 when a
//! computation stage rejects its inputs or fails to converge.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, ConfigError};
use output::OutDir;

#[derive(Debug)]
pub enum AppError {
    Config(ConfigError),
    Numerical(String),
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(e) => write!(f, "{e}"),
            AppError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<pqlab::Error> for AppError {
    fn from(e: pqlab::Error) -> Self {
        AppError::Numerical(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "pqlab", version, about = "Concentration, level, and identity experiments for a critical quasilinear Dirichlet problem on the ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file (flat key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for the manifest and CSV reports.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Random seed; overrides the `seed` key of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel stages (default: all cores). Outputs are
    /// identical for any thread count.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Existence raster over a (q, s) grid.
    Classify,
    /// Concentration-family integrals and fitted decay rates.
    BubbleRates,
    /// Ray level estimates along a concentration schedule.
    LevelSweep,
    /// Least Rayleigh quotient of the m-gradient on the ball.
    Eigen,
    /// Embedding constant via two independent estimators.
    Sobolev,
    /// Identity residuals for a manufactured solution.
    Pohozaev,
    /// Borderline descent experiment over a mu grid.
    NonexistScan,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::BubbleRates => "bubble-rates",
            Command::LevelSweep => "level-sweep",
            Command::Eigen => "eigen",
            Command::Sobolev => "sobolev",
            Command::Pohozaev => "pohozaev",
            Command::NonexistScan => "nonexist-scan",
        }
    }
}

fn run(cli: &Cli) -> Result<(), AppError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(AppError::Config(ConfigError("--jobs must be >= 1".into())));
        }
        // a second build_global in one process is harmless for determinism;
        // results never depend on the pool shape
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let config_path = cli.config.as_ref().ok_or_else(|| {
        AppError::Config(ConfigError("--config <file> is required".into()))
    })?;
    let cfg = Config::load(config_path).map_err(AppError::Config)?;
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.u64_or("seed", 0).map_err(AppError::Config)?,
    };
    let out = OutDir::create(&cli.out).map_err(AppError::Config)?;

    match cli.command {
        Command::Classify => commands::classify(&cfg, &out),
        Command::BubbleRates => commands::bubble_rates(&cfg, &out),
        Command::LevelSweep => commands::level_sweep(&cfg, &out),
        Command::Eigen => commands::eigen(&cfg, &out),
        Command::Sobolev => commands::sobolev(&cfg, &out),
        Command::Pohozaev => commands::pohozaev(&cfg, &out),
        Command::NonexistScan => commands::nonexist_scan(&cfg, &out, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pqlab {}: {e}", cli.command.name());
            match e {
                AppError::Config(_) => ExitCode::from(2),
                AppError::Numerical(_) => ExitCode::from(3),
            }
        }
    }
}
