//! Command-line front end for `eivreg`.
//!
//! Exit codes: 0 on success, 2 for malformed input (parse errors, dimension
//! mismatches, invalid parameters), 3 for numerical failures.

pub mod commands;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<eivreg::Error> for CliError {
    fn from(e: eivreg::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "eivreg",
    version,
    about = "Minimum-risk solutions of noisy linear systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve R x = y for one observed system.
    Solve(SolveArgs),
    /// Theoretical risk of each filter on a pooled spectrum.
    Risk(RiskArgs),
    /// Monte Carlo risk of each filter against theory.
    Mc(McArgs),
    /// Pool eigenvalues of RᵀR over sampled matrices.
    Spectrum(SpectrumArgs),
    /// Risk table over a grid of models, from a JSON config.
    Sweep(SweepArgs),
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// Coefficient matrix (CSV, or JSON with rows/cols/data).
    #[arg(long)]
    pub matrix: PathBuf,
    /// Right-hand side (CSV column or row, or JSON).
    #[arg(long)]
    pub rhs: PathBuf,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    /// standard | optimal | tikhonov[:t] | confluent:lambda
    #[arg(long, default_value = "optimal")]
    pub method: String,
    /// Write the solution here; otherwise it goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct McArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long = "n")]
    pub n: usize,
    #[arg(long = "N")]
    pub big_n: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated filter list.
    #[arg(long, default_value = "optimal,tikhonov,standard")]
    pub filters: String,
    /// Matrices pooled for the theoretical spectrum.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct RiskArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long = "n")]
    pub n: usize,
    #[arg(long = "N")]
    pub big_n: usize,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated filter list.
    #[arg(long, default_value = "optimal,tikhonov,standard")]
    pub filters: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long = "n")]
    pub n: usize,
    #[arg(long = "N")]
    pub big_n: usize,
    #[arg(long)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
