//! `nef` — fitting, simulation and diagnostics for normal
//! exponential-family mixture laws.
//!
//! Subcommands: `fit`, `mc-study`, `sums-demo`, `stability-check`,
//! `density`, `sample`. Exit codes: 0 success, 2 input/configuration
//! error, 3 numerical failure with partial output.

mod commands;
mod ingest;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use nef_core::MixingFamily;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration; exit code 2.
    Input(String),
    /// A numerical routine failed after partial output was produced;
    /// exit code 3.
    Numeric(String),
}

pub const DEFAULT_SEED: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Gamma latent: normal-gamma law, negative binomial counts.
    Gamma,
    /// Inverse-Gaussian latent: NIG law, Poisson inverse-Gaussian counts.
    Ig,
}

impl From<Family> for MixingFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Gamma => MixingFamily::Gamma,
            Family::Ig => MixingFamily::InverseGaussian,
        }
    }
}

#[derive(Parser)]
#[command(name = "nef", version, about = "Normal exponential-family mixture laws: fit, simulate, check")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a NEF law to a one-column CSV of returns (or prices).
    Fit(FitArgs),
    /// Monte Carlo estimator study: sample, moment-init, EM, Louis SEs.
    McStudy(McStudyArgs),
    /// Normalized mixed-Poisson sums along a lambda sweep, with KS table.
    SumsDemo(SumsDemoArgs),
    /// Stable-composition vs direct characteristic function on a t-grid.
    StabilityCheck(StabilityArgs),
    /// Tabulate the density on a grid.
    Density(DensityArgs),
    /// Draw samples from a NEF law.
    Sample(SampleArgs),
}

#[derive(clap::Args)]
pub struct FitArgs {
    /// One-column CSV input.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    family: Family,
    /// Input rows are prices; convert to log-returns first.
    #[arg(long, conflicts_with = "returns")]
    prices: bool,
    /// Input rows are returns (the default).
    #[arg(long)]
    returns: bool,
    /// Master seed (recorded in all artifacts; drives the QQ Monte Carlo).
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the JSON report here (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write histogram-bin and QQ-pair CSVs next to --out.
    #[arg(long, requires = "out")]
    plots: bool,
    /// EM convergence threshold.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

#[derive(clap::Args)]
pub struct McStudyArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    sigma2: f64,
    #[arg(long)]
    phi: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    replicas: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Write the summary JSON here (plus a per-replica CSV sibling).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SumsDemoArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Comma-separated rate sweep, e.g. 30,50,500.
    #[arg(long, default_value = "30,50,500")]
    lambdas: String,
    #[arg(long, default_value_t = 2.0)]
    phi: f64,
    /// Summand law: exp:MEAN or normal:MU,SIGMA2.
    #[arg(long, default_value = "exp:1")]
    summand: String,
    #[arg(long, default_value_t = 500)]
    replicas: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Stem for sample/histogram/density CSVs; without it only the KS
    /// table is emitted (stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Histogram bin count.
    #[arg(long, default_value_t = 40)]
    bins: usize,
}

#[derive(clap::Args)]
pub struct StabilityArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    phi: f64,
    /// Stable input: normal:MU,SIGMA2 or sas:C,ALPHA.
    #[arg(long)]
    stable: String,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    tmin: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    tmax: f64,
    #[arg(long, default_value_t = 401)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the per-point CSV here (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a JSON summary (max error) to stdout.
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
pub struct DensityArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long)]
    sigma2: f64,
    #[arg(long)]
    phi: f64,
    /// Grid bounds; default mu +- 40 sqrt(k2).
    #[arg(long, allow_hyphen_values = true)]
    ymin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ymax: Option<f64>,
    #[arg(long, default_value_t = 4001)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long)]
    sigma2: f64,
    #[arg(long)]
    phi: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Fit(args) => commands::fit(&args),
        Cmd::McStudy(args) => commands::mc_study(&args),
        Cmd::SumsDemo(args) => commands::sums_demo(&args),
        Cmd::StabilityCheck(args) => commands::stability_check(&args),
        Cmd::Density(args) => commands::density(&args),
        Cmd::Sample(args) => commands::sample(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
