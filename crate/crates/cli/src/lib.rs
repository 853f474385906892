//! Command-line runs that write CSV tables with JSON sidecars.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tongues::farey::Omega;

pub use config::{ConfigFile, FloatList, GridSpec, LabelSpec, Span};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "tongues",
    version,
    about = "Tongue scans, island areas, Farey approximants and mode prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// key = value file; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path stem; `<out>.csv` and `<out>.json` are written
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0: all available)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for sampled inputs
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a grid of (Omega, ktilde) by whether a stable orbit of the label exists
    Scan(ScanArgs),
    /// Locate one periodic orbit
    Orbit(OrbitArgs),
    /// Measure island areas along a ray of fixed tilt
    Island(IslandArgs),
    /// Check the Gauss-sum identities for every coprime label up to --pmax
    Gauss(GaussArgs),
    /// Run the Farey algorithm on one target
    Farey(FareyArgs),
    /// Predict the modes met by an experimental path
    Modes(ModesArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct ScanArgs {
    /// Orbit label `p,m`
    #[arg(long)]
    pub label: Option<LabelSpec>,
    /// `lo,hi` in Omega (default m/p -+ 0.05)
    #[arg(long, allow_hyphen_values = true)]
    pub omega_range: Option<Span>,
    /// `lo,hi` in ktilde (default 0,0.3)
    #[arg(long, allow_hyphen_values = true)]
    pub ktilde_range: Option<Span>,
    /// Cells `NxM` along Omega and ktilde (default 200x200)
    #[arg(long)]
    pub grid: Option<GridSpec>,
    /// Measure the island area in every stable cell
    #[arg(long)]
    pub area: bool,
    /// Newton tolerance
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct OrbitArgs {
    #[arg(long)]
    pub label: Option<LabelSpec>,
    /// Omega as a fraction, decimal, `golden` or `pi-3`
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<Omega>,
    #[arg(long, allow_hyphen_values = true)]
    pub ktilde: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct IslandArgs {
    #[arg(long)]
    pub label: Option<LabelSpec>,
    #[arg(long)]
    pub ktilde: Option<f64>,
    /// Tilts to measure, comma separated
    #[arg(long)]
    pub lambda: Option<FloatList>,
    /// Measure the default tilt sweep 0.05..0.9 and 0.95, 0.98, 0.99
    #[arg(long)]
    pub sweep_lambda: bool,
    /// Initial conditions per axis (default 120)
    #[arg(long)]
    pub grid: Option<usize>,
    /// Period-map iterations per initial condition (default 2000)
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct GaussArgs {
    #[arg(long)]
    pub pmax: Option<u64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct FareyArgs {
    #[arg(long)]
    pub omega: Option<Omega>,
    /// Largest endpoint denominator (default 144)
    #[arg(long)]
    pub pmax: Option<u64>,
    /// Also check the interval properties on this many random targets
    #[arg(long)]
    pub random: Option<usize>,
    /// Steps per random target (default 40)
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct ModesArgs {
    #[arg(long)]
    pub omega: Option<Omega>,
    /// Arm slope |ktilde| / |Omega - omega|; `inf` for a vertical path (default)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Critical-border constant (default 6)
    #[arg(long)]
    pub b: Option<f64>,
    /// Largest period (default 144)
    #[arg(long)]
    pub pmax: Option<u64>,
    /// Physical kick strength k in ktilde = eps k (default 0.8 pi)
    #[arg(long)]
    pub kick: Option<f64>,
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Requested computations that did not complete.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let file = match &cli.common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let threads = file.pick_or(cli.common.threads, "threads", 0)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| commands::dispatch(&cli.command, &cli.common, &file))
}
