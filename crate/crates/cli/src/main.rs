//! `cogmac`: analytic model, sweeps, simulation and validation from the shell.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cogmac_core::analytic::{Axis, Preset};
use cogmac_core::model::{PartialParams, SensingDynamics};
use cogmac_core::sim::{CollisionRule, SensingScope};

use crate::config::PartialSim;

/// Exit codes.
pub const EXIT_SOLVER: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_THRESHOLD: u8 = 3;

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        CliError { code: EXIT_SOLVER, message: message.into() }
    }
}

impl From<cogmac_core::Error> for CliError {
    fn from(e: cogmac_core::Error) -> Self {
        use cogmac_core::Error::*;
        let code = match e {
            NonConvergence { .. } | Matrix(_) => EXIT_SOLVER,
            InvalidParameter { .. } | Domain { .. } | Capacity { .. } | Config { .. } => EXIT_USAGE,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(
    name = "cogmac",
    version,
    about = "Attempt and collision probabilities of CSMA/CA secondary users over sensed primary channels",
    after_help = "Exit codes: 0 success, 1 solver failure, 2 usage or parameter error, \
                  3 validation threshold exceeded.\n\
                  COGMAC_THREADS caps the worker pool."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the attempt/collision fixed point for one scenario.
    Analyze(AnalyzeArgs),
    /// Solve the fixed point along one parameter axis or for a preset figure.
    Sweep(SweepArgs),
    /// Run the slot-level simulator for one scenario.
    Simulate(SimulateArgs),
    /// Compare simulation against the analytic model over a grid.
    Validate(ValidateArgs),
    /// Build the full Markov chain at the fixed point and check the closed form.
    Chain(ChainArgs),
}

/// Scenario parameters; unset flags fall back to `--config`, then defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// `key=value` file with model and simulation keys.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Secondary stations.
    #[arg(long)]
    pub n: Option<u32>,
    /// Minimum contention window.
    #[arg(long = "W", value_name = "W")]
    pub min_window: Option<u32>,
    /// Maximum backoff stage.
    #[arg(long)]
    pub m: Option<u32>,
    /// Sensed primary channels.
    #[arg(long = "C", value_name = "C")]
    pub channels: Option<u32>,
    /// Per-channel primary activity.
    #[arg(long)]
    pub a: Option<f64>,
    /// Detection probability.
    #[arg(long)]
    pub pd: Option<f64>,
    /// Explicit false-alarm probability (otherwise derived from the detector).
    #[arg(long)]
    pub pf: Option<f64>,
    /// Detector SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Sensing time in seconds.
    #[arg(long)]
    pub ts: Option<f64>,
    /// Sampling rate in Hz.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Channel-occupancy dynamics: birth-death or iid.
    #[arg(long)]
    pub dynamics: Option<SensingDynamics>,
}

impl ModelArgs {
    pub fn partial(&self) -> PartialParams {
        PartialParams {
            stations: self.n,
            min_window: self.min_window,
            max_stage: self.m,
            channels: self.channels,
            activity: self.a,
            pd: self.pd,
            pf: self.pf,
            snr_db: self.snr_db,
            ts: self.ts,
            fs: self.fs,
            dynamics: self.dynamics,
        }
    }
}

/// Simulation options; unset flags fall back to `--config`, then defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct SimArgs {
    /// Total slots per run, warm-up included [default: 1000000].
    #[arg(long)]
    pub slots: Option<u64>,
    /// Base RNG seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Warm-up slots discarded before measuring [default: 10000].
    #[arg(long)]
    pub warmup: Option<u64>,
    /// Who shares a sensing outcome: independent, per-station or global.
    #[arg(long)]
    pub sensing_scope: Option<SensingScope>,
    /// Collision rule: any-attempt or same-channel.
    #[arg(long)]
    pub collision_rule: Option<CollisionRule>,
    /// Count a transmission onto an active primary channel as a collision.
    #[arg(long)]
    pub pu_hits_collide: bool,
    /// Batches for the confidence intervals [default: 25].
    #[arg(long)]
    pub batches: Option<usize>,
}

impl SimArgs {
    pub fn partial(&self) -> PartialSim {
        PartialSim {
            slots: self.slots,
            seed: self.seed,
            warmup: self.warmup,
            sensing_scope: self.sensing_scope,
            collision_rule: self.collision_rule,
            pu_hits_collide: self.pu_hits_collide.then_some(true),
            batches: self.batches,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args)]
#[command(after_help = "Presets reproduce the published figure families, named by content:\n  \
    fig3/fig4  attempt/collision vs n, pd in {0.1,0.5,0.9}, W in {32,64}, m=3\n  \
    fig5/fig6  attempt/collision vs n, pd in {0.1,0.5,0.9}, m in {3,5}, W=32\n  \
    fig7/fig8  attempt/collision vs n, C in {1,3,6}, a in {0,0.5,0.8}\n\
    Preset output carries a leading `curve` column; figure pairs share data.")]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Parameter to vary: n, pd, a, C, W or m.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub axis: Option<Axis>,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "preset"], allow_negative_numbers = true)]
    pub values: Vec<f64>,
    /// Range start (inclusive).
    #[arg(long, requires = "to", conflicts_with = "preset")]
    pub from: Option<f64>,
    /// Range end (inclusive).
    #[arg(long, requires = "from")]
    pub to: Option<f64>,
    /// Range step.
    #[arg(long, default_value_t = 1.0, requires = "from")]
    pub step: f64,
    /// Named figure family: fig3 .. fig8.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format [default: json for a .json --out, csv otherwise].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// JSON report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
#[command(after_help = "Thresholds apply to single-channel points only; multi-channel rows are \
    reported with pass `-`.\nPoint k of the grid runs with a seed derived from --seed and k.")]
pub struct ValidateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Validate every point of a figure preset (fig3 .. fig8) instead of a grid.
    #[arg(long, conflicts_with_all = ["n_values", "pd_values", "a_values", "c_values"])]
    pub preset: Option<Preset>,
    /// Station counts to cover.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Vec<u32>,
    /// Detection probabilities to cover.
    #[arg(long, value_delimiter = ',')]
    pub pd_values: Vec<f64>,
    /// Primary activities to cover.
    #[arg(long, value_delimiter = ',')]
    pub a_values: Vec<f64>,
    /// Channel counts to cover.
    #[arg(long = "C-values", value_delimiter = ',')]
    pub c_values: Vec<u32>,
    /// Largest tolerated relative error.
    #[arg(long, default_value_t = cogmac_core::validate::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// CSV report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ChainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Conditional collision probability; the fixed point when absent.
    #[arg(long)]
    pub p_cond: Option<f64>,
    /// Largest state space to build.
    #[arg(long, default_value_t = cogmac_core::chain::DEFAULT_STATE_CAP)]
    pub max_states: usize,
    /// Write the transition matrix in coordinate form.
    #[arg(long, value_name = "FILE")]
    pub dump: Option<PathBuf>,
}

#[cfg(not(feature = "parallel"))]
fn init_threads() -> Result<(), CliError> {
    Ok(())
}

#[cfg(feature = "parallel")]
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("COGMAC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::usage(format!("COGMAC_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot size worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Analyze(args) => commands::analyze(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Validate(args) => commands::validate(&args),
        Command::Chain(args) => commands::chain(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
