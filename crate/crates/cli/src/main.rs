//! `jrsp` — command-line driver for the jrsp-core simulator.
//!
//! Five subcommands cover the workflow end to end:
//!
//! * `verify`  — run the invariant suite on the default target plus a batch
//!   of seeded random targets; exit 2 if anything is violated.
//! * `run`     — simulate all 64 joint measurement outcomes for one target
//!   and emit the outcome table with corrections as JSON.
//! * `sweep`   — tabulate analytic vs numeric fidelity over a damping-rate
//!   grid, written as CSV or JSON.
//! * `compare` — per-model fidelity cross-validation reports, with an
//!   optional three-model ordering check.
//! * `fig2`    — the (α₁, η) analytic fidelity surface for one damping
//!   family.
//!
//! Exit codes: 0 on success, 1 for input or validation problems, 2 when a
//! numerical invariant or mandated tolerance is violated.

mod commands;
mod config;
mod format;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jrsp_core::NoiseKind;

use crate::config::OutputFormat;

/// Error carrying the exit-code class alongside the message.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: malformed flags, unreadable config, invalid target,
    /// unwritable output path. Exit code 1.
    Input(String),
    /// A numerical invariant or mandated tolerance failed. Exit code 2.
    Violation(String),
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input(message.into())
    }

    pub fn violation(message: impl Into<String>) -> Self {
        CliError::Violation(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Violation(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(message) | CliError::Violation(message) => f.write_str(message),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "jrsp",
    version,
    about = "Joint remote preparation of three-qubit states over GHZ channels: \
             simulation, verification, and fidelity analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check protocol and channel invariants on random targets
    Verify(VerifyArgs),
    /// Simulate all 64 joint outcomes for one target state (JSON)
    Run(RunArgs),
    /// Tabulate analytic vs numeric fidelity over a damping-rate grid
    Sweep(SweepArgs),
    /// Cross-validate closed-form fidelities against the density-matrix
    /// pipeline
    Compare(CompareArgs),
    /// Emit the analytic fidelity surface over (alpha1, eta) for one
    /// damping family
    Fig2(Fig2Args),
}

/// Flags shared by every subcommand that needs a target state.
#[derive(Args, Debug, Clone)]
pub(crate) struct TargetArgs {
    /// Eight comma-separated target amplitudes (default: drawn from the
    /// seed)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub(crate) alphas: Option<Vec<f64>>,

    /// Eight comma-separated target phases in radians (default: zeros
    /// with explicit --alphas, random otherwise)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub(crate) phis: Option<Vec<f64>>,

    /// JSON config file; explicit flags override its fields
    #[arg(long, value_name = "PATH")]
    pub(crate) config: Option<PathBuf>,

    /// Accept amplitudes whose squared sum differs from 1
    #[arg(long)]
    pub(crate) allow_unnormalized: bool,
}

#[derive(Args)]
pub(crate) struct VerifyArgs {
    /// Number of random targets to check in addition to the default
    #[arg(long, default_value_t = 200)]
    pub(crate) trials: usize,

    /// RNG seed (falls back to $JRSP_SEED, then 42)
    #[arg(long)]
    pub(crate) seed: Option<u64>,

    /// Corrupt one basis sign before verifying (mutation hook for tests)
    #[arg(long, hide = true)]
    pub(crate) corrupt_sign: bool,
}

#[derive(Args)]
pub(crate) struct RunArgs {
    #[command(flatten)]
    pub(crate) target: TargetArgs,

    /// RNG seed for the random target (falls back to $JRSP_SEED, then 42)
    #[arg(long)]
    pub(crate) seed: Option<u64>,

    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args)]
pub(crate) struct SweepArgs {
    /// Noise model: ad, pd, or dp
    #[arg(long, value_parser = parse_noise_kind)]
    pub(crate) model: Option<NoiseKind>,

    /// First damping rate (default 0)
    #[arg(long, allow_negative_numbers = true)]
    pub(crate) eta_start: Option<f64>,

    /// Last damping rate (default 1)
    #[arg(long)]
    pub(crate) eta_end: Option<f64>,

    /// Grid spacing (default 0.05)
    #[arg(long)]
    pub(crate) eta_step: Option<f64>,

    /// Output file path
    #[arg(long, value_name = "PATH")]
    pub(crate) out: Option<PathBuf>,

    /// Output encoding (default csv)
    #[arg(long, value_enum)]
    pub(crate) format: Option<OutputFormat>,

    /// RNG seed for the random target (falls back to $JRSP_SEED, then 42)
    #[arg(long)]
    pub(crate) seed: Option<u64>,

    #[command(flatten)]
    pub(crate) target: TargetArgs,
}

#[derive(Args)]
pub(crate) struct CompareArgs {
    /// Noise model: ad, pd, or dp
    #[arg(long, value_parser = parse_noise_kind, conflicts_with = "all")]
    pub(crate) model: Option<NoiseKind>,

    /// Compare all three models and check the dp-vs-pd ordering
    #[arg(long)]
    pub(crate) all: bool,

    /// First damping rate (default 0)
    #[arg(long, allow_negative_numbers = true)]
    pub(crate) eta_start: Option<f64>,

    /// Last damping rate (default 1)
    #[arg(long)]
    pub(crate) eta_end: Option<f64>,

    /// Grid spacing (default 0.05)
    #[arg(long)]
    pub(crate) eta_step: Option<f64>,

    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub(crate) out: Option<PathBuf>,

    /// RNG seed for the random target (falls back to $JRSP_SEED, then 42)
    #[arg(long)]
    pub(crate) seed: Option<u64>,

    #[command(flatten)]
    pub(crate) target: TargetArgs,
}

#[derive(Args)]
pub(crate) struct Fig2Args {
    /// Damping family for the surface: ad or pd
    #[arg(long, value_parser = parse_noise_kind)]
    pub(crate) model: Option<NoiseKind>,

    /// Output file path
    #[arg(long, value_name = "PATH")]
    pub(crate) out: Option<PathBuf>,

    /// Output encoding (default csv)
    #[arg(long, value_enum)]
    pub(crate) format: Option<OutputFormat>,

    /// JSON config file; explicit flags override its fields
    #[arg(long, value_name = "PATH")]
    pub(crate) config: Option<PathBuf>,
}

fn parse_noise_kind(text: &str) -> Result<NoiseKind, String> {
    text.parse()
}

/// Seed precedence: explicit flag, then $JRSP_SEED, then 42.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("JRSP_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| {
            CliError::input(format!(
                "JRSP_SEED must be an unsigned 64-bit integer, got '{text}'"
            ))
        }),
        Err(_) => Ok(42),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Verify(args) => commands::cmd_verify(args),
        Command::Run(args) => commands::cmd_run(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
        Command::Compare(args) => commands::cmd_compare(args),
        Command::Fig2(args) => commands::cmd_fig2(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
