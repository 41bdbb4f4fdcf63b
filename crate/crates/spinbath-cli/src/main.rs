//! Command-line runner for the spinbath models.
//!
//! Subcommands:
//! * `run <config.json>`: execute a scenario and emit its CSV outputs.
//! * `verify [config.json]`: run every oracle cross-check; exit 1 on any
//!   failure.
//! * `rates <config.json>`: emit the canonical-rate CSV of a central-spin
//!   scenario (with singular points in a sidecar).
//! * `presets <name>`: run a built-in scenario (`fig1a`..`fig1e`,
//!   `perturbative`); `--list` shows them.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 a runtime singularity left a requested output empty, 4 I/O failure.

mod config;
mod csvout;
mod presets;
mod scenario;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{ModelKind, Scenario, ScenarioConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Parser)]
#[command(
    name = "spinbath",
    version,
    about = "Exact finite-bath qubit dynamics: scenarios, rates, verification"
)]
struct Cli {
    /// Directory for emitted files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the configured Monte Carlo trajectory count.
    #[arg(long, global = true)]
    mc_traj: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config and emit one CSV per output.
    Run { config: PathBuf },
    /// Run all oracle cross-check suites (optionally narrowed by a config).
    Verify {
        config: Option<PathBuf>,
        /// Deliberately corrupt a structured map to demonstrate that the
        /// validators catch it (the run then fails with exit code 1).
        #[arg(long)]
        inject_fault: bool,
    },
    /// Emit the canonical-rate time series of a central-spin scenario.
    Rates { config: PathBuf },
    /// Run a built-in scenario by name.
    Presets {
        name: Option<String>,
        /// List the available presets.
        #[arg(long)]
        list: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("io error: {msg}");
            ExitCode::from(4)
        }
    }
}

fn load_scenario(path: &PathBuf, cli_seed: Option<u64>, cli_mc: Option<usize>) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let mut config = ScenarioConfig::from_json(&text)?;
    if let Some(seed) = cli_seed {
        config.seed = seed;
    }
    if let Some(mc) = cli_mc {
        config.mc_trajectories = mc;
    }
    config.build()
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config } => {
            let scenario = load_scenario(&config, cli.seed, cli.mc_traj)?;
            let report = scenario::run_scenario(&scenario, &cli.out_dir)?;
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            if report.empty_outputs.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for output in &report.empty_outputs {
                    eprintln!(
                        "output '{}' has no regular grid points (all singular)",
                        output.file_stem()
                    );
                }
                Ok(ExitCode::from(3))
            }
        }
        Command::Verify { config, inject_fault } => {
            let scenario = match &config {
                Some(path) => Some(load_scenario(path, cli.seed, cli.mc_traj)?),
                None => None,
            };
            let opts = verify::VerifyOptions {
                seed: cli
                    .seed
                    .or(scenario.as_ref().map(|s| s.config.seed))
                    .unwrap_or(0x5b17_ba7d),
                mc_trajectories: cli
                    .mc_traj
                    .or(scenario.as_ref().map(|s| s.config.mc_trajectories))
                    .unwrap_or(100_000),
                inject_fault,
            };
            let results = verify::run_all(scenario.as_ref(), &opts);
            let mut all_passed = true;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                all_passed &= r.passed;
            }
            Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Rates { config } => {
            let scenario = load_scenario(&config, cli.seed, cli.mc_traj)?;
            if !matches!(scenario.config.model, ModelKind::CentralSpin) {
                return Err(CliError::Config(
                    "model: the rates subcommand requires a central-spin scenario".into(),
                ));
            }
            let mut narrowed = scenario;
            narrowed.config.outputs = vec![config::OutputKind::Rates];
            let report = scenario::run_scenario(&narrowed, &cli.out_dir)?;
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            Ok(if report.empty_outputs.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
        Command::Presets { name, list } => {
            if list || name.is_none() {
                for preset in presets::PRESET_NAMES {
                    println!("{preset}: {}", presets::describe(preset));
                }
                return Ok(ExitCode::SUCCESS);
            }
            let name = name.expect("checked above");
            let empty = presets::run_preset(&name, &cli.out_dir)?;
            println!("preset '{name}' written to {}", cli.out_dir.display());
            Ok(if empty == 0 { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
    }
}
