//! `aniso`: runs the particle and mean-field simulators and evaluates
//! diagnostics on their output files.
//!
//! Exit codes: 0 ok, 2 configuration or format error, 3 numerical abort,
//! 4 CFL violation in the mean-field velocity step.

mod diagnose;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use aniso_core::scenario::ScenarioKind;
use aniso_core::{ConfigError, FormatError, MeanFieldError, ParticleError, ScenarioConfig};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "aniso", version, about = "Anisotropic crowd simulators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Agent-based simulation.
    Particle(RunArgs),
    /// Phase-space density simulation.
    Meanfield(RunArgs),
    /// Agent-based simulation of the obstacle preset.
    ObstacleDemo(RunArgs),
    /// Evaluate a metric on saved output.
    Diagnose {
        #[command(subcommand)]
        metric: diagnose::Metric,
    },
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset used when no config file is given.
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Option<ScenarioKind>,
    /// Output directory. Takes precedence over `ANISO_OUT` and the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Particle runs only: repeat the run for each repulsion range `r` and
    /// tabulate the final lane metrics instead of writing snapshots.
    #[arg(long, value_delimiter = ',')]
    pub sweep_r: Vec<f64>,
}

pub fn parse_scenario(s: &str) -> Result<ScenarioKind, String> {
    ScenarioKind::parse(s).ok_or_else(|| format!("unknown scenario `{s}`"))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("aborted at step {step}: {source}")]
    Particle {
        step: u64,
        #[source]
        source: ParticleError,
    },
    #[error("aborted at step {step}: {source}")]
    MeanField {
        step: u64,
        #[source]
        source: MeanFieldError,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Particle {
                source: ParticleError::BadTimeStep(_),
                ..
            } => 2,
            CliError::Particle { .. } => 3,
            CliError::MeanField {
                source: MeanFieldError::Cfl { .. },
                ..
            } => 4,
            CliError::MeanField {
                source: MeanFieldError::NonFinite,
                ..
            } => 3,
            CliError::MeanField { .. } => 2,
            CliError::Config(_) | CliError::Format(_) | CliError::Io { .. } | CliError::Usage(_) => 2,
        }
    }
}

/// Loads the config (file, else preset, else `default`) and applies the
/// seed override.
pub fn resolve_config(args: &RunArgs, default: ScenarioKind) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match (&args.config, args.scenario) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, kind) => ScenarioConfig::preset(kind.unwrap_or(default)),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `--out`, then `ANISO_OUT`, then the config value.
pub fn resolve_out_dir(args: &RunArgs, cfg: &ScenarioConfig) -> PathBuf {
    if let Some(p) = &args.out {
        return p.clone();
    }
    match std::env::var_os("ANISO_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(&cfg.output_dir),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Particle(args) => run::particle(&args, ScenarioKind::Channel),
        Command::ObstacleDemo(args) => run::particle(&args, ScenarioKind::Obstacle),
        Command::Meanfield(args) => run::meanfield(&args),
        Command::Diagnose { metric } => diagnose::run(metric),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
