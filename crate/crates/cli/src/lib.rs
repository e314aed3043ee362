//! Command-line driver for the quantum battery models in `qbsim-core`:
//! configuration, experiment commands, parallel sweeps and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Command, Model, RunConfig};
pub use error::{CliError, Result};
pub use output::{Cell, Table};

#[derive(Debug, Parser)]
#[command(name = "qbsim", version, about = "Driven-dissipative quantum battery simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Time evolution from the ground state
    Evolve(RunArgs),
    /// Steady states, optionally over a parameter grid
    Steady(RunArgs),
    /// Liouvillian eigenvalues of the collective model
    Spectrum(RunArgs),
    /// Mean-field magnetization dynamics
    Meanfield(RunArgs),
    /// Mean-field dynamical phases over (omega, g)
    PhaseDiagram(RunArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps (0: one per core)
    #[arg(long, env = "QBSIM_JOBS", default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub overrides: config::Overrides,
}

impl Cmd {
    fn parts(&self) -> (Command, &RunArgs) {
        match self {
            Cmd::Evolve(a) => (Command::Evolve, a),
            Cmd::Steady(a) => (Command::Steady, a),
            Cmd::Spectrum(a) => (Command::Spectrum, a),
            Cmd::Meanfield(a) => (Command::Meanfield, a),
            Cmd::PhaseDiagram(a) => (Command::PhaseDiagram, a),
        }
    }
}

/// Load, override and resolve the configuration for one invocation.
pub fn resolve_config(cmd: Command, args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&args.overrides);
    cfg.resolve(cmd)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let (cmd, args) = cli.command.parts();
    let cfg = resolve_config(cmd, args)?;
    let table = commands::run(cmd, &cfg, args.jobs)?;
    output::emit(cmd, &cfg, &table)
}
