//! Command-line driver: configuration loading, the subcommands and CSV
//! emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use commands::Mode;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tmfa", version, about = "Time-modulated nonreciprocal filtering antenna simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Restrict to the modulated state.
    #[arg(long, global = true, conflicts_with = "static_state")]
    pub modulated: bool,
    /// Restrict to the static state.
    #[arg(long = "static", global = true)]
    pub static_state: bool,
    /// Seed for the random restarts of `optimize` (overrides `optimizer.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Synthesize and tune the ladder at the reference impedance.
    Synth,
    /// Scattering-parameter sweep of the tuned ladder.
    Sweep,
    /// Radiation pattern, antenna impedance and principal-plane cuts.
    Pattern,
    /// Reference, static and modulated boresight curves.
    Boresight,
    /// Search the modulation frequency, index and phase step.
    Optimize,
    /// Compare harmonic balance with time-domain integration.
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Sweep => "sweep",
            Command::Pattern => "pattern",
            Command::Boresight => "boresight",
            Command::Optimize => "optimize",
            Command::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub written: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Validation(format!("reading {}: {e}", p.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = cli.seed {
        cfg.optimizer.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command end to end. Files are written only when every
/// computation succeeded; gate failures (exit 5 and 6) still write their
/// complete results before reporting.
pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let cfg = resolve_config(cli)?;
    let toml = cfg.to_toml();
    let mode = match (cli.modulated, cli.static_state) {
        (true, _) => Mode::Modulated,
        (_, true) => Mode::Static,
        _ => Mode::Both,
    };
    let outcome = match cli.command {
        Command::Synth => commands::synth(&cfg, &toml)?,
        Command::Sweep => commands::sweep(&cfg, &toml, mode)?,
        Command::Pattern => commands::pattern(&cfg, &toml, mode)?,
        Command::Boresight => commands::boresight(&cfg, &toml)?,
        Command::Optimize => commands::optimize(&cfg, &toml)?,
        Command::OracleCheck => commands::oracle_check(&cfg, &toml, mode)?,
    };
    let written = output::write_all(Path::new(&cfg.output.dir), &outcome.files)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(RunReport {
            written,
            summary: outcome.summary,
        }),
    }
}

/// Applies `TMFA_THREADS` to the global thread pool.
pub fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("TMFA_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Validation(format!("TMFA_THREADS must be a positive integer (got \"{v}\")")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    Ok(())
}
