//! Command-line runner for the Lagrangian solver and its verification checks.
//!
//! Exit status: 0 success, 1 failed check or other error, 2 configuration
//! error or unknown check, 3 Picard non-convergence, 4 invariant violation.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "lagflow", version, about = "Lagrangian fixed-point solver for flows with added stress")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve by Picard iteration.
    Solve(Common),
    /// Run numerical checks of the operator bounds and solver properties.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Check name, or `all`.
        #[arg(long, default_value = "all")]
        check: String,
    },
    /// Cross-validate against the Eulerian reference solver.
    Compare(Common),
    /// Print an example configuration.
    Example,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the data seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
struct ConfigError(anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn load(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let cfg = RunConfig::load(&common.config)
        .map(|c| c.with_seed(common.seed))
        .map_err(ConfigError)?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| Path::new("out").to_path_buf());
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve(c) => {
            let (cfg, out) = load(&c)?;
            commands::solve(&cfg, &out)?;
            Ok(true)
        }
        Command::Verify { common, check } => {
            let (cfg, out) = load(&common)?;
            commands::verify(&cfg, &out, &check)
        }
        Command::Compare(c) => {
            let (cfg, out) = load(&c)?;
            commands::compare(&cfg, &out)?;
            Ok(true)
        }
        Command::Example => {
            println!("{}", serde_json::to_string_pretty(&RunConfig::example())?);
            Ok(true)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.is::<ConfigError>() || e.is::<commands::UnknownCheck>() {
        return 2;
    }
    match e.downcast_ref::<lagflow::Error>() {
        Some(lagflow::Error::NonConvergence { .. }) => 3,
        Some(lagflow::Error::InvariantViolation { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
