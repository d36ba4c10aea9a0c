//! `cosserat`: batch front end for strain, compatibility, elastostatics and
//! verification runs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cosserat_core::verify::Level;
use thiserror::Error;

use crate::commands::Context;
use crate::config::Loaded;
use crate::output::Output;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cosserat", version, about = "Geometric micropolar mechanics on tensor-product grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for fields, reports and the manifest.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads; 1 gives bitwise reproducible output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = Level::Quick)]
    level: Level,
    /// Seed for the randomised property suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Finite or infinitesimal strain of a configuration or displacement.
    Strain,
    /// Incompatibility densities and Burgers circuits.
    Compat,
    /// Linear elastostatics with Dirichlet boundary data.
    Solve,
    /// Property and convergence suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Strain => "strain",
            Command::Compat => "compat",
            Command::Solve => "solve",
            Command::Verify => "verify",
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    if cli.command.name() != "verify" && cli.config.is_none() {
        return Err(CliError::Config(format!("{} needs --config", cli.command.name())));
    }
    let loaded = Loaded::read(cli.config.as_deref())?;
    let dir = cli.output_dir.clone().or_else(|| loaded.config.output_dir.as_ref().map(|p| loaded.resolve(p)));
    let mut out = Output::new(&dir.unwrap_or_else(|| PathBuf::from("output")));
    if let Some(path) = &loaded.source {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        out.input(&name, &loaded.bytes);
    }
    let mut ctx = Context { loaded, level: cli.level, seed: cli.seed, out };
    let passed = match cli.command {
        Command::Strain => commands::cmd_strain(&mut ctx).map(|_| true)?,
        Command::Compat => commands::cmd_compat(&mut ctx).map(|_| true)?,
        Command::Solve => commands::cmd_solve(&mut ctx).map(|_| true)?,
        Command::Verify => commands::cmd_verify(&mut ctx)?,
    };
    let manifest = ctx.out.finish(cli.command.name(), &cli.level.to_string(), cli.seed)?;
    log::info!("wrote {}", manifest.display());
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
