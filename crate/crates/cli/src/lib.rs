//! Batch runs over the vortexlab library: each subcommand reads a JSON run
//! config and writes CSV/JSON results plus a `metadata.json` with timings.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

use config::RunConfig;
use output::OutDir;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{module}: {source}")]
    Numeric { module: &'static str, source: vortexlab::Error },
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vortexlab", version, about = "Vortex energies and Ginzburg–Landau minimizers on surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides "out" in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// RNG seed (overrides "seed" in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// W closed form, quadrature convergence and W̃.
    Renorm,
    /// Minimize W over vortex positions from random starts.
    MinimizeW,
    /// GL minimization along the ε list.
    Gl,
    /// Radial profiles and the core constant ι.
    Profile,
    /// Ball construction on a field checkpoint.
    Detect,
    /// Compare GL minimizer energies with the renormalized expansion.
    ValidateExpansion,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Renorm => "renorm",
            Command::MinimizeW => "minimize-w",
            Command::Gl => "gl",
            Command::Profile => "profile",
            Command::Detect => "detect",
            Command::ValidateExpansion => "validate-expansion",
        }
    }
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut loaded = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        loaded.config.seed = Some(seed);
    }
    let threads = cli.threads.unwrap_or(1).max(1);
    // the global pool can only be set once per process
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        log::debug!("thread pool already initialized: {e}");
    }
    let mut out = OutDir::create(&commands::resolve_out(cli.out.as_deref(), &loaded)?)?;
    let started = unix_seconds();
    let clock = Instant::now();
    log::info!("{} with config {}", cli.command.name(), path.display());
    match cli.command {
        Command::Renorm => commands::renorm(&loaded, &mut out)?,
        Command::MinimizeW => commands::minimize_w(&loaded, &mut out)?,
        Command::Gl => commands::gl(&loaded, &mut out)?,
        Command::Profile => commands::profile(&loaded, &mut out)?,
        Command::Detect => commands::detect(&loaded, &mut out)?,
        Command::ValidateExpansion => commands::validate_expansion(&loaded, &mut out)?,
    }
    let outputs: Vec<String> =
        out.written.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    let meta = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "threads": threads,
        "seed": loaded.config.seed,
        "started_unix": started,
        "finished_unix": unix_seconds(),
        "elapsed_seconds": clock.elapsed().as_secs_f64(),
        "outputs": outputs,
    });
    let hash = loaded.config.hash();
    out.json("metadata.json", &hash, meta)
}
