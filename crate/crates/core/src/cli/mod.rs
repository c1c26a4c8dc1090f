//! Batch front end. Each subcommand reads a run configuration, loads or
//! computes the eigenbasis through a content-addressed cache, writes CSV
//! tables and a JSON manifest into the output directory.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 numeric failure, 4 tolerance
//! breach under `--check`.

mod commands;
mod config;
mod manifest;

pub use commands::{load_basis, Context, HEAVY_N};
pub use config::{BasisSection, BasisSource, CheckSection, ExchangeSource, RunConfig, RunSection, SampleSection};
pub use manifest::{CheckOutcome, RunManifest, StageTiming};

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "weylgas", version, about = "Free Fermi gas and local Weyl law experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSVs and the manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Eigenbasis cache directory [default: <out>/cache].
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Exit with code 4 when a recorded check exceeds its tolerance.
    #[arg(long, global = true)]
    pub check: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenvalues (k, lambda).
    Spectrum,
    /// Weyl ratios and the fitted growth exponent.
    Weyl,
    /// Cesàro means of a symbol against the phase-space integral.
    Localweyl,
    /// One-body matrix, pair correlation and density against their limits.
    Correlation,
    /// Exchange energy against the LDA value (n = 3 only).
    Exchange,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Weyl => "weyl",
            Command::Localweyl => "localweyl",
            Command::Correlation => "correlation",
            Command::Exchange => "exchange",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

/// Runs one subcommand and returns the manifest written to
/// `<out>/<command>_manifest.json`.
pub fn execute(cli: &Cli) -> Result<RunManifest> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    let domain = config.domain_spec()?;
    std::fs::create_dir_all(&cli.out)?;
    let cache = cli.cache.clone().unwrap_or_else(|| commands::default_cache(&cli.out));
    let mut manifest = RunManifest::new(cli.command.name(), config.hash(), config.run.seed);
    let ctx = Context {
        config,
        domain,
        out: cli.out.clone(),
        cache,
    };
    match cli.command {
        Command::Spectrum => commands::spectrum(&ctx, &mut manifest)?,
        Command::Weyl => commands::weyl(&ctx, &mut manifest)?,
        Command::Localweyl => commands::localweyl(&ctx, &mut manifest)?,
        Command::Correlation => commands::correlation(&ctx, &mut manifest)?,
        Command::Exchange => commands::exchange(&ctx, &mut manifest)?,
    }
    manifest.write(&cli.out.join(format!("{}_manifest.json", cli.command.name())))?;
    Ok(manifest)
}

/// Full entry point: thread setup, execution, reporting and exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return EXIT_CONFIG;
        }
    }
    match execute(&cli) {
        Ok(manifest) => {
            for c in &manifest.checks {
                let status = if c.pass { "ok" } else { "BREACH" };
                println!("{status} {}: {:.3e} (tolerance {:.3e})", c.name, c.value, c.tolerance);
            }
            if cli.check && !manifest.all_pass() {
                EXIT_TOLERANCE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
