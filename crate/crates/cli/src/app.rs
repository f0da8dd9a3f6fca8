//! Argument parsing and dispatch for the `firefront` binary.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Context};
use crate::config::load;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "firefront",
    version,
    about = "Forecast evolving boundaries with a Bayesian level-set model"
)]
pub struct Cli {
    /// Run configuration, TOML or JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for relative output paths; also searched first for inputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Chains run concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Boundary polygons to a series of signed distance fields.
    Rasterize,
    /// Resample and standardize covariate rasters onto the model grid.
    Covariates,
    /// Generate a synthetic series.
    Simulate {
        /// Scenario name, overriding the configuration.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Run the sampler.
    Fit,
    /// Predict ahead of the training window or at a held-out time.
    Forecast,
    /// Score saved predictive draws against a truth field.
    Evaluate,
    /// Print summary tables for a fit and its forecast.
    Report,
}

/// Runs the selected command; returns text meant for standard output.
pub fn execute(cli: &Cli) -> Result<Option<String>, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config is required"))?;
    let ctx = Context {
        loaded: load(path, cli.out_dir.clone())?,
        seed_override: cli.seed,
        threads: cli.threads,
    };
    match &cli.command {
        Command::Rasterize => commands::rasterize(&ctx).map(|_| None),
        Command::Covariates => commands::covariates(&ctx).map(|_| None),
        Command::Simulate { scenario } => {
            commands::simulate(&ctx, scenario.as_deref()).map(|_| None)
        }
        Command::Fit => commands::fit(&ctx).map(|_| None),
        Command::Forecast => commands::run_forecast(&ctx).map(|_| None),
        Command::Evaluate => commands::evaluate(&ctx).map(|_| None),
        Command::Report => commands::report(&ctx).map(Some),
    }
}
