//! Config-driven pipelines around `fpm-core`: simulate stacks, reconstruct
//! them, and compare symmetric pairs and full vs half-rows acquisitions.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use config::{load_config, Overrides, Pipeline, PipelineConfig};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "fpm", version, about = "Fourier ptychographic microscopy simulation and reconstruction")]
pub struct Cli {
    /// JSON pipeline config; defaults apply when omitted
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Stack directory (default: <out>/stack)
    #[arg(long, global = true)]
    pub stack: Option<PathBuf>,
    /// Output directory, overrides `output_dir`
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// full, half-rows or minimal-cover
    #[arg(long, global = true)]
    pub plan: Option<String>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a capture stack
    Simulate,
    /// Reconstruct a stored stack
    Reconstruct,
    /// Compare frames of point-symmetric LED pairs
    CompareSymmetric,
    /// Compare full and half-rows reconstructions
    FullVsHalf,
    /// RMSE and correlation between two PGM images
    Metrics {
        a: PathBuf,
        b: PathBuf,
        /// Also write this row's joint-normalized profile
        #[arg(long)]
        row: Option<usize>,
    },
}

fn pipeline(cli: &Cli) -> CliResult<Pipeline> {
    let (config, base) = match &cli.config {
        Some(path) => (
            load_config(path)?,
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (PipelineConfig::default(), PathBuf::new()),
    };
    let overrides = Overrides {
        seed: cli.seed,
        plan: cli.plan.clone(),
        iterations: cli.iterations,
        out: cli.out.clone(),
    };
    Pipeline::validate(config, &base, &overrides)
}

pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Metrics { a, b, row } => commands::metrics_cmd(a, b, *row, cli.out.as_deref()),
        Command::Simulate => commands::simulate_cmd(&pipeline(cli)?, cli.stack.as_deref()),
        Command::Reconstruct => commands::reconstruct_cmd(&pipeline(cli)?, cli.stack.as_deref()),
        Command::CompareSymmetric => commands::compare_symmetric_cmd(&pipeline(cli)?),
        Command::FullVsHalf => commands::full_vs_half_cmd(&pipeline(cli)?),
    }
}
