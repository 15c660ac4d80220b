mod commands;
mod config;
mod error;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{run_command, Command};
use config::{GridConfig, Overrides, ProjectConfig};
use error::CliError;

/// Two-axis gimbal rate-loop design pipeline: plant model, parameter
/// identification, LQG/LTR design, robustness analysis, controller reduction,
/// discretization, closed-loop simulation and swept-sine validation.
#[derive(Debug, Parser)]
#[command(name = "ltr", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated, strictly descending list of rho values.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Analysis grid as fmin:fmax:points_per_decade (Hz).
    #[arg(long)]
    grid: Option<String>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Write the effective configuration to stdout and exit.
    #[arg(long)]
    print_config: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
        rhos: cli.rho,
        grid: cli.grid.as_deref().map(GridConfig::parse).transpose()?,
        workers: cli.workers,
    };
    let cfg = ProjectConfig::load(cli.config.as_deref(), &overrides)?;
    if cli.print_config {
        print!("{}", toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?);
        return Ok(());
    }
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }
    let summary = run_command(cli.command, &cfg)?;
    println!("{}: {summary}", cli.command.name());
    println!("outputs in {} (config {})", cfg.output_dir.display(), &cfg.hash()[..12]);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ltr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
