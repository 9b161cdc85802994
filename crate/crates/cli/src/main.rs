use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::Outcome;
use config::RunConfig;

/// Direct scattering data at negative energy: scans, verification suites and
/// CSV export.
#[derive(Parser)]
#[command(name = "scatter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides the configuration).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized λ-sampling (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Compute a, b and Δ over the λ-grid.
    Scan,
    /// Run the verification suite and write a report.
    Verify,
    /// Sample the soliton obstruction near λ = 0 and λ = ∞.
    DemoSoliton,
    /// Write plot-ready CSV files.
    Export,
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    if let Some(threads) = cli.threads {
        config.threads = Some(threads);
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let config = load(cli)?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Scan => commands::cmd_scan(&config),
        Command::Verify => commands::cmd_verify(&config),
        Command::DemoSoliton => commands::cmd_demo_soliton(&config),
        Command::Export => commands::cmd_export(&config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
