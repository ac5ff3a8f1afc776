use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use morpho_cli::commands;
use morpho_cli::config::{LoadedConfig, ProfileKind};
use morpho_core::parallel::resolve_workers;

#[derive(Parser)]
#[command(name = "morpho", version, about = "Sensor-placement loss landscapes and optimizer experiments for a phototaxis vehicle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileKind>,
    /// Sensor-position bins per axis.
    #[arg(long, global = true)]
    bins: Option<usize>,
    /// Weight grid points per axis (odd).
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    /// Evaluation budget per run for train and coopt.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Repetitions per configuration for train, coopt and hillclimb.
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Worker threads; falls back to MORPHO_WORKERS, then the hardware.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long = "store-success-matrices", global = true)]
    store_success_matrices: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Landscape sweep over designs and weights.
    Sweep,
    /// Optimizer sample-efficiency sweep.
    Train,
    /// Co-optimization versus the fixed-body baseline.
    Coopt,
    /// Homeostasis scores for the genomes listed in the config.
    Dtw,
    /// Correlation reports from existing tables.
    Stats,
    /// Hill-climber runs and interference metrics.
    Hillclimb,
    /// Summary of all outputs under the output directory.
    Report,
}

fn load(cli: &Cli) -> anyhow::Result<LoadedConfig> {
    let c = &cli.common;
    let mut loaded = match &c.config {
        Some(path) => LoadedConfig::from_path(path)?,
        None => LoadedConfig::defaults(),
    };
    let cfg = &mut loaded.config;
    if let Some(p) = c.profile {
        cfg.profile.name = p;
    }
    if let Some(b) = c.bins {
        cfg.sweep.bins = b;
    }
    if let Some(n) = c.grid_n {
        cfg.sweep.grid_n = n;
    }
    if let Some(b) = c.budget {
        cfg.train.budget = b;
        cfg.coopt.budget = b;
    }
    if let Some(s) = c.seeds {
        cfg.train.seeds = s;
        cfg.coopt.seeds = s;
        cfg.hillclimb.seeds = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if c.store_success_matrices {
        cfg.sweep.store_success_matrices = true;
    }
    loaded.validate()?;
    Ok(loaded)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let loaded = load(cli)?;
    let cfg = &loaded.config;
    let workers = resolve_workers(cli.common.workers);
    info!("workers: {workers}");
    match cli.command {
        Command::Sweep => {
            let rows = commands::run_sweep(cfg, workers)?;
            println!("sweep: {} designs -> {}", rows.len(), cfg.out.join("sweep").display());
        }
        Command::Train => {
            let rows = commands::run_train(cfg, workers)?;
            println!("train: {} runs -> {}", rows.len(), cfg.out.join("train").display());
        }
        Command::Coopt => {
            let o = commands::run_coopt(cfg, workers)?;
            println!(
                "coopt: median evals {} vs baseline {}, Mann-Whitney p = {:.3e}",
                o.report.coopt_median_evals, o.report.baseline_median_evals, o.report.mann_whitney.p_value
            );
        }
        Command::Dtw => {
            for (i, s) in commands::run_dtw(cfg)?.iter().enumerate() {
                println!("genome {i}: aggregate dtw {s}");
            }
        }
        Command::Stats => {
            let r = commands::run_stats(cfg)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
        Command::Hillclimb => {
            let o = commands::run_hillclimb(cfg, workers)?;
            println!("{}", serde_json::to_string_pretty(&o.summary)?);
        }
        Command::Report => print!("{}", commands::run_report(cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
