//! Thin CLI over the experiment harness. All logic lives in the library;
//! this binary only parses flags, merges them into the config, dispatches,
//! and prints a one-line summary per experiment.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coevgan::harness::{
    self, converge, disc_collapse, grid_run, heatmap, ExperimentConfig, HarnessError,
};

#[derive(Parser)]
#[command(name = "coevgan", version, about = "Coevolutionary minimax experiments")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key = value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all derived random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: $COEVGAN_OUT, then ./coevgan-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Full-resolution sweep (0.1 heatmap bins, 120 runs per cell).
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Worker threads for replicate fan-out.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Scale fitness contributions by mixture weights.
    #[arg(long, global = true)]
    weighted_fitness: bool,
    /// Asynchronous grid execution (one worker per cell).
    #[arg(long = "async", global = true, conflicts_with = "sync")]
    asynchronous: bool,
    /// Synchronous (lockstep, bit-deterministic) grid execution.
    #[arg(long, global = true)]
    sync: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated coevolution runs with a paired gradient baseline, traced
    /// to CSV.
    Converge,
    /// Success-rate heatmaps over initial generator means, coevolution vs
    /// gradient baseline.
    ModeCollapse {
        /// Runs per heatmap bin.
        #[arg(long)]
        runs_per_cell: Option<u32>,
    },
    /// Discriminator-collapse quadrant experiment with a frozen generator.
    DiscCollapse {
        /// Also write per-step baseline bound-shrinkage traces.
        #[arg(long)]
        trace: bool,
    },
    /// Spatial grid run: checkpoint plus per-neighborhood mixture report.
    GridRun,
    /// Gradient-baseline-only convergence traces.
    Baseline,
}

fn build_config(common: &CommonArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match &common.config {
        Some(path) => harness::load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if common.paper_scale {
        config.paper_scale = true;
    }
    if let Some(workers) = common.workers {
        config.workers = workers;
    }
    if common.weighted_fitness {
        config.weighted_fitness = true;
    }
    if common.asynchronous {
        config.asynchronous = true;
    }
    if common.sync {
        config.asynchronous = false;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut config = build_config(&cli.common)?;
    let out_dir = harness::resolve_out_dir(cli.common.out.as_deref());
    match cli.command {
        Command::Converge => {
            let s = converge::cmd_converge(&config, &out_dir)?;
            println!(
                "converge: {}/{} coevolution and {}/{} baseline runs succeeded -> {}",
                s.coevolution_successes,
                s.runs,
                s.baseline_successes,
                s.runs,
                out_dir.display()
            );
        }
        Command::Baseline => {
            // same traces, but only the baseline file is of interest; reuse
            // the converge driver and report the baseline side
            let s = converge::cmd_converge(&config, &out_dir)?;
            println!(
                "baseline: {}/{} runs succeeded -> {}",
                s.baseline_successes,
                s.runs,
                s.baseline_csv.display()
            );
        }
        Command::ModeCollapse { runs_per_cell } => {
            if let Some(r) = runs_per_cell {
                config.runs_per_cell = r;
                config.validate()?;
            }
            let s = heatmap::cmd_mode_collapse(&config, &out_dir)?;
            println!(
                "mode-collapse: diagonal success {:.3} (coevolution) vs {:.3} (baseline) -> {}",
                s.coevolution_diagonal_mean,
                s.baseline_diagonal_mean,
                out_dir.display()
            );
        }
        Command::DiscCollapse { trace } => {
            let s = disc_collapse::cmd_disc_collapse(&config, &out_dir, trace)?;
            for c in &s.cells {
                println!(
                    "disc-collapse: quadrant ({},{}) escape rate {:.3} ({}/{} feasible runs)",
                    c.quadrant.0,
                    c.quadrant.1,
                    c.rate(),
                    c.successes,
                    c.feasible_runs
                );
            }
        }
        Command::GridRun => {
            let s = grid_run::cmd_grid_run(&config, &out_dir)?;
            println!(
                "grid-run: best neighborhood {} with g = {} -> {}",
                s.best_cell,
                s.best_g,
                out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
