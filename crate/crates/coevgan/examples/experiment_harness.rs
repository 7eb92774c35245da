//! Drives the experiment harness programmatically: a small convergence study
//! (coevolution vs the gradient baseline over seeded replicates) and a coarse
//! mode-collapse heatmap, written as CSV/PGM artifacts to ./harness-demo.
//! The same experiments are available from the `coevgan` binary as the
//! `converge` and `mode-collapse` subcommands.
//!
//! Run with: cargo run --example experiment_harness

use std::path::Path;

use coevgan::harness::{converge, heatmap, ExperimentConfig};

fn main() {
    let out = Path::new("harness-demo");

    let config = ExperimentConfig {
        runs: 10,
        master_seed: 0,
        workers: 4,
        ..ExperimentConfig::default()
    };
    let summary = converge::cmd_converge(&config, out).unwrap();
    println!(
        "converge: coevolution {}/{} vs baseline {}/{} successful runs",
        summary.coevolution_successes, summary.runs, summary.baseline_successes, summary.runs
    );

    // a coarse 5x5 heatmap keeps the demo fast; the full desk-scale study
    // uses an 11x11 grid with 20 runs per bin
    let config = ExperimentConfig {
        heatmap_range: (-8.0, 8.0),
        heatmap_step: 4.0,
        runs_per_cell: 5,
        master_seed: 0,
        workers: 4,
        ..ExperimentConfig::default()
    };
    let mc = heatmap::cmd_mode_collapse(&config, out).unwrap();
    println!(
        "mode-collapse: diagonal success {:.2} (coevolution) vs {:.2} (baseline)",
        mc.coevolution_diagonal_mean, mc.baseline_diagonal_mean
    );
    println!("artifacts written to {}", out.display());
    for f in [&summary.coevolution_csv, &summary.baseline_csv].into_iter().chain(mc.files.iter()) {
        println!("  {}", f.display());
    }
}
