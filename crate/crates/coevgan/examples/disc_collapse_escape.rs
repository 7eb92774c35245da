//! Demonstrates discriminator collapse and the population's escape from it.
//! A discriminator whose intervals sit in regions of negative loss gradient
//! shrinks them to nothing under gradient ascent; a coevolving population
//! started in the same trap recovers because mutation plus selection can jump
//! out of the shrinking basin.
//!
//! Run with: cargo run --example disc_collapse_escape

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coevgan::harness::{disc_collapse, ExperimentConfig};
use coevgan::problem::GeneratorParams;

fn main() {
    let config = ExperimentConfig { runs_per_cell: 20, master_seed: 0, ..ExperimentConfig::default() };
    let target = config.target();
    let gen_fixed = GeneratorParams::new(-1.0, 2.5).unwrap();

    // pure gradient ascent from a tiny trapped discriminator: both interval
    // lengths shrink monotonically toward zero
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let start = disc_collapse::sample_small_negative_disc(&gen_fixed, &target, &mut rng);
    let trace = disc_collapse::baseline_disc_trace(&gen_fixed, &target, &start, 0.002, 5000);
    let first = &trace[0];
    let last = trace.last().unwrap();
    println!(
        "gradient baseline: interval lengths ({:.4}, {:.4}) -> ({:.2e}, {:.2e}) after {} steps",
        first.r1 - first.l1,
        first.r2 - first.l2,
        last.r1 - last.l1,
        last.r2 - last.l2,
        trace.len() - 1
    );

    // coevolving discriminator populations started in each sign quadrant of
    // the initial-gradient plane, with the generator frozen
    println!("\ncoevolution escape rates by starting quadrant (sign of each interval's initial gradient):");
    for cell in disc_collapse::compute_quadrant_cells(&config).unwrap() {
        println!(
            "  ({:?}, {:?}): {}/{} feasible runs improved best fitness by >= {}",
            cell.quadrant.0, cell.quadrant.1, cell.successes, cell.feasible_runs,
            config.disc_margin
        );
    }
}
