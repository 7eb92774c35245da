//! Convergence experiment: replicated coevolution runs from random
//! initializations, with a simultaneous-gradient baseline started from the
//! same initial candidates, both traced to CSV.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{write_file, ExperimentConfig, HarnessError};
use crate::coevo::{run_basic, Individual, Population};
use crate::problem::{
    loss_closed_form, repair, simultaneous_gradient_step, success, DiscriminatorParams,
    GeneratorParams, TheoreticalGan,
};
use crate::seeding;

/// Seed-path namespace for this command.
const CMD: u64 = 0;

pub const CSV_HEADER: &str =
    "run,generation,mu1,mu2,l1,r1,l2,r2,best_gen_fitness,best_disc_fitness";

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeRecord {
    pub run: u32,
    pub generation: u32,
    pub best_gen: GeneratorParams,
    pub best_disc: DiscriminatorParams,
    pub best_gen_fitness: f64,
    pub best_disc_fitness: f64,
}

impl ConvergeRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.run,
            self.generation,
            self.best_gen.mu1,
            self.best_gen.mu2,
            self.best_disc.l1,
            self.best_disc.r1,
            self.best_disc.l2,
            self.best_disc.r2,
            self.best_gen_fitness,
            self.best_disc_fitness
        )
    }
}

#[derive(Debug, Clone)]
pub struct ConvergeOutcome {
    pub coevolution: Vec<ConvergeRecord>,
    pub baseline: Vec<ConvergeRecord>,
    pub coevolution_success: bool,
    pub baseline_success: bool,
}

/// Uniform-random initial populations over the configured ranges.
pub fn init_populations(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> (Population<GeneratorParams>, Population<DiscriminatorParams>) {
    let gen_draw =
        |rng: &mut ChaCha8Rng| rng.gen_range(config.gen_init.0..=config.gen_init.1);
    let disc_draw =
        |rng: &mut ChaCha8Rng| rng.gen_range(config.disc_init.0..=config.disc_init.1);
    let gens = (0..config.pop_size)
        .map(|_| {
            let p = GeneratorParams::new(gen_draw(rng), gen_draw(rng)).expect("finite draw");
            Individual::new(p, config.learning_rate)
        })
        .collect();
    let discs = (0..config.pop_size)
        .map(|_| {
            let p = repair([disc_draw(rng), disc_draw(rng), disc_draw(rng), disc_draw(rng)])
                .expect("finite draw");
            Individual::new(p, config.learning_rate)
        })
        .collect();
    (
        Population::new(gens).expect("pop_size >= 1"),
        Population::new(discs).expect("pop_size >= 1"),
    )
}

/// One replicate: coevolution plus the gradient baseline started from the
/// first initial candidates of the same populations.
pub fn converge_run(config: &ExperimentConfig, run: u32) -> Result<ConvergeOutcome, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive(config.master_seed, &[CMD, run as u64]));
    let (pop_u, pop_v) = init_populations(config, &mut rng);
    let baseline_gen0 = pop_u.members[0].params;
    let baseline_disc0 = pop_v.members[0].params;

    let target = config.target();
    let problem = TheoreticalGan::closed_form(target);
    let coev = config.coev_config(config.generations, false);
    let mut records = Vec::with_capacity(config.generations as usize + 1);
    let mut observer = |generation: u32,
                        u: &Population<GeneratorParams>,
                        v: &Population<DiscriminatorParams>| {
        records.push(ConvergeRecord {
            run,
            generation,
            best_gen: u.best().params,
            best_disc: v.best().params,
            best_gen_fitness: u.best().fitness.unwrap_or(f64::NAN),
            best_disc_fitness: v.best().fitness.unwrap_or(f64::NAN),
        });
    };
    run_basic(&problem, pop_u, pop_v, &coev, None, None, &mut rng, Some(&mut observer))?;
    // a run converges when the fittest generator enters the success ball at
    // any recorded generation (the best-individual trace reaches the target)
    let coevolution_success = records
        .iter()
        .any(|r| success(&r.best_gen, &target, config.success_threshold));

    let mut gen = baseline_gen0;
    let mut disc = baseline_disc0;
    let mut baseline = Vec::with_capacity(config.baseline_steps as usize + 1);
    for step in 0..=config.baseline_steps {
        let l = loss_closed_form(&gen, &disc, &target);
        baseline.push(ConvergeRecord {
            run,
            generation: step,
            best_gen: gen,
            best_disc: disc,
            best_gen_fitness: -l,
            best_disc_fitness: l,
        });
        if step < config.baseline_steps {
            (gen, disc) = simultaneous_gradient_step(
                &gen,
                &disc,
                &target,
                config.baseline_lr_gen,
                config.baseline_lr_disc,
            );
        }
    }
    // same run-level criterion as coevolution: the trace reaches the target
    let baseline_success =
        baseline.iter().any(|r| success(&r.best_gen, &target, config.success_threshold));

    Ok(ConvergeOutcome {
        coevolution: records,
        baseline,
        coevolution_success,
        baseline_success,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergeSummary {
    pub runs: u32,
    pub coevolution_successes: u32,
    pub baseline_successes: u32,
    pub coevolution_csv: PathBuf,
    pub baseline_csv: PathBuf,
}

fn render_csv(records: impl Iterator<Item = ConvergeRecord>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Runs all replicates (fanned out across the worker pool; outputs are
/// independent of worker count) and writes both CSV traces.
pub fn cmd_converge(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ConvergeSummary, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("worker pool");
    let outcomes: Vec<ConvergeOutcome> = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|run| converge_run(config, run))
            .collect::<Result<_, _>>()
    })?;

    let coevolution_successes = outcomes.iter().filter(|o| o.coevolution_success).count() as u32;
    let baseline_successes = outcomes.iter().filter(|o| o.baseline_success).count() as u32;
    let coev_csv = render_csv(outcomes.iter().flat_map(|o| o.coevolution.iter().cloned()));
    let base_csv = render_csv(outcomes.iter().flat_map(|o| o.baseline.iter().cloned()));
    let coevolution_csv = write_file(out_dir, "converge_coevolution.csv", &coev_csv)?;
    let baseline_csv = write_file(out_dir, "converge_baseline.csv", &base_csv)?;
    Ok(ConvergeSummary {
        runs: config.runs,
        coevolution_successes,
        baseline_successes,
        coevolution_csv,
        baseline_csv,
    })
}
