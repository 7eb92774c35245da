//! Discriminator-collapse experiment. The generator is frozen at a fixed
//! point away from the target; discriminators start in one of the four
//! interval-fitness sign quadrants. Under pure gradient ascent a
//! discriminator whose intervals both sit in generator-dominated territory
//! (the (-,-) quadrant) can only shrink its intervals to nothing, while
//! population search escapes by jumping an interval into target-dominated
//! territory.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{pgm::render_pgm, write_file, ExperimentConfig, HarnessError};
use crate::coevo::{self, run_basic, Individual, Population};
use crate::gaussmix::Interval;
use crate::problem::{
    grad_discriminator, interval_fitness_signs, repair, sample_disc_in_quadrant,
    DiscriminatorParams, GeneratorParams, ProblemError, Sign, TheoreticalGan,
    DEFAULT_QUADRANT_ATTEMPTS,
};
use crate::seeding;

/// Seed-path namespace for this command.
const CMD: u64 = 2;

pub const QUADRANTS: [(Sign, Sign); 4] = [
    (Sign::Negative, Sign::Negative),
    (Sign::Negative, Sign::Positive),
    (Sign::Positive, Sign::Negative),
    (Sign::Positive, Sign::Positive),
];

pub const HEATMAP_CSV_HEADER: &str =
    "sign_left,sign_right,successes,feasible_runs,runs,success_rate";

pub const TRACE_CSV_HEADER: &str = "run,step,l1,r1,l2,r2,len1,len2";

#[derive(Debug, Clone)]
pub struct QuadrantCell {
    pub quadrant: (Sign, Sign),
    pub successes: u32,
    pub feasible_runs: u32,
    pub runs: u32,
}

impl QuadrantCell {
    pub fn rate(&self) -> f64 {
        if self.feasible_runs == 0 {
            0.0
        } else {
            self.successes as f64 / self.feasible_runs as f64
        }
    }
}

/// One coevolution replicate with frozen generators: success means the best
/// discriminator fitness improved on its initial value by at least the
/// configured margin. `Ok(None)` marks an infeasible draw (no discriminator
/// found in the quadrant).
pub fn escape_run(
    config: &ExperimentConfig,
    quadrant: (Sign, Sign),
    rng: &mut ChaCha8Rng,
) -> Result<Option<bool>, HarnessError> {
    let target = config.target();
    let gen_fixed = GeneratorParams::new(config.disc_fixed_mu.0, config.disc_fixed_mu.1)?;
    let range = Interval::new(config.disc_init.0, config.disc_init.1).expect("validated config");
    let mut discs = Vec::with_capacity(config.pop_size);
    for _ in 0..config.pop_size {
        match sample_disc_in_quadrant(
            quadrant,
            &gen_fixed,
            &target,
            &range,
            DEFAULT_QUADRANT_ATTEMPTS,
            rng,
        ) {
            Ok(d) => discs.push(Individual::new(d, config.learning_rate)),
            Err(ProblemError::InfeasibleQuadrant(..)) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    let gens = vec![Individual::new(gen_fixed, config.learning_rate); config.pop_size];
    let mut pop_u = Population::new(gens).expect("pop_size >= 1");
    let mut pop_v = Population::new(discs).expect("pop_size >= 1");

    let problem = TheoreticalGan::closed_form(target);
    coevo::evaluate(
        &problem,
        &mut pop_u,
        &mut pop_v,
        coevo::FitnessWeighting::Uniform,
        None,
        None,
    )?;
    coevo::sort(&mut pop_v)?;
    let initial_best = pop_v.best().fitness()?;

    let coev = config.coev_config(config.generations, true);
    let (_, final_v) = run_basic(&problem, pop_u, pop_v, &coev, None, None, rng, None)?;
    let final_best = final_v.best().fitness()?;
    Ok(Some(final_best >= initial_best + config.disc_margin))
}

/// Success rates for the 2x2 quadrant grid.
pub fn compute_quadrant_cells(
    config: &ExperimentConfig,
) -> Result<Vec<QuadrantCell>, HarnessError> {
    let runs = config.runs_per_cell;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("worker pool");
    pool.install(|| {
        QUADRANTS
            .into_par_iter()
            .enumerate()
            .map(|(qi, quadrant)| {
                let mut successes = 0;
                let mut feasible_runs = 0;
                for run in 0..runs {
                    let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive(
                        config.master_seed,
                        &[CMD, qi as u64, run as u64],
                    ));
                    if let Some(hit) = escape_run(config, quadrant, &mut rng)? {
                        feasible_runs += 1;
                        if hit {
                            successes += 1;
                        }
                    }
                }
                Ok(QuadrantCell { quadrant, successes, feasible_runs, runs })
            })
            .collect()
    })
}

pub fn quadrant_csv(cells: &[QuadrantCell]) -> String {
    let mut out = String::from(HEATMAP_CSV_HEADER);
    out.push('\n');
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.quadrant.0,
            c.quadrant.1,
            c.successes,
            c.feasible_runs,
            c.runs,
            c.rate()
        ));
    }
    out
}

/// Pure discriminator gradient ascent with the generator frozen; one bounds
/// snapshot per step, repair applied after every step.
pub fn baseline_disc_trace(
    gen_fixed: &GeneratorParams,
    target: &GeneratorParams,
    start: &DiscriminatorParams,
    lr: f64,
    steps: u32,
) -> Vec<DiscriminatorParams> {
    let mut disc = *start;
    let mut trace = Vec::with_capacity(steps as usize + 1);
    trace.push(disc);
    for _ in 0..steps {
        let (dl1, dr1, dl2, dr2) = grad_discriminator(gen_fixed, &disc, target);
        disc = repair([
            disc.l1 + lr * dl1,
            disc.r1 + lr * dr1,
            disc.l2 + lr * dl2,
            disc.r2 + lr * dr2,
        ])
        .expect("finite bounds stay finite under a finite step");
        trace.push(disc);
    }
    trace
}

/// Samples a (-,-)-quadrant discriminator with short intervals around the
/// frozen generator's modes; those sit where the generator density dominates
/// the target's, so both interval contributions are negative.
pub fn sample_small_negative_disc(
    gen_fixed: &GeneratorParams,
    target: &GeneratorParams,
    rng: &mut ChaCha8Rng,
) -> DiscriminatorParams {
    let jitter = Normal::new(0.0, 0.05).expect("static sigma");
    let half = 0.1;
    loop {
        let c1 = gen_fixed.mu1 + jitter.sample(rng);
        let c2 = gen_fixed.mu2 + jitter.sample(rng);
        let cand = repair([c1 - half, c1 + half, c2 - half, c2 + half]).expect("finite draw");
        if interval_fitness_signs(&cand, gen_fixed, target)
            == (Sign::Negative, Sign::Negative)
        {
            return cand;
        }
    }
}

pub fn trace_csv(traces: &[Vec<DiscriminatorParams>]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for (run, trace) in traces.iter().enumerate() {
        for (step, d) in trace.iter().enumerate() {
            out.push_str(&format!(
                "{run},{step},{},{},{},{},{},{}\n",
                d.l1,
                d.r1,
                d.l2,
                d.r2,
                d.r1 - d.l1,
                d.r2 - d.l2
            ));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct DiscCollapseSummary {
    pub cells: Vec<QuadrantCell>,
    pub files: Vec<PathBuf>,
}

pub fn cmd_disc_collapse(
    config: &ExperimentConfig,
    out_dir: &Path,
    with_traces: bool,
) -> Result<DiscCollapseSummary, HarnessError> {
    let cells = compute_quadrant_cells(config)?;
    let mut files = vec![write_file(out_dir, "disc_collapse_heatmap.csv", &quadrant_csv(&cells))?];
    // 2x2 image: rows = left-interval sign (-, +), columns = right sign
    let maxval = config.runs_per_cell.max(1);
    let values: Vec<u32> = cells.iter().map(|c| c.successes).collect();
    files.push(write_file(out_dir, "disc_collapse_heatmap.pgm", &render_pgm(2, 2, maxval, &values))?);

    if with_traces {
        let target = config.target();
        let gen_fixed = GeneratorParams::new(config.disc_fixed_mu.0, config.disc_fixed_mu.1)?;
        let traces: Vec<Vec<DiscriminatorParams>> = (0..config.runs.min(10))
            .map(|run| {
                let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive(
                    config.master_seed,
                    &[CMD, 100, run as u64],
                ));
                let start = sample_small_negative_disc(&gen_fixed, &target, &mut rng);
                baseline_disc_trace(
                    &gen_fixed,
                    &target,
                    &start,
                    config.collapse_trace_lr,
                    config.collapse_trace_steps,
                )
            })
            .collect();
        files.push(write_file(out_dir, "disc_collapse_baseline_trace.csv", &trace_csv(&traces))?);
    }
    Ok(DiscCollapseSummary { cells, files })
}
