//! Mode-collapse experiment: success-rate heatmaps over a grid of initial
//! generator means, coevolution versus the simultaneous-gradient baseline
//! with paired per-cell seeds. The interesting region is the diagonal
//! mu1 = mu2 (both components born on top of each other), where gradient
//! dynamics stay collapsed forever and coevolution does not.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{pgm::render_pgm, write_file, ExperimentConfig, HarnessError};
use crate::coevo::{run_basic, Individual, Population};
use crate::problem::{
    repair, simultaneous_gradient_step, success, GeneratorParams, TheoreticalGan,
};
use crate::seeding;

/// Seed-path namespace for this command.
const CMD: u64 = 1;

pub const CSV_HEADER: &str = "bin_mu1,bin_mu2,successes,runs,success_rate";

/// Centers of the heatmap bins along one axis: the inclusive grid points
/// lo, lo+step, ..., hi (11 bins for step 2 over [-10,10], 201 for 0.1).
pub fn bin_centers(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step).round() as usize;
    (0..=count).map(|i| lo + step * i as f64).collect()
}

/// Success counts for one method over the full bin grid. Rates are exact
/// rationals successes/runs; the CSV keeps both integers.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub centers: Vec<f64>,
    /// successes[i][j] for the bin centered at (centers[i], centers[j]).
    pub successes: Vec<Vec<u32>>,
    pub runs_per_cell: u32,
}

impl Heatmap {
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.successes[i][j] as f64 / self.runs_per_cell as f64
    }

    /// Mean success rate over the diagonal bins mu1 = mu2.
    pub fn diagonal_mean(&self) -> f64 {
        let n = self.centers.len();
        (0..n).map(|i| self.rate(i, i)).sum::<f64>() / n as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (i, c1) in self.centers.iter().enumerate() {
            for (j, c2) in self.centers.iter().enumerate() {
                let s = self.successes[i][j];
                let rate = s as f64 / self.runs_per_cell as f64;
                out.push_str(&format!("{c1},{c2},{s},{},{rate}\n", self.runs_per_cell));
            }
        }
        out
    }

    /// P2 grayscale rendering, maxval = runs per cell, bright = successful.
    pub fn to_pgm(&self) -> String {
        let n = self.centers.len();
        let values: Vec<u32> =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.successes[i][j])
                .collect();
        render_pgm(n, n, self.runs_per_cell, &values)
    }
}

/// One coevolution replicate started inside the given bin square.
fn coevolution_cell_run(
    config: &ExperimentConfig,
    center: (f64, f64),
    half: f64,
    rng: &mut ChaCha8Rng,
) -> Result<bool, HarnessError> {
    let target = config.target();
    let problem = TheoreticalGan::closed_form(target);
    let gens = (0..config.pop_size)
        .map(|_| {
            let p = GeneratorParams::new(
                rng.gen_range(center.0 - half..=center.0 + half),
                rng.gen_range(center.1 - half..=center.1 + half),
            )
            .expect("finite draw");
            Individual::new(p, config.learning_rate)
        })
        .collect();
    let discs = (0..config.pop_size)
        .map(|_| {
            let draw = |rng: &mut ChaCha8Rng| {
                rng.gen_range(config.disc_init.0..=config.disc_init.1)
            };
            let p = repair([draw(rng), draw(rng), draw(rng), draw(rng)]).expect("finite draw");
            Individual::new(p, config.learning_rate)
        })
        .collect();
    let pop_u = Population::new(gens).expect("pop_size >= 1");
    let pop_v = Population::new(discs).expect("pop_size >= 1");
    let coev = config.coev_config(config.heatmap_generations, false);
    // run-level success: the fittest generator reaches the target ball at
    // some recorded generation
    let mut hit = false;
    let mut observer = |_g: u32, u: &Population<GeneratorParams>, _v: &Population<_>| {
        if success(&u.best().params, &target, config.success_threshold) {
            hit = true;
        }
    };
    run_basic(&problem, pop_u, pop_v, &coev, None, None, rng, Some(&mut observer))?;
    Ok(hit)
}

/// One baseline replicate from the same bin square: a single candidate under
/// simultaneous gradient steps.
fn baseline_cell_run(
    config: &ExperimentConfig,
    center: (f64, f64),
    half: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let target = config.target();
    let mut gen = GeneratorParams::new(
        rng.gen_range(center.0 - half..=center.0 + half),
        rng.gen_range(center.1 - half..=center.1 + half),
    )
    .expect("finite draw");
    let draw =
        |rng: &mut ChaCha8Rng| rng.gen_range(config.disc_init.0..=config.disc_init.1);
    let mut disc = repair([draw(rng), draw(rng), draw(rng), draw(rng)]).expect("finite draw");
    // same run-level criterion as coevolution: the trace reaches the target
    let mut hit = success(&gen, &target, config.success_threshold);
    for _ in 0..config.baseline_steps {
        (gen, disc) = simultaneous_gradient_step(
            &gen,
            &disc,
            &target,
            config.baseline_lr_gen,
            config.baseline_lr_disc,
        );
        hit = hit || success(&gen, &target, config.success_threshold);
    }
    hit
}

/// Computes both heatmaps. Bin cells fan out across the worker pool; each
/// (bin, run, method) triple has its own derived seed, so results do not
/// depend on scheduling.
pub fn compute_heatmaps(config: &ExperimentConfig) -> Result<(Heatmap, Heatmap), HarnessError> {
    let step = config.effective_heatmap_step();
    let half = step / 2.0;
    let centers = bin_centers(config.heatmap_range.0, config.heatmap_range.1, step);
    let runs = config.effective_runs_per_cell();
    let n = centers.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("worker pool");
    let cells: Vec<(u32, u32)> = pool.install(|| {
        (0..n * n)
            .into_par_iter()
            .map(|flat| {
                let (i, j) = (flat / n, flat % n);
                let center = (centers[i], centers[j]);
                let mut coev_hits = 0;
                let mut base_hits = 0;
                for run in 0..runs {
                    let path = [CMD, i as u64, j as u64, run as u64];
                    let mut crng = ChaCha8Rng::seed_from_u64(seeding::derive(
                        config.master_seed,
                        &[path[0], path[1], path[2], path[3], 0],
                    ));
                    if coevolution_cell_run(config, center, half, &mut crng)? {
                        coev_hits += 1;
                    }
                    let mut brng = ChaCha8Rng::seed_from_u64(seeding::derive(
                        config.master_seed,
                        &[path[0], path[1], path[2], path[3], 1],
                    ));
                    if baseline_cell_run(config, center, half, &mut brng) {
                        base_hits += 1;
                    }
                }
                Ok::<_, HarnessError>((coev_hits, base_hits))
            })
            .collect::<Result<_, _>>()
    })?;
    let mut coev = vec![vec![0u32; n]; n];
    let mut base = vec![vec![0u32; n]; n];
    for (flat, (c, b)) in cells.into_iter().enumerate() {
        coev[flat / n][flat % n] = c;
        base[flat / n][flat % n] = b;
    }
    Ok((
        Heatmap { centers: centers.clone(), successes: coev, runs_per_cell: runs },
        Heatmap { centers, successes: base, runs_per_cell: runs },
    ))
}

#[derive(Debug, Clone)]
pub struct ModeCollapseSummary {
    pub coevolution_diagonal_mean: f64,
    pub baseline_diagonal_mean: f64,
    pub files: Vec<PathBuf>,
}

pub fn cmd_mode_collapse(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ModeCollapseSummary, HarnessError> {
    let (coev, base) = compute_heatmaps(config)?;
    let files = vec![
        write_file(out_dir, "mode_collapse_coevolution.csv", &coev.to_csv())?,
        write_file(out_dir, "mode_collapse_baseline.csv", &base.to_csv())?,
        write_file(out_dir, "mode_collapse_coevolution.pgm", &coev.to_pgm())?,
        write_file(out_dir, "mode_collapse_baseline.pgm", &base.to_pgm())?,
    ];
    Ok(ModeCollapseSummary {
        coevolution_diagonal_mean: coev.diagonal_mean(),
        baseline_diagonal_mean: base.diagonal_mean(),
        files,
    })
}
