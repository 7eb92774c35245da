//! Experiment harness: declarative configs, seeded replication, CSV and
//! heatmap outputs for the convergence, mode-collapse, discriminator-collapse
//! and grid experiments.
//!
//! Configs are flat `key = value` text files; unknown keys are errors and CLI
//! flags override file values. All outputs are reproducible bit-for-bit from
//! (config, master_seed) in synchronous modes; heatmap cells and replicate
//! runs fan out across workers with per-(cell, run) derived seeds so parallel
//! and sequential execution emit identical files.

pub mod converge;
pub mod disc_collapse;
pub mod grid_run;
pub mod heatmap;
pub mod pgm;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::coevo::{CoevConfig, FitnessWeighting, MutationKind, OpponentSampling};
use crate::grid::ExecutionMode;
use crate::mixture::NegL2DensityDistance;
use crate::problem::GeneratorParams;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "COEVGAN_OUT";

/// Per-rank selection pressure profile used to build the coevolution
/// selection probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionProfile {
    /// Keep every rank (pass-through selection).
    Elitist,
    /// Keep rank i with probability max(1 - i/(T-1), floor): the champion is
    /// always kept, lower ranks are churned through binary tournaments. The
    /// default floor 0.2 was calibrated on convergence pilot sweeps; pure
    /// elitist selection reliably collapses onto a single mode.
    RankLinear { floor: f64 },
}

impl SelectionProfile {
    pub fn probs(&self, t: usize) -> Vec<f64> {
        match self {
            SelectionProfile::Elitist => vec![1.0; t],
            SelectionProfile::RankLinear { floor } => (0..t)
                .map(|i| {
                    if t == 1 {
                        1.0
                    } else {
                        (1.0 - i as f64 / (t - 1) as f64).max(*floor)
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error at {path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("unknown config key '{key}' at {path}:{line}")]
    UnknownKey { path: String, line: usize, key: String },
    #[error("invalid value for '{key}': {msg}")]
    Invalid { key: String, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Coev(#[from] crate::coevo::CoevError),
    #[error(transparent)]
    Problem(#[from] crate::problem::ProblemError),
}

impl HarnessError {
    /// Process exit code: 1 for validation problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. }
            | HarnessError::UnknownKey { .. }
            | HarnessError::Invalid { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub runs: u32,
    pub generations: u32,
    pub pop_size: usize,
    pub mutation_step: f64,
    pub mutation_kind: MutationKind,
    pub selection: SelectionProfile,
    pub mutation_prob: f64,
    pub lr_mutation_sigma: f64,
    pub learning_rate: f64,
    pub target_mu: (f64, f64),
    pub gen_init: (f64, f64),
    pub disc_init: (f64, f64),
    pub success_threshold: f64,
    pub master_seed: u64,
    pub weighted_fitness: bool,
    pub workers: usize,
    // heatmap sweep
    pub paper_scale: bool,
    pub heatmap_range: (f64, f64),
    pub heatmap_step: f64,
    pub runs_per_cell: u32,
    pub heatmap_generations: u32,
    // gradient baseline
    pub baseline_lr_gen: f64,
    pub baseline_lr_disc: f64,
    pub baseline_steps: u32,
    // discriminator collapse
    pub disc_fixed_mu: (f64, f64),
    pub disc_margin: f64,
    pub collapse_trace_lr: f64,
    pub collapse_trace_steps: u32,
    // grid
    pub grid_m: usize,
    pub per_cell_size: usize,
    pub grid_generations: u64,
    pub inner_generations: u32,
    pub asynchronous: bool,
    pub max_skew: Option<u64>,
    pub metric: NegL2DensityDistance,
    pub weight_sigma: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            runs: 120,
            generations: 100,
            pop_size: 10,
            mutation_step: 1.0,
            mutation_kind: MutationKind::Gaussian,
            selection: SelectionProfile::RankLinear { floor: 0.2 },
            mutation_prob: 1.0,
            lr_mutation_sigma: 0.0,
            learning_rate: 0.5,
            target_mu: (-3.0, 3.0),
            gen_init: (-5.0, 5.0),
            disc_init: (-4.0, 4.0),
            success_threshold: crate::problem::DEFAULT_SUCCESS_THRESHOLD,
            master_seed: 0,
            weighted_fitness: false,
            workers: 4,
            paper_scale: false,
            heatmap_range: (-10.0, 10.0),
            heatmap_step: 2.0,
            runs_per_cell: 20,
            heatmap_generations: 50,
            baseline_lr_gen: 0.5,
            baseline_lr_disc: 0.5,
            baseline_steps: 100,
            disc_fixed_mu: (-1.0, 2.5),
            disc_margin: 0.1,
            collapse_trace_lr: 0.002,
            collapse_trace_steps: 5000,
            grid_m: 3,
            per_cell_size: 1,
            grid_generations: 20,
            inner_generations: 1,
            asynchronous: false,
            max_skew: None,
            metric: NegL2DensityDistance::default(),
            weight_sigma: crate::mixture::DEFAULT_WEIGHT_SIGMA,
        }
    }
}

impl ExperimentConfig {
    pub fn target(&self) -> GeneratorParams {
        GeneratorParams::new(self.target_mu.0, self.target_mu.1).expect("validated config")
    }

    /// Effective heatmap bin step: the paper-scale sweep uses 0.1.
    pub fn effective_heatmap_step(&self) -> f64 {
        if self.paper_scale {
            0.1
        } else {
            self.heatmap_step
        }
    }

    pub fn effective_runs_per_cell(&self) -> u32 {
        if self.paper_scale {
            120
        } else {
            self.runs_per_cell
        }
    }

    pub fn execution_mode(&self) -> ExecutionMode {
        if self.asynchronous {
            ExecutionMode::Asynchronous { max_generation_skew: self.max_skew }
        } else {
            ExecutionMode::Synchronous
        }
    }

    pub fn coev_config(&self, generations: u32, freeze_generators: bool) -> CoevConfig {
        CoevConfig {
            generations,
            selection_probs: self.selection.probs(self.pop_size),
            mutation_probs: vec![self.mutation_prob; self.pop_size],
            mutation_step: self.mutation_step,
            lr_mutation_sigma: self.lr_mutation_sigma,
            mutation_kind: self.mutation_kind,
            fitness_weighting: if self.weighted_fitness {
                FitnessWeighting::Weighted
            } else {
                FitnessWeighting::Uniform
            },
            opponent_sampling: OpponentSampling::SingleRandom,
            freeze_generators,
        }
    }

    /// Applies one `key = value` assignment; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value '{v}' for key '{key}'"))
        }
        match key {
            "runs" => self.runs = num(key, value)?,
            "generations" => self.generations = num(key, value)?,
            "pop_size" => self.pop_size = num(key, value)?,
            "mutation_step" => self.mutation_step = num(key, value)?,
            "mutation_kind" => {
                self.mutation_kind = match value {
                    "gaussian" => MutationKind::Gaussian,
                    "gradient" => MutationKind::GradientStep,
                    other => return Err(format!("mutation_kind must be gaussian|gradient, got '{other}'")),
                }
            }
            "selection" => {
                self.selection = if value == "elitist" {
                    SelectionProfile::Elitist
                } else if let Some(floor) = value.strip_prefix("rank-linear:") {
                    SelectionProfile::RankLinear { floor: num(key, floor)? }
                } else {
                    return Err(format!(
                        "selection must be elitist|rank-linear:<floor>, got '{value}'"
                    ));
                }
            }
            "mutation_prob" => self.mutation_prob = num(key, value)?,
            "lr_mutation_sigma" => self.lr_mutation_sigma = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "target_mu1" => self.target_mu.0 = num(key, value)?,
            "target_mu2" => self.target_mu.1 = num(key, value)?,
            "gen_init_lo" => self.gen_init.0 = num(key, value)?,
            "gen_init_hi" => self.gen_init.1 = num(key, value)?,
            "disc_init_lo" => self.disc_init.0 = num(key, value)?,
            "disc_init_hi" => self.disc_init.1 = num(key, value)?,
            "success_threshold" => self.success_threshold = num(key, value)?,
            "master_seed" => self.master_seed = num(key, value)?,
            "weighted_fitness" => self.weighted_fitness = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "paper_scale" => self.paper_scale = num(key, value)?,
            "heatmap_lo" => self.heatmap_range.0 = num(key, value)?,
            "heatmap_hi" => self.heatmap_range.1 = num(key, value)?,
            "heatmap_step" => self.heatmap_step = num(key, value)?,
            "runs_per_cell" => self.runs_per_cell = num(key, value)?,
            "heatmap_generations" => self.heatmap_generations = num(key, value)?,
            "baseline_lr_gen" => self.baseline_lr_gen = num(key, value)?,
            "baseline_lr_disc" => self.baseline_lr_disc = num(key, value)?,
            "baseline_steps" => self.baseline_steps = num(key, value)?,
            "disc_fixed_mu1" => self.disc_fixed_mu.0 = num(key, value)?,
            "disc_fixed_mu2" => self.disc_fixed_mu.1 = num(key, value)?,
            "disc_margin" => self.disc_margin = num(key, value)?,
            "collapse_trace_lr" => self.collapse_trace_lr = num(key, value)?,
            "collapse_trace_steps" => self.collapse_trace_steps = num(key, value)?,
            "grid_m" => self.grid_m = num(key, value)?,
            "per_cell_size" => self.per_cell_size = num(key, value)?,
            "grid_generations" => self.grid_generations = num(key, value)?,
            "inner_generations" => self.inner_generations = num(key, value)?,
            "execution" => {
                self.asynchronous = match value {
                    "sync" => false,
                    "async" => true,
                    other => return Err(format!("execution must be sync|async, got '{other}'")),
                }
            }
            "max_skew" => {
                self.max_skew = match value {
                    "none" => None,
                    v => Some(num(key, v)?),
                }
            }
            "metric_lo" => self.metric.grid_lo = num(key, value)?,
            "metric_hi" => self.metric.grid_hi = num(key, value)?,
            "metric_step" => self.metric.grid_step = num(key, value)?,
            "weight_sigma" => self.weight_sigma = num(key, value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive_u32 = [
            ("runs", self.runs),
            ("runs_per_cell", self.runs_per_cell),
        ];
        for (key, v) in positive_u32 {
            if v == 0 {
                return Err(HarnessError::Invalid { key: key.into(), msg: "must be >= 1".into() });
            }
        }
        if self.pop_size == 0 {
            return Err(HarnessError::Invalid { key: "pop_size".into(), msg: "must be >= 1".into() });
        }
        if self.grid_m == 0 {
            return Err(HarnessError::Invalid { key: "grid_m".into(), msg: "must be >= 1".into() });
        }
        if self.per_cell_size == 0 {
            return Err(HarnessError::Invalid {
                key: "per_cell_size".into(),
                msg: "must be >= 1".into(),
            });
        }
        if self.workers == 0 {
            return Err(HarnessError::Invalid { key: "workers".into(), msg: "must be >= 1".into() });
        }
        let positive_f64 = [
            ("mutation_step", self.mutation_step),
            ("learning_rate", self.learning_rate),
            ("success_threshold", self.success_threshold),
            ("heatmap_step", self.heatmap_step),
            ("metric_step", self.metric.grid_step),
        ];
        for (key, v) in positive_f64 {
            if !(v > 0.0) {
                return Err(HarnessError::Invalid { key: key.into(), msg: "must be > 0".into() });
            }
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(HarnessError::Invalid {
                key: "mutation_prob".into(),
                msg: "must be in [0, 1]".into(),
            });
        }
        if let SelectionProfile::RankLinear { floor } = self.selection {
            if !(0.0..=1.0).contains(&floor) {
                return Err(HarnessError::Invalid {
                    key: "selection".into(),
                    msg: "rank-linear floor must be in [0, 1]".into(),
                });
            }
        }
        if self.gen_init.0 > self.gen_init.1 {
            return Err(HarnessError::Invalid {
                key: "gen_init_lo".into(),
                msg: "lower bound exceeds upper bound".into(),
            });
        }
        if self.disc_init.0 > self.disc_init.1 {
            return Err(HarnessError::Invalid {
                key: "disc_init_lo".into(),
                msg: "lower bound exceeds upper bound".into(),
            });
        }
        if self.heatmap_range.0 >= self.heatmap_range.1 {
            return Err(HarnessError::Invalid {
                key: "heatmap_lo".into(),
                msg: "range must be nonempty".into(),
            });
        }
        if self.metric.grid_lo >= self.metric.grid_hi {
            return Err(HarnessError::Invalid {
                key: "metric_lo".into(),
                msg: "range must be nonempty".into(),
            });
        }
        Ok(())
    }
}

/// Parses a flat `key = value` config file. Blank lines and `#` comments are
/// ignored; unknown keys and malformed lines are errors carrying the line
/// number.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io { path: path.display().to_string(), source: e })?;
    parse_config(&text, &path.display().to_string())
}

pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, HarnessError> {
    let mut config = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(HarnessError::Parse {
                path: origin.into(),
                line,
                msg: format!("expected 'key = value', found '{trimmed}'"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        config.set(key, value).map_err(|msg| {
            if msg.starts_with("unknown key") {
                HarnessError::UnknownKey { path: origin.into(), line, key: key.into() }
            } else {
                HarnessError::Parse { path: origin.into(), line, msg }
            }
        })?;
    }
    config.validate()?;
    Ok(config)
}

/// Output directory resolution: explicit flag, then the environment
/// variable, then ./coevgan-out.
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(env) = std::env::var(OUT_DIR_ENV) {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from("coevgan-out")
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| HarnessError::Io { path: dir.display().to_string(), source: e })?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| HarnessError::Io { path: path.display().to_string(), source: e })?;
    Ok(path)
}
