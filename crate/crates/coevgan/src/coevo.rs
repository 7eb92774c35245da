//! Paired-population competitive coevolution.
//!
//! Two populations play a minimax game: every generator is evaluated against
//! every discriminator, fitness accumulates with opposite signs, and each
//! generation runs evaluate -> sort -> select -> mutate -> replace. Mutation
//! is either a gradient step against one (or all) opponents or a Gaussian
//! perturbation; per-individual learning rates drift under their own Gaussian
//! mutation. Replacement keeps a mutant only if it strictly beats the
//! incumbent against the same opposing snapshot.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoevError {
    #[error("population must be nonempty")]
    EmptyPopulation,
    #[error("weight vector length {got} does not match population size {expected}")]
    WeightLengthMismatch { expected: usize, got: usize },
    #[error("fitness not evaluated before {0}")]
    FitnessUnset(&'static str),
    #[error("population size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// The minimax game the populations play. The generator side minimizes the
/// loss, the discriminator side maximizes it; gradient mutations already move
/// in each side's improving direction.
pub trait MinimaxProblem {
    type Gen: Clone;
    type Disc: Clone;

    fn loss(&self, gen: &Self::Gen, disc: &Self::Disc) -> f64;

    /// One descending gradient step for the generator against the given
    /// opponents (gradient contributions summed over all of them).
    fn gradient_mutate_gen(&self, gen: &Self::Gen, opponents: &[&Self::Disc], lr: f64)
        -> Self::Gen;

    /// One ascending gradient step for the discriminator, feasibility
    /// restored afterwards.
    fn gradient_mutate_disc(
        &self,
        disc: &Self::Disc,
        opponents: &[&Self::Gen],
        lr: f64,
    ) -> Self::Disc;

    fn gaussian_mutate_gen(&self, gen: &Self::Gen, sigma: f64, rng: &mut ChaCha8Rng) -> Self::Gen;

    fn gaussian_mutate_disc(
        &self,
        disc: &Self::Disc,
        sigma: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self::Disc;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<P> {
    pub params: P,
    pub learning_rate: f64,
    pub fitness: Option<f64>,
}

impl<P> Individual<P> {
    pub fn new(params: P, learning_rate: f64) -> Self {
        Individual { params, learning_rate, fitness: None }
    }

    pub fn fitness(&self) -> Result<f64, CoevError> {
        self.fitness.ok_or(CoevError::FitnessUnset("fitness access"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population<P> {
    pub members: Vec<Individual<P>>,
}

impl<P: Clone> Population<P> {
    pub fn new(members: Vec<Individual<P>>) -> Result<Self, CoevError> {
        if members.is_empty() {
            return Err(CoevError::EmptyPopulation);
        }
        Ok(Population { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> &Individual<P> {
        // valid after sort: members are ordered by descending fitness
        &self.members[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    GradientStep,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitnessWeighting {
    Uniform,
    Weighted,
}

/// How many opponents a gradient mutation back-propagates through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpponentSampling {
    SingleRandom,
    FullSum,
}

pub const LR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CoevConfig {
    pub generations: u32,
    /// Per-rank probability of keeping the rank-i individual during
    /// selection; the fallback is a binary tournament. All 1.0 = elitist
    /// pass-through.
    pub selection_probs: Vec<f64>,
    /// Per-slot probability of mutating at all.
    pub mutation_probs: Vec<f64>,
    /// Gaussian sigma for parameter mutation (Gaussian mode).
    pub mutation_step: f64,
    /// Gaussian sigma for learning-rate drift.
    pub lr_mutation_sigma: f64,
    pub mutation_kind: MutationKind,
    pub fitness_weighting: FitnessWeighting,
    pub opponent_sampling: OpponentSampling,
    /// Keeps the generator population untouched (discriminator-collapse
    /// experiments evolve only the discriminators).
    pub freeze_generators: bool,
}

impl CoevConfig {
    /// Elitist defaults for population size `t`: keep every rank, always
    /// mutate, Gaussian step 1.
    pub fn elitist(t: usize, generations: u32) -> Self {
        CoevConfig {
            generations,
            selection_probs: vec![1.0; t],
            mutation_probs: vec![1.0; t],
            mutation_step: 1.0,
            lr_mutation_sigma: 0.0,
            mutation_kind: MutationKind::Gaussian,
            fitness_weighting: FitnessWeighting::Uniform,
            opponent_sampling: OpponentSampling::SingleRandom,
            freeze_generators: false,
        }
    }

    pub fn validate(&self, t: usize) -> Result<(), CoevError> {
        if self.selection_probs.len() != t || self.mutation_probs.len() != t {
            return Err(CoevError::InvalidConfig(format!(
                "selection/mutation prob lengths must equal population size {t}"
            )));
        }
        for p in self.selection_probs.iter().chain(&self.mutation_probs) {
            if !(0.0..=1.0).contains(p) {
                return Err(CoevError::InvalidConfig(format!("probability {p} outside [0,1]")));
            }
        }
        if self.mutation_step <= 0.0 {
            return Err(CoevError::InvalidConfig("mutation_step must be > 0".into()));
        }
        if self.lr_mutation_sigma < 0.0 {
            return Err(CoevError::InvalidConfig("lr_mutation_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// All-pairs loss matrix, values[i][j] = L(u_i, v_j).
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessMatrix {
    pub values: Vec<Vec<f64>>,
}

impl FitnessMatrix {
    pub fn generator_fitness(&self, i: usize) -> f64 {
        -self.values[i].iter().sum::<f64>()
    }

    pub fn discriminator_fitness(&self, j: usize) -> f64 {
        self.values.iter().map(|row| row[j]).sum()
    }
}

/// Evaluates both populations against each other and assigns fitness:
/// f_u = -sum_j L(u_i, v_j), f_v = +sum_i L(u_i, v_j), optionally scaled by
/// the mixture weights of both sides.
pub fn evaluate<P: MinimaxProblem>(
    problem: &P,
    pop_u: &mut Population<P::Gen>,
    pop_v: &mut Population<P::Disc>,
    weighting: FitnessWeighting,
    weights_u: Option<&[f64]>,
    weights_v: Option<&[f64]>,
) -> Result<FitnessMatrix, CoevError> {
    let t_u = pop_u.len();
    let t_v = pop_v.len();
    let (wu, wv) = match weighting {
        FitnessWeighting::Uniform => (None, None),
        FitnessWeighting::Weighted => {
            let wu = weights_u.ok_or_else(|| {
                CoevError::InvalidConfig("weighted mode requires generator weights".into())
            })?;
            let wv = weights_v.ok_or_else(|| {
                CoevError::InvalidConfig("weighted mode requires discriminator weights".into())
            })?;
            if wu.len() != t_u {
                return Err(CoevError::WeightLengthMismatch { expected: t_u, got: wu.len() });
            }
            if wv.len() != t_v {
                return Err(CoevError::WeightLengthMismatch { expected: t_v, got: wv.len() });
            }
            (Some(wu), Some(wv))
        }
    };
    let mut values = vec![vec![0.0; t_v]; t_u];
    for (i, u) in pop_u.members.iter().enumerate() {
        for (j, v) in pop_v.members.iter().enumerate() {
            let mut l = problem.loss(&u.params, &v.params);
            if let (Some(wu), Some(wv)) = (wu, wv) {
                l *= wu[i] * wv[j];
            }
            values[i][j] = l;
        }
    }
    let matrix = FitnessMatrix { values };
    for (i, u) in pop_u.members.iter_mut().enumerate() {
        u.fitness = Some(matrix.generator_fitness(i));
    }
    for (j, v) in pop_v.members.iter_mut().enumerate() {
        v.fitness = Some(matrix.discriminator_fitness(j));
    }
    Ok(matrix)
}

/// Stable sort by descending fitness; errors if any fitness is unset.
pub fn sort<P: Clone>(pop: &mut Population<P>) -> Result<(), CoevError> {
    if pop.members.iter().any(|m| m.fitness.is_none()) {
        return Err(CoevError::FitnessUnset("sort"));
    }
    pop.members.sort_by(|a, b| {
        b.fitness
            .unwrap()
            .partial_cmp(&a.fitness.unwrap())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(())
}

/// Rank-based selection: slot i keeps the rank-i individual with probability
/// probs[i], otherwise takes the winner of a binary tournament among two
/// uniform draws (ties favor the better rank).
pub fn select<P: Clone>(
    pop: &Population<P>,
    probs: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<Population<P>, CoevError> {
    let t = pop.len();
    if probs.len() != t {
        return Err(CoevError::WeightLengthMismatch { expected: t, got: probs.len() });
    }
    let mut members = Vec::with_capacity(t);
    for (i, p) in probs.iter().enumerate() {
        if *p >= 1.0 || rng.gen_bool(*p) {
            members.push(pop.members[i].clone());
        } else {
            let a = rng.gen_range(0..t);
            let b = rng.gen_range(0..t);
            // the population is sorted descending, so the smaller index wins
            members.push(pop.members[a.min(b)].clone());
        }
    }
    Ok(Population { members })
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("valid sigma").sample(rng)
}

/// Learning-rate drift: lr <- max(floor, lr + N(0, sigma^2)).
pub fn mutate_learning_rate<P>(ind: &mut Individual<P>, sigma: f64, rng: &mut ChaCha8Rng) {
    ind.learning_rate = (ind.learning_rate + gaussian(rng, sigma)).max(LR_FLOOR);
}

fn pick_opponents<'a, T>(
    all: &'a [Individual<T>],
    sampling: OpponentSampling,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a T> {
    match sampling {
        OpponentSampling::SingleRandom => {
            vec![&all[rng.gen_range(0..all.len())].params]
        }
        OpponentSampling::FullSum => all.iter().map(|m| &m.params).collect(),
    }
}

/// Mutates the generator population slot-wise (probability beta per slot).
pub fn mutate_generators<P: MinimaxProblem>(
    problem: &P,
    pop: &Population<P::Gen>,
    opposing: &Population<P::Disc>,
    config: &CoevConfig,
    rng: &mut ChaCha8Rng,
) -> Population<P::Gen> {
    let members = pop
        .members
        .iter()
        .zip(&config.mutation_probs)
        .map(|(ind, beta)| {
            let mut out = ind.clone();
            if *beta >= 1.0 || rng.gen_bool(*beta) {
                mutate_learning_rate(&mut out, config.lr_mutation_sigma, rng);
                out.params = match config.mutation_kind {
                    MutationKind::GradientStep => {
                        let opps = pick_opponents(&opposing.members, config.opponent_sampling, rng);
                        problem.gradient_mutate_gen(&ind.params, &opps, out.learning_rate)
                    }
                    MutationKind::Gaussian => {
                        problem.gaussian_mutate_gen(&ind.params, config.mutation_step, rng)
                    }
                };
                out.fitness = None;
            }
            out
        })
        .collect();
    Population { members }
}

pub fn mutate_discriminators<P: MinimaxProblem>(
    problem: &P,
    pop: &Population<P::Disc>,
    opposing: &Population<P::Gen>,
    config: &CoevConfig,
    rng: &mut ChaCha8Rng,
) -> Population<P::Disc> {
    let members = pop
        .members
        .iter()
        .zip(&config.mutation_probs)
        .map(|(ind, beta)| {
            let mut out = ind.clone();
            if *beta >= 1.0 || rng.gen_bool(*beta) {
                mutate_learning_rate(&mut out, config.lr_mutation_sigma, rng);
                out.params = match config.mutation_kind {
                    MutationKind::GradientStep => {
                        let opps = pick_opponents(&opposing.members, config.opponent_sampling, rng);
                        problem.gradient_mutate_disc(&ind.params, &opps, out.learning_rate)
                    }
                    MutationKind::Gaussian => {
                        problem.gaussian_mutate_disc(&ind.params, config.mutation_step, rng)
                    }
                };
                out.fitness = None;
            }
            out
        })
        .collect();
    Population { members }
}

/// Slot-wise replacement: the mutant survives only with strictly better
/// fitness; ties keep the incumbent.
pub fn replace<P: Clone>(
    pop: Population<P>,
    mutated: Population<P>,
) -> Result<Population<P>, CoevError> {
    if pop.len() != mutated.len() {
        return Err(CoevError::SizeMismatch(pop.len(), mutated.len()));
    }
    let members = pop
        .members
        .into_iter()
        .zip(mutated.members)
        .map(|(incumbent, mutant)| {
            match (incumbent.fitness, mutant.fitness) {
                (Some(fi), Some(fm)) if fm > fi => Ok(mutant),
                (Some(_), Some(_)) => Ok(incumbent),
                _ => Err(CoevError::FitnessUnset("replace")),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Population { members })
}

/// Per-generation view handed to observers after evaluate + sort.
pub type Observer<'a, G, D> = &'a mut dyn FnMut(u32, &Population<G>, &Population<D>);

/// Runs the full evaluate -> sort -> select -> mutate -> replace loop for
/// `config.generations` generations. With zero generations the populations
/// are only evaluated and sorted. The observer fires once per recorded
/// generation, including the initial state.
#[allow(clippy::too_many_arguments)]
pub fn run_basic<P: MinimaxProblem>(
    problem: &P,
    mut pop_u: Population<P::Gen>,
    mut pop_v: Population<P::Disc>,
    config: &CoevConfig,
    weights_u: Option<&[f64]>,
    weights_v: Option<&[f64]>,
    rng: &mut ChaCha8Rng,
    mut observer: Option<Observer<'_, P::Gen, P::Disc>>,
) -> Result<(Population<P::Gen>, Population<P::Disc>), CoevError> {
    config.validate(pop_u.len().max(pop_v.len()))?;
    if pop_u.len() != pop_v.len() {
        return Err(CoevError::SizeMismatch(pop_u.len(), pop_v.len()));
    }
    let w = config.fitness_weighting;
    evaluate(problem, &mut pop_u, &mut pop_v, w, weights_u, weights_v)?;
    sort(&mut pop_u)?;
    sort(&mut pop_v)?;
    if let Some(obs) = observer.as_mut() {
        obs(0, &pop_u, &pop_v);
    }
    for generation in 1..=config.generations {
        pop_u = select(&pop_u, &config.selection_probs, rng)?;
        pop_v = select(&pop_v, &config.selection_probs, rng)?;
        // refresh fitness against the post-selection opposing snapshot; this
        // is the reference both incumbents and mutants are judged against
        evaluate(problem, &mut pop_u, &mut pop_v, w, weights_u, weights_v)?;

        let mut mutated_u = if config.freeze_generators {
            pop_u.clone()
        } else {
            mutate_generators(problem, &pop_u, &pop_v, config, rng)
        };
        let mut mutated_v = mutate_discriminators(problem, &pop_v, &pop_u, config, rng);

        // score mutants against the same opposing snapshots, with the same
        // per-slot weights the incumbents were scored under
        let pair_weight = |i: usize, j: usize| match (weights_u, weights_v, w) {
            (Some(wu), Some(wv), FitnessWeighting::Weighted) => wu[i] * wv[j],
            _ => 1.0,
        };
        for (i, mu) in mutated_u.members.iter_mut().enumerate() {
            let f: f64 = pop_v
                .members
                .iter()
                .enumerate()
                .map(|(j, v)| pair_weight(i, j) * problem.loss(&mu.params, &v.params))
                .sum();
            mu.fitness = Some(-f);
        }
        for (j, mv) in mutated_v.members.iter_mut().enumerate() {
            let f: f64 = pop_u
                .members
                .iter()
                .enumerate()
                .map(|(i, u)| pair_weight(i, j) * problem.loss(&u.params, &mv.params))
                .sum();
            mv.fitness = Some(f);
        }

        pop_u = replace(pop_u, mutated_u)?;
        pop_v = replace(pop_v, mutated_v)?;

        evaluate(problem, &mut pop_u, &mut pop_v, w, weights_u, weights_v)?;
        sort(&mut pop_u)?;
        sort(&mut pop_v)?;
        if let Some(obs) = observer.as_mut() {
            obs(generation, &pop_u, &pop_v);
        }
    }
    Ok((pop_u, pop_v))
}
