//! The 1-D theoretical GAN minimax problem.
//!
//! The generator is a two-component unit-variance Gaussian mixture indexed by
//! its means (mu1, mu2). The discriminator is the indicator of a union of two
//! ordered intervals [l1, r1] and [l2, r2]. The objective is
//!
//!   L(mu, l, r) = E_{x ~ G*}[D(x)] + E_{x ~ G_mu}[1 - D(x)]
//!
//! evaluated either in closed form through `gaussmix` or by Monte Carlo
//! sampling. Gradients are analytic, so the finite-difference checks in the
//! test suite are genuine oracles.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::gaussmix::{prob_deriv_wrt_mean, Interval, UnitGaussianMixture};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("non-finite parameter: {0}")]
    NonFinite(f64),
    #[error("discriminator bounds violate l1 <= r1 <= l2 <= r2: ({0}, {1}, {2}, {3})")]
    Unordered(f64, f64, f64, f64),
    #[error("Monte Carlo sample count must be >= 1")]
    ZeroSamples,
    #[error("no discriminator matching quadrant ({0}, {1}) found in {2} attempts")]
    InfeasibleQuadrant(Sign, Sign, u32),
}

/// Generator parameters: means of the two-component mixture
/// (1/2) N(mu1, 1) + (1/2) N(mu2, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    pub mu1: f64,
    pub mu2: f64,
}

impl GeneratorParams {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self, ProblemError> {
        for v in [mu1, mu2] {
            if !v.is_finite() {
                return Err(ProblemError::NonFinite(v));
            }
        }
        Ok(GeneratorParams { mu1, mu2 })
    }

    pub fn mixture(&self) -> UnitGaussianMixture {
        UnitGaussianMixture::equal_weight(vec![self.mu1, self.mu2]).expect("finite means")
    }

    pub fn swapped(&self) -> GeneratorParams {
        GeneratorParams { mu1: self.mu2, mu2: self.mu1 }
    }
}

/// Discriminator parameters: indicator of [l1, r1] union [l2, r2] with
/// l1 <= r1 <= l2 <= r2. Construct unordered candidates through `repair`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminatorParams {
    pub l1: f64,
    pub r1: f64,
    pub l2: f64,
    pub r2: f64,
}

impl DiscriminatorParams {
    pub fn new(l1: f64, r1: f64, l2: f64, r2: f64) -> Result<Self, ProblemError> {
        for v in [l1, r1, l2, r2] {
            if v.is_nan() {
                return Err(ProblemError::NonFinite(v));
            }
        }
        if !(l1 <= r1 && r1 <= l2 && l2 <= r2) {
            return Err(ProblemError::Unordered(l1, r1, l2, r2));
        }
        Ok(DiscriminatorParams { l1, r1, l2, r2 })
    }

    pub fn left(&self) -> Interval {
        Interval::new(self.l1, self.r1).expect("ordered bounds")
    }

    pub fn right(&self) -> Interval {
        Interval::new(self.l2, self.r2).expect("ordered bounds")
    }

    /// D(x): 1 inside either interval, 0 outside.
    pub fn indicator(&self, x: f64) -> f64 {
        if self.left().contains(x) || self.right().contains(x) {
            1.0
        } else {
            0.0
        }
    }
}

/// Sorts four finite reals ascending and assigns (l1, r1, l2, r2).
/// Idempotent; the output always satisfies the ordering invariant.
pub fn repair(b: [f64; 4]) -> Result<DiscriminatorParams, ProblemError> {
    for v in b {
        if v.is_nan() {
            return Err(ProblemError::NonFinite(v));
        }
    }
    let mut s = b;
    s.sort_by(|a, b| a.partial_cmp(b).expect("no NaN after check"));
    DiscriminatorParams::new(s[0], s[1], s[2], s[3])
}

/// How the expectation terms of the loss are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvaluationMode {
    ClosedForm,
    MonteCarlo { sample_count: u32, seed: u64 },
}

/// The concave transform applied to the discriminator output. Only the
/// identity (Wasserstein choice) is supported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MeasuringFunction {
    #[default]
    Identity,
}

impl MeasuringFunction {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            MeasuringFunction::Identity => x,
        }
    }
}

/// L(mu, l, r) = E_{x~G*}[D(x)] + E_{x~G_mu}[1 - D(x)]. Always in [0, 2].
pub fn loss(
    gen: &GeneratorParams,
    disc: &DiscriminatorParams,
    target: &GeneratorParams,
    eval: &EvaluationMode,
) -> Result<f64, ProblemError> {
    match *eval {
        EvaluationMode::ClosedForm => Ok(loss_closed_form(gen, disc, target)),
        EvaluationMode::MonteCarlo { sample_count, seed } => {
            if sample_count == 0 {
                return Err(ProblemError::ZeroSamples);
            }
            Ok(loss_monte_carlo(gen, disc, target, sample_count, seed))
        }
    }
}

pub fn loss_closed_form(
    gen: &GeneratorParams,
    disc: &DiscriminatorParams,
    target: &GeneratorParams,
) -> f64 {
    let p_target = disc_mass(target, disc);
    let p_gen = disc_mass(gen, disc);
    p_target + 1.0 - p_gen
}

/// P_G([l1,r1]) + P_G([l2,r2]); the intervals only share at most a point, so
/// the sum is the mass of the union.
fn disc_mass(gen: &GeneratorParams, disc: &DiscriminatorParams) -> f64 {
    let mix = gen.mixture();
    mix.interval_prob(&disc.left()) + mix.interval_prob(&disc.right())
}

fn loss_monte_carlo(
    gen: &GeneratorParams,
    disc: &DiscriminatorParams,
    target: &GeneratorParams,
    sample_count: u32,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc_target = 0.0;
    let mut acc_gen = 0.0;
    for _ in 0..sample_count {
        let xt = sample_mixture(target, &mut rng);
        acc_target += disc.indicator(xt);
        let xg = sample_mixture(gen, &mut rng);
        acc_gen += 1.0 - disc.indicator(xg);
    }
    (acc_target + acc_gen) / sample_count as f64
}

pub fn sample_mixture<R: Rng + ?Sized>(gen: &GeneratorParams, rng: &mut R) -> f64 {
    let mu = if rng.gen_bool(0.5) { gen.mu1 } else { gen.mu2 };
    mu + rng.sample::<f64, _>(StandardNormal)
}

/// Analytic gradient of the closed-form loss w.r.t. (mu1, mu2):
/// dL/dmu_i = -(1/2) * sum over the two intervals of d/dmu P_{N(mu_i,1)}.
pub fn grad_generator(
    gen: &GeneratorParams,
    disc: &DiscriminatorParams,
    _target: &GeneratorParams,
) -> (f64, f64) {
    let ivs = [disc.left(), disc.right()];
    let mut d = [0.0, 0.0];
    for (slot, mu) in [gen.mu1, gen.mu2].into_iter().enumerate() {
        for iv in &ivs {
            d[slot] -= 0.5 * prob_deriv_wrt_mean(mu, iv);
        }
    }
    (d[0], d[1])
}

/// Analytic gradient of the closed-form loss w.r.t. (l1, r1, l2, r2). Each
/// bound sees the target density with a positive sign and the generator
/// density with a negative sign; left bounds pick up an extra negation.
pub fn grad_discriminator(
    gen: &GeneratorParams,
    disc: &DiscriminatorParams,
    target: &GeneratorParams,
) -> (f64, f64, f64, f64) {
    let pt = target.mixture();
    let pg = gen.mixture();
    let density_gap = |x: f64| {
        if x.is_infinite() {
            0.0
        } else {
            pt.pdf(x) - pg.pdf(x)
        }
    };
    (
        -density_gap(disc.l1),
        density_gap(disc.r1),
        -density_gap(disc.l2),
        density_gap(disc.r2),
    )
}

/// Distance-based success: true iff the best generator is within `threshold`
/// (Euclidean, minimized over the component-label swap) of the target.
pub fn success(best: &GeneratorParams, target: &GeneratorParams, threshold: f64) -> bool {
    generator_distance(best, target) < threshold
}

pub fn generator_distance(a: &GeneratorParams, b: &GeneratorParams) -> f64 {
    let direct = ((a.mu1 - b.mu1).powi(2) + (a.mu2 - b.mu2).powi(2)).sqrt();
    let swapped = ((a.mu1 - b.mu2).powi(2) + (a.mu2 - b.mu1).powi(2)).sqrt();
    direct.min(swapped)
}

pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Sign::Negative => "-",
            Sign::Zero => "0",
            Sign::Positive => "+",
        };
        f.write_str(s)
    }
}

fn classify(v: f64) -> Sign {
    if v.abs() < 1e-12 {
        Sign::Zero
    } else if v > 0.0 {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// Sign of the per-interval fitness contribution
/// P_{G*}([a,b]) - P_{G_mu}([a,b]) for the left and right intervals.
pub fn interval_fitness_signs(
    disc: &DiscriminatorParams,
    gen_fixed: &GeneratorParams,
    target: &GeneratorParams,
) -> (Sign, Sign) {
    let pt = target.mixture();
    let pg = gen_fixed.mixture();
    let left = pt.interval_prob(&disc.left()) - pg.interval_prob(&disc.left());
    let right = pt.interval_prob(&disc.right()) - pg.interval_prob(&disc.right());
    (classify(left), classify(right))
}

pub const DEFAULT_QUADRANT_ATTEMPTS: u32 = 10_000;

/// Rejection-samples a repaired discriminator whose interval fitness signs
/// match the requested quadrant. Bounds are drawn uniformly from
/// `bound_range`; errors out after `max_attempts` rejections.
pub fn sample_disc_in_quadrant<R: Rng + ?Sized>(
    quadrant: (Sign, Sign),
    gen_fixed: &GeneratorParams,
    target: &GeneratorParams,
    bound_range: &Interval,
    max_attempts: u32,
    rng: &mut R,
) -> Result<DiscriminatorParams, ProblemError> {
    for _ in 0..max_attempts {
        let draw = |rng: &mut R| rng.gen_range(bound_range.lo()..=bound_range.hi());
        let cand = repair([draw(rng), draw(rng), draw(rng), draw(rng)])?;
        if interval_fitness_signs(&cand, gen_fixed, target) == quadrant {
            return Ok(cand);
        }
    }
    Err(ProblemError::InfeasibleQuadrant(quadrant.0, quadrant.1, max_attempts))
}

/// One simultaneous (Jacobi) gradient step: both gradients are evaluated at
/// the pre-step point; the generator descends, the discriminator ascends and
/// is repaired.
pub fn simultaneous_gradient_step(
    gen: &GeneratorParams,
    disc: &DiscriminatorParams,
    target: &GeneratorParams,
    lr_gen: f64,
    lr_disc: f64,
) -> (GeneratorParams, DiscriminatorParams) {
    let (g1, g2) = grad_generator(gen, disc, target);
    let (dl1, dr1, dl2, dr2) = grad_discriminator(gen, disc, target);
    let gen_next = GeneratorParams { mu1: gen.mu1 - lr_gen * g1, mu2: gen.mu2 - lr_gen * g2 };
    let disc_next = repair([
        disc.l1 + lr_disc * dl1,
        disc.r1 + lr_disc * dr1,
        disc.l2 + lr_disc * dl2,
        disc.r2 + lr_disc * dr2,
    ])
    .expect("finite bounds stay finite under a finite step");
    (gen_next, disc_next)
}

/// Alternating (Gauss-Seidel) variant kept for comparison: the discriminator
/// moves first, then the generator sees the updated discriminator.
pub fn alternating_gradient_step(
    gen: &GeneratorParams,
    disc: &DiscriminatorParams,
    target: &GeneratorParams,
    lr_gen: f64,
    lr_disc: f64,
) -> (GeneratorParams, DiscriminatorParams) {
    let (dl1, dr1, dl2, dr2) = grad_discriminator(gen, disc, target);
    let disc_next = repair([
        disc.l1 + lr_disc * dl1,
        disc.r1 + lr_disc * dr1,
        disc.l2 + lr_disc * dl2,
        disc.r2 + lr_disc * dr2,
    ])
    .expect("finite bounds stay finite under a finite step");
    let (g1, g2) = grad_generator(gen, &disc_next, target);
    let gen_next = GeneratorParams { mu1: gen.mu1 - lr_gen * g1, mu2: gen.mu2 - lr_gen * g2 };
    (gen_next, disc_next)
}

/// The theoretical GAN problem wired up as a coevolution game.
#[derive(Debug, Clone)]
pub struct TheoreticalGan {
    pub target: GeneratorParams,
    pub eval: EvaluationMode,
}

impl TheoreticalGan {
    pub fn closed_form(target: GeneratorParams) -> Self {
        TheoreticalGan { target, eval: EvaluationMode::ClosedForm }
    }
}

fn mix_seed(base: u64, values: &[f64]) -> u64 {
    // splitmix64 over the parameter bits so repeated Monte Carlo evaluations
    // of different pairs use distinct deterministic streams
    let mut h = base;
    for v in values {
        h ^= v.to_bits();
        h = h.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        h = z ^ (z >> 31);
    }
    h
}

impl crate::coevo::MinimaxProblem for TheoreticalGan {
    type Gen = GeneratorParams;
    type Disc = DiscriminatorParams;

    fn loss(&self, gen: &GeneratorParams, disc: &DiscriminatorParams) -> f64 {
        match self.eval {
            EvaluationMode::ClosedForm => loss_closed_form(gen, disc, &self.target),
            EvaluationMode::MonteCarlo { sample_count, seed } => {
                let seed = mix_seed(
                    seed,
                    &[gen.mu1, gen.mu2, disc.l1, disc.r1, disc.l2, disc.r2],
                );
                loss_monte_carlo(gen, disc, &self.target, sample_count.max(1), seed)
            }
        }
    }

    fn gradient_mutate_gen(
        &self,
        gen: &GeneratorParams,
        opponents: &[&DiscriminatorParams],
        lr: f64,
    ) -> GeneratorParams {
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for disc in opponents {
            let (a, b) = grad_generator(gen, disc, &self.target);
            d1 += a;
            d2 += b;
        }
        GeneratorParams { mu1: gen.mu1 - lr * d1, mu2: gen.mu2 - lr * d2 }
    }

    fn gradient_mutate_disc(
        &self,
        disc: &DiscriminatorParams,
        opponents: &[&GeneratorParams],
        lr: f64,
    ) -> DiscriminatorParams {
        let mut d = [0.0; 4];
        for gen in opponents {
            let (a, b, c, e) = grad_discriminator(gen, disc, &self.target);
            d[0] += a;
            d[1] += b;
            d[2] += c;
            d[3] += e;
        }
        repair([
            disc.l1 + lr * d[0],
            disc.r1 + lr * d[1],
            disc.l2 + lr * d[2],
            disc.r2 + lr * d[3],
        ])
        .expect("finite bounds stay finite under a finite step")
    }

    fn gaussian_mutate_gen(
        &self,
        gen: &GeneratorParams,
        sigma: f64,
        rng: &mut ChaCha8Rng,
    ) -> GeneratorParams {
        let n = rand_distr::Normal::new(0.0, sigma).expect("valid sigma");
        GeneratorParams {
            mu1: gen.mu1 + rng.sample::<f64, _>(n),
            mu2: gen.mu2 + rng.sample::<f64, _>(n),
        }
    }

    fn gaussian_mutate_disc(
        &self,
        disc: &DiscriminatorParams,
        sigma: f64,
        rng: &mut ChaCha8Rng,
    ) -> DiscriminatorParams {
        let n = rand_distr::Normal::new(0.0, sigma).expect("valid sigma");
        repair([
            disc.l1 + rng.sample::<f64, _>(n),
            disc.r1 + rng.sample::<f64, _>(n),
            disc.l2 + rng.sample::<f64, _>(n),
            disc.r2 + rng.sample::<f64, _>(n),
        ])
        .expect("finite perturbation")
    }
}
