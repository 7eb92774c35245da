//! Generator-neighborhood mixtures: the performance metric g, (1+1)-ES
//! evolution of the mixture weight simplex, and final best-mixture selection.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use thiserror::Error;

use crate::gaussmix::UnitGaussianMixture;
use crate::problem::GeneratorParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixtureError {
    #[error("weights must be a simplex: {0}")]
    NotSimplex(String),
    #[error("generator count {gens} does not match weight count {weights}")]
    LengthMismatch { gens: usize, weights: usize },
}

pub const SIMPLEX_TOL: f64 = 1e-9;

/// A simplex of length N: nonnegative weights summing to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights {
    w: Vec<f64>,
}

impl MixtureWeights {
    pub fn new(w: Vec<f64>) -> Result<Self, MixtureError> {
        if w.is_empty() {
            return Err(MixtureError::NotSimplex("empty weight vector".into()));
        }
        let mut sum = 0.0;
        for &x in &w {
            if !x.is_finite() || x < 0.0 {
                return Err(MixtureError::NotSimplex(format!("weight {x}")));
            }
            sum += x;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(MixtureError::NotSimplex(format!("sum {sum}")));
        }
        Ok(MixtureWeights { w })
    }

    pub fn uniform(n: usize) -> Self {
        MixtureWeights { w: vec![1.0 / n as f64; n] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// The mixture density of N two-component generators under weights w:
/// a 2N-component unit Gaussian mixture with weights (w_i/2, w_i/2).
pub fn neighborhood_density(
    gens: &[GeneratorParams],
    w: &MixtureWeights,
) -> Result<UnitGaussianMixture, MixtureError> {
    if gens.len() != w.len() {
        return Err(MixtureError::LengthMismatch { gens: gens.len(), weights: w.len() });
    }
    let mut means = Vec::with_capacity(2 * gens.len());
    let mut weights = Vec::with_capacity(2 * gens.len());
    for (g, &wi) in gens.iter().zip(w.as_slice()) {
        means.push(g.mu1);
        means.push(g.mu2);
        weights.push(0.5 * wi);
        weights.push(0.5 * wi);
    }
    // renormalize away accumulated rounding so the gaussmix 1e-12 gate holds
    let sum: f64 = weights.iter().sum();
    for x in &mut weights {
        *x /= sum;
    }
    UnitGaussianMixture::new(means, weights)
        .map_err(|e| MixtureError::NotSimplex(e.to_string()))
}

/// Mixture quality: negative L2 distance between the mixture density and the
/// target density, trapezoid rule on [lo, hi] with the given step. Maximum 0,
/// attained when the densities coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegL2DensityDistance {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_step: f64,
}

impl Default for NegL2DensityDistance {
    fn default() -> Self {
        NegL2DensityDistance { grid_lo: -15.0, grid_hi: 15.0, grid_step: 0.01 }
    }
}

/// A scalar quality measure over a weighted generator neighborhood; higher is
/// better. Implement this to plug in a custom metric.
pub trait PerformanceMetric {
    fn evaluate(
        &self,
        gens: &[GeneratorParams],
        w: &MixtureWeights,
        target: &GeneratorParams,
    ) -> Result<f64, MixtureError>;
}

impl PerformanceMetric for NegL2DensityDistance {
    fn evaluate(
        &self,
        gens: &[GeneratorParams],
        w: &MixtureWeights,
        target: &GeneratorParams,
    ) -> Result<f64, MixtureError> {
        let mix = neighborhood_density(gens, w)?;
        let tmix = target.mixture();
        let n = ((self.grid_hi - self.grid_lo) / self.grid_step).round() as usize;
        let sq = |x: f64| {
            let d = mix.pdf(x) - tmix.pdf(x);
            d * d
        };
        let mut acc = 0.0;
        let mut prev = sq(self.grid_lo);
        for i in 1..=n {
            let x = self.grid_lo + i as f64 * self.grid_step;
            let cur = sq(x);
            acc += 0.5 * (prev + cur) * self.grid_step;
            prev = cur;
        }
        Ok(-acc)
    }
}

pub fn metric_g<M: PerformanceMetric>(
    gens: &[GeneratorParams],
    w: &MixtureWeights,
    target: &GeneratorParams,
    metric: &M,
) -> Result<f64, MixtureError> {
    metric.evaluate(gens, w, target)
}

pub const DEFAULT_WEIGHT_SIGMA: f64 = 0.01;

/// One (1+1)-ES step on the weight simplex: Gaussian-perturb, clamp negatives
/// to zero, renormalize, keep the candidate only on strict improvement.
/// Degenerate candidates (everything clamped to zero) are rejected.
pub fn es_step<M: PerformanceMetric>(
    w: &MixtureWeights,
    gens: &[GeneratorParams],
    target: &GeneratorParams,
    metric: &M,
    sigma_w: f64,
    rng: &mut ChaCha8Rng,
) -> Result<MixtureWeights, MixtureError> {
    let normal = Normal::new(0.0, sigma_w).expect("valid sigma");
    let mut cand: Vec<f64> =
        w.as_slice().iter().map(|&x| (x + rng.sample::<f64, _>(normal)).max(0.0)).collect();
    let sum: f64 = cand.iter().sum();
    if sum <= 0.0 {
        return Ok(w.clone());
    }
    for x in &mut cand {
        *x /= sum;
    }
    let cand = MixtureWeights { w: cand };
    let g_old = metric.evaluate(gens, w, target)?;
    let g_new = metric.evaluate(gens, &cand, target)?;
    if g_new > g_old {
        Ok(cand)
    } else {
        Ok(w.clone())
    }
}

/// (1+1)-ES step with 1/5th-rule step-size adaptation; tracks its own sigma.
#[derive(Debug, Clone)]
pub struct AdaptiveEs {
    pub sigma: f64,
    pub window: u32,
    successes: u32,
    trials: u32,
}

impl AdaptiveEs {
    pub fn new(sigma: f64) -> Self {
        AdaptiveEs { sigma, window: 10, successes: 0, trials: 0 }
    }

    pub fn step<M: PerformanceMetric>(
        &mut self,
        w: &MixtureWeights,
        gens: &[GeneratorParams],
        target: &GeneratorParams,
        metric: &M,
        rng: &mut ChaCha8Rng,
    ) -> Result<MixtureWeights, MixtureError> {
        let next = es_step(w, gens, target, metric, self.sigma, rng)?;
        self.trials += 1;
        if next != *w {
            self.successes += 1;
        }
        if self.trials >= self.window {
            let rate = self.successes as f64 / self.trials as f64;
            if rate > 0.2 {
                self.sigma *= 1.22;
            } else if rate < 0.2 {
                self.sigma /= 1.22;
            }
            self.successes = 0;
            self.trials = 0;
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn target() -> GeneratorParams {
        GeneratorParams::new(-3.0, 3.0).unwrap()
    }

    #[test]
    fn single_generator_density_is_its_own_mixture() {
        let g = GeneratorParams::new(-1.0, 2.0).unwrap();
        let w = MixtureWeights::new(vec![1.0]).unwrap();
        let mix = neighborhood_density(&[g], &w).unwrap();
        let own = g.mixture();
        for x in [-3.0, -1.0, 0.0, 2.0, 5.0] {
            assert!((mix.pdf(x) - own.pdf(x)).abs() <= 1e-15);
        }
    }

    #[test]
    fn zero_weight_component_contributes_nothing() {
        let a = GeneratorParams::new(0.0, 0.0).unwrap();
        let b = GeneratorParams::new(100.0, 100.0).unwrap();
        let w = MixtureWeights::new(vec![1.0, 0.0]).unwrap();
        let mix = neighborhood_density(&[a, b], &w).unwrap();
        assert!((mix.pdf(100.0) - a.mixture().pdf(100.0)).abs() <= 1e-15);
    }

    #[test]
    fn density_integrates_to_one() {
        let gens = [
            GeneratorParams::new(-2.0, 1.0).unwrap(),
            GeneratorParams::new(0.5, 3.0).unwrap(),
        ];
        let w = MixtureWeights::new(vec![0.3, 0.7]).unwrap();
        let mix = neighborhood_density(&gens, &w).unwrap();
        let step = 0.01;
        let n = (100.0 / step) as usize;
        let mut sum = 0.0;
        for i in 0..n {
            let a = -50.0 + i as f64 * step;
            sum += 0.5 * (mix.pdf(a) + mix.pdf(a + step)) * step;
        }
        assert!((sum - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn metric_zero_at_target() {
        let w = MixtureWeights::new(vec![1.0]).unwrap();
        let m = NegL2DensityDistance::default();
        let g = metric_g(&[target()], &w, &target(), &m).unwrap();
        assert!(g.abs() <= 1e-10, "g={g}");
    }

    #[test]
    fn metric_never_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = NegL2DensityDistance::default();
        for _ in 0..50 {
            let gens: Vec<_> = (0..3)
                .map(|_| {
                    GeneratorParams::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0))
                        .unwrap()
                })
                .collect();
            let w = MixtureWeights::uniform(3);
            assert!(metric_g(&gens, &w, &target(), &m).unwrap() <= 0.0);
        }
    }

    #[test]
    fn metric_matches_refined_quadrature() {
        let gens = [
            GeneratorParams::new(-2.5, 2.0).unwrap(),
            GeneratorParams::new(0.0, 3.5).unwrap(),
        ];
        let w = MixtureWeights::new(vec![0.4, 0.6]).unwrap();
        let coarse = NegL2DensityDistance::default();
        let fine = NegL2DensityDistance { grid_step: 0.001, ..Default::default() };
        let a = metric_g(&gens, &w, &target(), &coarse).unwrap();
        let b = metric_g(&gens, &w, &target(), &fine).unwrap();
        assert!((a - b).abs() <= 1e-4, "a={a} b={b}");
    }

    #[test]
    fn metric_invariant_under_joint_permutation() {
        let gens = [
            GeneratorParams::new(-2.5, 2.0).unwrap(),
            GeneratorParams::new(0.0, 3.5).unwrap(),
        ];
        let w = MixtureWeights::new(vec![0.4, 0.6]).unwrap();
        let gens_p = [gens[1], gens[0]];
        let w_p = MixtureWeights::new(vec![0.6, 0.4]).unwrap();
        let m = NegL2DensityDistance::default();
        let a = metric_g(&gens, &w, &target(), &m).unwrap();
        let b = metric_g(&gens_p, &w_p, &target(), &m).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn es_zero_sigma_keeps_incumbent() {
        let gens = [target(), GeneratorParams::new(0.0, 1.0).unwrap()];
        let w = MixtureWeights::uniform(2);
        let m = NegL2DensityDistance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let next = es_step(&w, &gens, &target(), &m, 0.0, &mut rng).unwrap();
        assert_eq!(next, w);
    }

    #[test]
    fn es_single_component_stays_one() {
        let gens = [GeneratorParams::new(0.0, 1.0).unwrap()];
        let w = MixtureWeights::new(vec![1.0]).unwrap();
        let m = NegL2DensityDistance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let next = es_step(&w, &gens, &target(), &m, 0.01, &mut rng).unwrap();
            assert_eq!(next.as_slice(), &[1.0]);
        }
    }

    #[test]
    fn es_acceptance_is_monotone_and_preserves_simplex() {
        let gens = [
            target(),
            GeneratorParams::new(0.0, 1.0).unwrap(),
            GeneratorParams::new(5.0, -5.0).unwrap(),
        ];
        let m = NegL2DensityDistance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut w = MixtureWeights::uniform(3);
        let mut g_prev = metric_g(&gens, &w, &target(), &m).unwrap();
        for _ in 0..500 {
            w = es_step(&w, &gens, &target(), &m, 0.01, &mut rng).unwrap();
            let sum: f64 = w.as_slice().iter().sum();
            assert!((sum - 1.0).abs() <= SIMPLEX_TOL);
            assert!(w.as_slice().iter().all(|&x| x >= 0.0));
            let g = metric_g(&gens, &w, &target(), &m).unwrap();
            assert!(g >= g_prev - 1e-15);
            g_prev = g;
        }
        // with the target itself in the pool, the ES should pile weight on it
        assert!(w.as_slice()[0] > 0.5, "weights {:?}", w.as_slice());
    }

    #[test]
    fn rejects_bad_simplex() {
        assert!(MixtureWeights::new(vec![0.5, 0.4]).is_err());
        assert!(MixtureWeights::new(vec![-0.1, 1.1]).is_err());
        assert!(MixtureWeights::new(vec![]).is_err());
    }
}
