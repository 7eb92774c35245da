//! Exact probability and density computations for unit-variance Gaussian
//! mixtures on intervals.
//!
//! Everything here is a pure function; the hot path (interval probabilities
//! and their derivatives w.r.t. a component mean) is evaluated in closed form
//! through a high-accuracy erf/erfc pair. Interval bounds may be infinite,
//! with Phi(+inf) = 1 and Phi(-inf) = 0 exactly.

mod erf;

pub use erf::{erf, erfc};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussMixError {
    #[error("non-finite input: {0}")]
    NonFinite(f64),
    #[error("invalid interval: lo {lo} > hi {hi}")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),
    #[error("mixture must have at least one component")]
    EmptyMixture,
    #[error("means/weights length mismatch: {means} vs {weights}")]
    LengthMismatch { means: usize, weights: usize },
}

/// A closed interval on the real line. Bounds may be infinite; `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, GaussMixError> {
        if lo.is_nan() {
            return Err(GaussMixError::NonFinite(lo));
        }
        if hi.is_nan() {
            return Err(GaussMixError::NonFinite(hi));
        }
        if lo > hi {
            return Err(GaussMixError::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Standard normal CDF, absolute error below 1e-12 everywhere.
pub fn normal_cdf(z: f64) -> Result<f64, GaussMixError> {
    if !z.is_finite() {
        return Err(GaussMixError::NonFinite(z));
    }
    Ok(cdf_extended(z))
}

/// Phi extended to the compactified line: Phi(-inf) = 0, Phi(+inf) = 1.
fn cdf_extended(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal density; 0 at infinite arguments.
pub fn normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// A mixture of unit-variance Gaussians. Weights are validated once, on
/// construction: nonnegative and summing to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitGaussianMixture {
    means: Vec<f64>,
    weights: Vec<f64>,
}

impl UnitGaussianMixture {
    pub fn new(means: Vec<f64>, weights: Vec<f64>) -> Result<Self, GaussMixError> {
        if means.is_empty() {
            return Err(GaussMixError::EmptyMixture);
        }
        if means.len() != weights.len() {
            return Err(GaussMixError::LengthMismatch {
                means: means.len(),
                weights: weights.len(),
            });
        }
        for &m in &means {
            if !m.is_finite() {
                return Err(GaussMixError::NonFinite(m));
            }
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() {
                return Err(GaussMixError::NonFinite(w));
            }
            if w < 0.0 {
                return Err(GaussMixError::InvalidWeights(format!("negative weight {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(GaussMixError::InvalidWeights(format!("weights sum to {sum}")));
        }
        Ok(UnitGaussianMixture { means, weights })
    }

    /// Equal-weight mixture; used for the two-component generator density.
    pub fn equal_weight(means: Vec<f64>) -> Result<Self, GaussMixError> {
        let k = means.len();
        let w = vec![1.0 / k as f64; k];
        UnitGaussianMixture::new(means, w)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Probability mass of `iv` under the mixture,
    /// sum_k w_k (Phi(hi - mu_k) - Phi(lo - mu_k)). Additive over disjoint
    /// intervals; clamped to [0, 1] against rounding at the edges.
    pub fn interval_prob(&self, iv: &Interval) -> f64 {
        let mut p = 0.0;
        for (&mu, &w) in self.means.iter().zip(&self.weights) {
            p += w * (cdf_extended(iv.hi - mu) - cdf_extended(iv.lo - mu));
        }
        p.clamp(0.0, 1.0)
    }

    /// Mixture density sum_k w_k phi(x - mu_k).
    pub fn pdf(&self, x: f64) -> f64 {
        self.means
            .iter()
            .zip(&self.weights)
            .map(|(&mu, &w)| w * normal_pdf(x - mu))
            .sum()
    }
}

/// Derivative of P_{N(mu,1)}(iv) with respect to mu:
/// d/dmu [Phi(hi - mu) - Phi(lo - mu)] = phi(lo - mu) - phi(hi - mu).
pub fn prob_deriv_wrt_mean(mean: f64, iv: &Interval) -> f64 {
    normal_pdf(iv.lo - mean) - normal_pdf(iv.hi - mean)
}

/// Convenience wrappers matching the flat call signatures used across the
/// crate.
pub fn mixture_interval_prob(mix: &UnitGaussianMixture, iv: &Interval) -> f64 {
    mix.interval_prob(iv)
}

pub fn mixture_pdf(mix: &UnitGaussianMixture, x: f64) -> f64 {
    mix.pdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: adaptive Simpson quadrature of the standard normal
    // pdf. Used only to freeze expected values, never in the implementation
    // path.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
    }

    fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, whole: f64, depth: u32) -> f64 {
        let c = 0.5 * (a + b);
        let left = simpson(f, a, c);
        let right = simpson(f, c, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            left + right + (left + right - whole) / 15.0
        } else {
            adaptive(f, a, c, eps / 2.0, left, depth - 1)
                + adaptive(f, c, b, eps / 2.0, right, depth - 1)
        }
    }

    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        adaptive(&f, a, b, 1e-14, simpson(&f, a, b), 48)
    }

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(normal_cdf(0.0).unwrap(), 0.5);
    }

    #[test]
    fn cdf_symmetry() {
        for z in [-4.0, -1.3, -0.2, 0.7, 2.9, 6.5] {
            let a = normal_cdf(z).unwrap();
            let b = normal_cdf(-z).unwrap();
            assert!((a + b - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn cdf_matches_quadrature_oracle() {
        // Phi(1) frozen from adaptive quadrature of the pdf over [-50, 1].
        let expected = quad(normal_pdf, -50.0, 1.0);
        assert!((expected - 0.8413447460685429).abs() < 1e-12);
        assert!((normal_cdf(1.0).unwrap() - expected).abs() <= 1e-12);
        for z in [-8.0, -3.5, -1.0, 0.25, 2.0, 4.75] {
            let oracle = quad(normal_pdf, -50.0, z);
            assert!((normal_cdf(z).unwrap() - oracle).abs() <= 1e-12, "z={z}");
        }
    }

    #[test]
    fn cdf_rejects_non_finite() {
        assert!(normal_cdf(f64::NAN).is_err());
        assert!(normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_monotone() {
        let mut prev = -1.0;
        let mut z = -10.0;
        while z <= 10.0 {
            let v = normal_cdf(z).unwrap();
            assert!(v >= prev);
            prev = v;
            z += 0.01;
        }
    }

    #[test]
    fn zero_length_interval_has_zero_mass() {
        let mix = UnitGaussianMixture::equal_weight(vec![0.0, 2.0]).unwrap();
        let iv = Interval::new(1.3, 1.3).unwrap();
        assert_eq!(mix.interval_prob(&iv), 0.0);
    }

    #[test]
    fn total_mass_is_one() {
        let mix = UnitGaussianMixture::equal_weight(vec![0.0, 0.0]).unwrap();
        let iv = Interval::new(-50.0, 50.0).unwrap();
        assert!((mix.interval_prob(&iv) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn infinite_interval_mass() {
        let mix = UnitGaussianMixture::equal_weight(vec![-1.0, 2.5]).unwrap();
        let all = Interval::new(f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(mix.interval_prob(&all), 1.0);
        let left = Interval::new(f64::NEG_INFINITY, 0.0).unwrap();
        let right = Interval::new(0.0, f64::INFINITY).unwrap();
        assert!((mix.interval_prob(&left) + mix.interval_prob(&right) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn interval_prob_matches_monte_carlo() {
        use rand::prelude::*;
        use rand_distr::StandardNormal;
        let mix = UnitGaussianMixture::equal_weight(vec![-1.0, 2.5]).unwrap();
        let iv = Interval::new(-2.0, 0.0).unwrap();
        let n = 10_000_000usize;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut hits = 0u64;
        for _ in 0..n {
            let mu = if rng.gen_bool(0.5) { -1.0 } else { 2.5 };
            let x: f64 = mu + rng.sample::<f64, _>(StandardNormal);
            if iv.contains(x) {
                hits += 1;
            }
        }
        let p_hat = hits as f64 / n as f64;
        let p = mix.interval_prob(&iv);
        let se = (p_hat * (1.0 - p_hat) / n as f64).sqrt();
        assert!((p - p_hat).abs() <= 3.0 * se, "p={p} p_hat={p_hat} se={se}");
    }

    #[test]
    fn pdf_at_component_mean() {
        // 1/sqrt(2*pi) by direct evaluation.
        let mix = UnitGaussianMixture::new(vec![0.0], vec![1.0]).unwrap();
        assert!((mix.pdf(0.0) - 0.3989422804014327).abs() <= 1e-15);
    }

    #[test]
    fn pdf_symmetric_about_mean() {
        let mu = 1.7;
        let mix = UnitGaussianMixture::new(vec![mu], vec![1.0]).unwrap();
        for x in [-3.0, 0.0, 1.0, 2.5] {
            assert!((mix.pdf(x) - mix.pdf(2.0 * mu - x)).abs() <= 1e-15);
        }
    }

    #[test]
    fn pdf_integrates_to_one() {
        let mix = UnitGaussianMixture::equal_weight(vec![-2.0, 3.0]).unwrap();
        let step = 0.01;
        let mut sum = 0.0;
        let n = (100.0 / step) as usize;
        for i in 0..n {
            let a = -50.0 + i as f64 * step;
            sum += 0.5 * (mix.pdf(a) + mix.pdf(a + step)) * step;
        }
        assert!((sum - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn deriv_zero_when_centered() {
        let iv = Interval::new(-1.0, 3.0).unwrap();
        assert!(prob_deriv_wrt_mean(1.0, &iv).abs() <= 1e-12);
    }

    #[test]
    fn deriv_positive_left_of_interval() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert!(prob_deriv_wrt_mean(-10.0, &iv) > 0.0);
    }

    #[test]
    fn deriv_matches_finite_differences() {
        let iv = Interval::new(1.0, 2.0).unwrap();
        let h = 1e-5;
        let prob = |mu: f64| {
            let mix = UnitGaussianMixture::new(vec![mu], vec![1.0]).unwrap();
            mix.interval_prob(&iv)
        };
        let fd = (prob(0.0 + h) - prob(0.0 - h)) / (2.0 * h);
        let an = prob_deriv_wrt_mean(0.0, &iv);
        assert!((fd - an).abs() / an.abs().max(1e-12) <= 1e-5);
    }

    #[test]
    fn interval_rejects_bad_bounds() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        assert!(UnitGaussianMixture::new(vec![0.0], vec![0.9]).is_err());
        assert!(UnitGaussianMixture::new(vec![0.0, 1.0], vec![0.7, -0.3]).is_err());
        assert!(UnitGaussianMixture::new(vec![], vec![]).is_err());
        assert!(UnitGaussianMixture::new(vec![0.0], vec![0.5, 0.5]).is_err());
    }
}
