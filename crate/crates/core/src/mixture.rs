//! Two-class Gaussian mixture data with an exact Bayes oracle.
//!
//! The usual textbook mixture simulation: ten means per class are drawn
//! from `N((1, 0), I)` for the positive class and `N((0, 1), I)` for the
//! negative class; each observation picks one of its class's means
//! uniformly at random and adds `N(0, I / 5)` noise. All of these constants
//! live in [`MixtureConfig`].
//!
//! Randomness comes from ChaCha8 ([`rand_chacha::ChaCha8Rng`]) seeded with
//! `seed_from_u64`, one ChaCha stream per purpose, and normal variates from
//! `rand_distr::StandardNormal` (Ziggurat). Pinning both makes every draw a
//! pure function of the seed on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::loss::logistic;

/// Constants of the mixture simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureConfig {
    pub components_per_class: usize,
    pub center_pos: [f64; 2],
    pub center_neg: [f64; 2],
    /// Standard deviation of the means around their class center.
    pub mean_sd: f64,
    /// Standard deviation of each observation around its mean.
    pub component_sd: f64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            components_per_class: 10,
            center_pos: [1.0, 0.0],
            center_neg: [0.0, 1.0],
            mean_sd: 1.0,
            component_sd: (1.0f64 / 5.0).sqrt(),
        }
    }
}

/// ChaCha stream used for drawing mixture means.
const STREAM_MODEL: u64 = 0;
/// ChaCha stream used for drawing observations.
const STREAM_DATA: u64 = 1;
/// Monte Carlo streams start here, one per block.
const STREAM_MONTE_CARLO: u64 = 1 << 32;
/// Draws per Monte Carlo block.
const MC_BLOCK: usize = 10_000;

/// Seeded generator for one named purpose.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a tag into a seed (SplitMix64 finalizer), for deriving independent
/// seeds such as the training and test sets of one experiment.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Class-conditional Gaussian mixtures with equal class priors.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub means_pos: Vec<[f64; 2]>,
    pub means_neg: Vec<[f64; 2]>,
    pub component_sd: f64,
}

impl MixtureModel {
    pub fn new(means_pos: Vec<[f64; 2]>, means_neg: Vec<[f64; 2]>, component_sd: f64) -> Result<Self> {
        if means_pos.is_empty() || means_neg.is_empty() {
            return Err(Error::input("each class needs at least one mean"));
        }
        if !(component_sd > 0.0 && component_sd.is_finite()) {
            return Err(Error::input(format!(
                "component standard deviation must be > 0, got {component_sd}"
            )));
        }
        Ok(MixtureModel {
            means_pos,
            means_neg,
            component_sd,
        })
    }

    fn means(&self, label: f64) -> &[[f64; 2]] {
        if label > 0.0 {
            &self.means_pos
        } else {
            &self.means_neg
        }
    }

    /// One observation from the class with the given label.
    pub fn sample_point<R: Rng>(&self, label: f64, rng: &mut R) -> [f64; 2] {
        let means = self.means(label);
        let m = means[rng.random_range(0..means.len())];
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        [m[0] + self.component_sd * e0, m[1] + self.component_sd * e1]
    }

    /// `log sum_k exp(-|x - m_k|² / (2 sd²))` over one class's means.
    fn log_density(&self, label: f64, x: [f64; 2]) -> f64 {
        let two_var = 2.0 * self.component_sd * self.component_sd;
        let terms: Vec<f64> = self
            .means(label)
            .iter()
            .map(|m| -squared_distance(&x, m) / two_var)
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
            - (self.means(label).len() as f64).ln()
    }
}

/// Draws the twenty mixture means.
pub fn sample_mixture_model(seed: u64) -> MixtureModel {
    sample_mixture_model_with(&MixtureConfig::default(), seed)
}

pub fn sample_mixture_model_with(config: &MixtureConfig, seed: u64) -> MixtureModel {
    let mut rng = rng_for(seed, STREAM_MODEL);
    let mut draw = |center: [f64; 2]| -> Vec<[f64; 2]> {
        (0..config.components_per_class)
            .map(|_| {
                let e0: f64 = rng.sample(StandardNormal);
                let e1: f64 = rng.sample(StandardNormal);
                [center[0] + config.mean_sd * e0, center[1] + config.mean_sd * e1]
            })
            .collect()
    };
    let means_pos = draw(config.center_pos);
    let means_neg = draw(config.center_neg);
    MixtureModel {
        means_pos,
        means_neg,
        component_sd: config.component_sd,
    }
}

/// `n_per_class` positives followed by `n_per_class` negatives.
pub fn sample_dataset(model: &MixtureModel, n_per_class: usize, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::input("n_per_class must be >= 1"));
    }
    let mut rng = rng_for(seed, STREAM_DATA);
    let mut data = Vec::with_capacity(4 * n_per_class);
    let mut y = Vec::with_capacity(2 * n_per_class);
    for label in [1.0, -1.0] {
        for _ in 0..n_per_class {
            data.extend_from_slice(&model.sample_point(label, &mut rng));
            y.push(label);
        }
    }
    Dataset::new(
        Matrix::from_vec(2 * n_per_class, 2, data)?,
        y,
        Provenance::Generated { seed },
    )
}

/// `n` draws from a 1-D standard normal, as an `n x 1` dataset with
/// alternating labels (the labels carry no information).
pub fn sample_standard_normal_1d(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::input("sample size must be >= 1"));
    }
    let mut rng = rng_for(seed, STREAM_DATA);
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    Dataset::new(Matrix::from_vec(n, 1, x)?, y, Provenance::Generated { seed })
}

/// `P(y = +1 | x)` under equal priors.
pub fn bayes_posterior(model: &MixtureModel, x: [f64; 2]) -> f64 {
    logistic(model.log_density(1.0, x) - model.log_density(-1.0, x))
}

/// The Bayes rule `+1` iff the posterior exceeds one half.
pub fn bayes_classify(model: &MixtureModel, x: [f64; 2]) -> f64 {
    if bayes_posterior(model, x) > 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Monte Carlo estimate of a misclassification rate with its binomial
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub draws: usize,
}

impl ErrorEstimate {
    pub fn from_counts(errors: usize, draws: usize) -> Self {
        let p = errors as f64 / draws as f64;
        ErrorEstimate {
            estimate: p,
            std_error: (p * (1.0 - p) / draws as f64).sqrt(),
            draws,
        }
    }
}

/// Error of the Bayes rule on `n_mc` fresh draws (labels by a fair coin).
///
/// Draws come in fixed blocks of 10 000, block `b` using ChaCha stream
/// `2^32 + b`; blocks are evaluated in parallel and summed, so the estimate
/// does not depend on the number of threads.
pub fn bayes_error(model: &MixtureModel, n_mc: usize, seed: u64) -> Result<ErrorEstimate> {
    if n_mc < 1000 {
        return Err(Error::input(format!("n_mc must be >= 1000, got {n_mc}")));
    }
    let blocks = n_mc.div_ceil(MC_BLOCK);
    let errors: usize = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let draws = MC_BLOCK.min(n_mc - b * MC_BLOCK);
            let mut rng = rng_for(seed, STREAM_MONTE_CARLO + b as u64);
            let mut errors = 0usize;
            for _ in 0..draws {
                let label = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let x = model.sample_point(label, &mut rng);
                if bayes_classify(model, x) != label {
                    errors += 1;
                }
            }
            errors
        })
        .sum();
    Ok(ErrorEstimate::from_counts(errors, n_mc))
}
