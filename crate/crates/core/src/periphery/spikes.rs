use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::fiber::{FiberTag, RateTrace};
use crate::error::{Error, Result};
use crate::seeding::rng_for;

/// Post-stimulus time histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psth {
    pub counts: Vec<u32>,
    pub bin_width_s: f64,
    pub cf_hz: f64,
    pub fiber: FiberTag,
}

impl Psth {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Above this mean, draws switch from CDF inversion to `rand_distr`.
const INVERSION_LIMIT: f64 = 30.0;

/// One Poisson draw. Small means use inversion of a single uniform so that
/// draws sharing a random stream are monotonically coupled in the mean.
pub(crate) fn poisson_draw<R: Rng>(rng: &mut R, mean: f64) -> u32 {
    let u: f64 = rng.random();
    if mean <= 0.0 {
        return 0;
    }
    if mean > INVERSION_LIMIT {
        return Poisson::new(mean).expect("finite positive mean").sample(rng) as u32;
    }
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u32;
    while u > cdf && k < 1000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        if p < 1e-300 {
            break;
        }
    }
    k
}

/// Mean spike count per bin of `bin_samples` samples; the trailing partial
/// bin is dropped.
pub(crate) fn bin_means(rates: &[f64], bin_samples: usize, dt: f64) -> Vec<f64> {
    rates
        .chunks_exact(bin_samples)
        .map(|c| c.iter().sum::<f64>() * dt)
        .collect()
}

pub(crate) fn samples_per_bin(bin_width_s: f64, sample_rate: f64) -> Result<usize> {
    let ratio = bin_width_s * sample_rate;
    let n = ratio.round();
    if !(n >= 1.0) || (ratio - n).abs() > 1e-6 * n {
        return Err(Error::invalid(format!(
            "bin width {bin_width_s} s is not a whole number of samples at {sample_rate} Hz"
        )));
    }
    Ok(n as usize)
}

/// Spike counts for a fiber driven by `means` (expected spikes per bin for
/// a single presentation) over `n_reps` presentations. The sum of `n_reps`
/// independent Poisson counts is drawn directly as one Poisson count of
/// `n_reps` times the mean.
pub(crate) fn draw_counts(means: &[f64], n_reps: u32, seed: u64, coords: &[u64]) -> Vec<u32> {
    let mut rng = rng_for(seed, coords);
    let reps = n_reps as f64;
    means.iter().map(|&m| poisson_draw(&mut rng, m * reps)).collect()
}

/// Inhomogeneous Poisson PSTH of `rate`, summed over `n_reps` repetitions.
pub fn spike_psth(rate: &RateTrace, bin_width_s: f64, n_reps: u32, seed: u64) -> Result<Psth> {
    if n_reps == 0 {
        return Err(Error::invalid("n_reps must be at least 1"));
    }
    let bin = samples_per_bin(bin_width_s, rate.sample_rate)?;
    let means = bin_means(&rate.rates, bin, 1.0 / rate.sample_rate);
    Ok(Psth {
        counts: draw_counts(&means, n_reps, seed, &[]),
        bin_width_s,
        cf_hz: rate.cf_hz,
        fiber: rate.fiber,
    })
}
