//! Simplified phenomenological auditory periphery.
//!
//! Pressure (Pa) -> gammatone filter per characteristic frequency, with
//! OHC loss lowering gain and widening the filter -> half-wave
//! rectification and a phase-locking low-pass -> static sigmoid rate-level
//! function per spontaneous-rate class -> Poisson spike counts.
//!
//! There is no middle ear, adaptation, refractoriness or synaptic noise
//! model. Externally computed neurograms can be imported through the
//! neurogram file format instead.

mod audiogram;
mod bank;
mod cochlea;
mod fiber;
mod spikes;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stimulus::P_REF;

pub use audiogram::{ohc_gain_reduction, Audiogram, AUDIOMETRIC_FREQS};
pub use bank::{simulate_fiber_bank, FiberBank, FiberPopulation, TypeResponse};
pub use cochlea::{band_drive, band_drive_for_loss, erb, CochlearParams, Drive};
pub use fiber::{
    drive_level_db, fiber_rate, rate_at_level, CndProfile, FiberParams, FiberSet, FiberTag,
    FiberType, RateTrace,
};
pub use spikes::{spike_psth, Psth};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeripheryConfig {
    pub n_cf: usize,
    pub cf_min_hz: f64,
    pub cf_max_hz: f64,
    pub internal_rate_hz: f64,
    pub n_reps: u32,
    /// Width of the PSTH bins drawn by the simulator (the fine-timing bin).
    pub ft_bin_s: f64,
    pub seed: u64,
    /// Level (dB SPL) of a drive equal to the HS sigmoid midpoint.
    pub hs_threshold_db_spl: f64,
    pub fibers: FiberSet,
    pub cochlea: CochlearParams,
}

impl Default for PeripheryConfig {
    fn default() -> Self {
        Self {
            n_cf: 40,
            cf_min_hz: 125.0,
            cf_max_hz: 8000.0,
            internal_rate_hz: 100_000.0,
            n_reps: 50,
            ft_bin_s: 1e-4,
            seed: 0,
            hs_threshold_db_spl: 20.0,
            fibers: FiberSet::default(),
            cochlea: CochlearParams::default(),
        }
    }
}

impl PeripheryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_cf < 2 {
            return Err(Error::invalid("n_cf must be at least 2"));
        }
        if !(self.cf_min_hz > 0.0 && self.cf_min_hz < self.cf_max_hz) {
            return Err(Error::invalid("need 0 < cf_min < cf_max"));
        }
        if !(self.internal_rate_hz > 2.0 * self.cf_max_hz) {
            return Err(Error::invalid("internal rate must exceed twice cf_max"));
        }
        if !(self.ft_bin_s > 0.0) {
            return Err(Error::invalid("ft_bin_s must be positive"));
        }
        if self.n_reps < 1 {
            return Err(Error::invalid("n_reps must be at least 1"));
        }
        spikes::samples_per_bin(self.ft_bin_s, self.internal_rate_hz)?;
        self.fibers.validate()
    }

    /// Drive value at which the HS rate-level sigmoid is at its midpoint.
    pub fn drive_ref(&self) -> f64 {
        P_REF * 10f64.powf(self.hs_threshold_db_spl / 20.0)
    }
}

/// `n_cf` log-spaced characteristic frequencies from `cf_min` to `cf_max`
/// inclusive.
pub fn cf_grid(config: &PeripheryConfig) -> Vec<f64> {
    let n = config.n_cf;
    let (lo, hi) = (config.cf_min_hz.ln(), config.cf_max_hz.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                config.cf_min_hz
            } else if i == n - 1 {
                config.cf_max_hz
            } else {
                (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        cf_grid(&PeripheryConfig {
            n_cf: n,
            cf_min_hz: lo,
            cf_max_hz: hi,
            ..PeripheryConfig::default()
        })
    }

    #[test]
    fn grid_examples() {
        assert_eq!(grid(2, 125.0, 8000.0), vec![125.0, 8000.0]);
        let g = grid(3, 125.0, 8000.0);
        assert_abs_diff_eq!(g[1], 1000.0, epsilon = 1e-9);
        let g = grid(5, 100.0, 1600.0);
        for w in g.windows(2) {
            assert_abs_diff_eq!(w[1] / w[0], 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(PeripheryConfig::default().validate().is_ok());
        let bad = PeripheryConfig {
            n_cf: 1,
            ..PeripheryConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PeripheryConfig {
            cf_min_hz: 9000.0,
            ..PeripheryConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PeripheryConfig {
            ft_bin_s: 0.0,
            ..PeripheryConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
