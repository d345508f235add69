use rayon::prelude::*;

use super::cochlea::band_drive;
use super::fiber::{drive_level_db, rate_at_level, CndProfile, FiberTag, FiberType};
use super::spikes::{draw_counts, samples_per_bin, Psth};
use super::{cf_grid, Audiogram, PeripheryConfig};
use crate::error::{Error, Result};
use crate::stimulus::{resample, Waveform};

/// Responses of one fiber class at every CF.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeResponse {
    pub fiber: FiberType,
    pub count: u32,
    /// No fibers of this class survive; `psths` are all zero.
    pub absent: bool,
    pub psths: Vec<Psth>,
}

/// Per-class PSTHs over the CF grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberBank {
    pub cf_hz: Vec<f64>,
    pub bin_width_s: f64,
    pub responses: [TypeResponse; 3],
}

impl FiberBank {
    pub fn get(&self, t: FiberType) -> &TypeResponse {
        &self.responses[t.index()]
    }

    /// PSTHs summed over the three classes, one per CF.
    pub fn summed(&self) -> Vec<Psth> {
        (0..self.cf_hz.len())
            .map(|i| {
                let mut counts = self.responses[0].psths[i].counts.clone();
                for r in &self.responses[1..] {
                    for (c, v) in counts.iter_mut().zip(&r.psths[i].counts) {
                        *c += v;
                    }
                }
                Psth {
                    counts,
                    bin_width_s: self.bin_width_s,
                    cf_hz: self.cf_hz[i],
                    fiber: FiberTag::Sum,
                }
            })
            .collect()
    }

    pub fn total_spikes(&self) -> u64 {
        self.responses
            .iter()
            .flat_map(|r| r.psths.iter())
            .map(Psth::total)
            .sum()
    }
}

/// Spike counts of every individual fiber, kept separate so that any
/// fiber-loss profile can be read off one simulation. Fiber `i` of a class
/// always uses the same random stream, so a profile with fewer fibers sees
/// a subset of the spikes of a fuller one.
#[derive(Debug, Clone)]
pub struct FiberPopulation {
    cf_hz: Vec<f64>,
    bin_width_s: f64,
    n_bins: usize,
    drawn: CndProfile,
    /// `[cf][class][fiber] -> counts`
    counts: Vec<[Vec<Vec<u32>>; 3]>,
}

impl FiberPopulation {
    /// Simulates the fibers listed in `drawn` (normally the healthy
    /// complement) at every CF.
    pub fn simulate(
        stimulus: &Waveform,
        audiogram: &Audiogram,
        drawn: CndProfile,
        config: &PeripheryConfig,
    ) -> Result<Self> {
        config.validate()?;
        let fs = config.internal_rate_hz;
        let stimulus = if stimulus.sample_rate() != fs {
            resample(stimulus, fs)?
        } else {
            stimulus.clone()
        };
        let bin = samples_per_bin(config.ft_bin_s, fs)?;
        let n_bins = stimulus.len() / bin;
        if n_bins == 0 {
            return Err(Error::invalid("stimulus shorter than one PSTH bin"));
        }
        let dt = 1.0 / fs;
        let drive_ref = config.drive_ref();
        let cfs = cf_grid(config);
        let counts = cfs
            .par_iter()
            .enumerate()
            .map(|(ci, &cf)| {
                let drive = band_drive(&stimulus, cf, audiogram, &config.cochlea);
                let levels: Vec<f64> = drive
                    .values
                    .iter()
                    .map(|&d| drive_level_db(d, drive_ref))
                    .collect();
                FiberType::ALL.map(|t| {
                    let p = config.fibers.get(t);
                    let means: Vec<f64> = levels
                        .chunks_exact(bin)
                        .map(|c| c.iter().map(|&l| rate_at_level(l, p)).sum::<f64>() * dt)
                        .collect();
                    (0..drawn.count(t))
                        .map(|fi| {
                            draw_counts(
                                &means,
                                config.n_reps,
                                config.seed,
                                &[ci as u64, t.index() as u64, fi as u64],
                            )
                        })
                        .collect()
                })
            })
            .collect();
        Ok(Self {
            cf_hz: cfs,
            bin_width_s: config.ft_bin_s,
            n_bins,
            drawn,
            counts,
        })
    }

    pub fn cf_hz(&self) -> &[f64] {
        &self.cf_hz
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Summed PSTHs for the fibers retained by `cnd`.
    pub fn bank(&self, cnd: &CndProfile) -> Result<FiberBank> {
        cnd.validate()?;
        for t in FiberType::ALL {
            if cnd.count(t) > self.drawn.count(t) {
                return Err(Error::invalid(format!(
                    "profile needs {} {t} fibers but only {} were simulated",
                    cnd.count(t),
                    self.drawn.count(t)
                )));
            }
        }
        let responses = FiberType::ALL.map(|t| {
            let n = cnd.count(t) as usize;
            let psths = self
                .counts
                .iter()
                .zip(&self.cf_hz)
                .map(|(per_class, &cf)| {
                    let mut sum = vec![0u32; self.n_bins];
                    for fiber in &per_class[t.index()][..n] {
                        for (s, c) in sum.iter_mut().zip(fiber) {
                            *s += c;
                        }
                    }
                    Psth {
                        counts: sum,
                        bin_width_s: self.bin_width_s,
                        cf_hz: cf,
                        fiber: t.into(),
                    }
                })
                .collect();
            TypeResponse {
                fiber: t,
                count: n as u32,
                absent: n == 0,
                psths,
            }
        });
        Ok(FiberBank {
            cf_hz: self.cf_hz.clone(),
            bin_width_s: self.bin_width_s,
            responses,
        })
    }
}

/// PSTHs of `cnd`'s surviving fibers for every CF and class.
pub fn simulate_fiber_bank(
    stimulus: &Waveform,
    audiogram: &Audiogram,
    cnd: &CndProfile,
    config: &PeripheryConfig,
) -> Result<FiberBank> {
    cnd.validate()?;
    FiberPopulation::simulate(stimulus, audiogram, *cnd, config)?.bank(cnd)
}
