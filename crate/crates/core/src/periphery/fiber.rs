use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Drive;
use crate::error::{Error, Result};

/// Spontaneous-rate class of an auditory-nerve fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FiberType {
    #[serde(rename = "LS")]
    Ls,
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "HS")]
    Hs,
}

impl FiberType {
    pub const ALL: [FiberType; 3] = [FiberType::Ls, FiberType::Ms, FiberType::Hs];

    pub fn index(self) -> usize {
        match self {
            FiberType::Ls => 0,
            FiberType::Ms => 1,
            FiberType::Hs => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FiberType::Ls => "LS",
            FiberType::Ms => "MS",
            FiberType::Hs => "HS",
        }
    }
}

impl fmt::Display for FiberType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rate-level parameters of one fiber class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberParams {
    pub spont_rate: f64,
    /// Sigmoid midpoint, dB re the HS midpoint.
    pub threshold_db: f64,
    pub saturation_rate: f64,
    pub dynamic_range_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSet {
    pub ls: FiberParams,
    pub ms: FiberParams,
    pub hs: FiberParams,
}

impl Default for FiberSet {
    fn default() -> Self {
        Self {
            ls: FiberParams {
                spont_rate: 0.1,
                threshold_db: 28.0,
                saturation_rate: 150.0,
                dynamic_range_db: 40.0,
            },
            ms: FiberParams {
                spont_rate: 4.0,
                threshold_db: 12.0,
                saturation_rate: 200.0,
                dynamic_range_db: 30.0,
            },
            hs: FiberParams {
                spont_rate: 70.0,
                threshold_db: 0.0,
                saturation_rate: 250.0,
                dynamic_range_db: 20.0,
            },
        }
    }
}

impl FiberSet {
    pub fn get(&self, t: FiberType) -> &FiberParams {
        match t {
            FiberType::Ls => &self.ls,
            FiberType::Ms => &self.ms,
            FiberType::Hs => &self.hs,
        }
    }

    /// Thresholds must fall and spontaneous rates rise from LS to HS.
    pub fn validate(&self) -> Result<()> {
        let ordered = self.ls.threshold_db > self.ms.threshold_db
            && self.ms.threshold_db > self.hs.threshold_db
            && self.ls.spont_rate < self.ms.spont_rate
            && self.ms.spont_rate < self.hs.spont_rate;
        if !ordered {
            return Err(Error::invalid(
                "fiber parameters must satisfy threshold LS > MS > HS and spont LS < MS < HS",
            ));
        }
        for p in [&self.ls, &self.ms, &self.hs] {
            if !(p.spont_rate >= 0.0 && p.saturation_rate > p.spont_rate && p.dynamic_range_db > 0.0) {
                return Err(Error::invalid(format!("bad fiber parameters {p:?}")));
            }
        }
        Ok(())
    }
}

/// Number of fibers of each class synapsing at every CF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CndProfile {
    pub ls: u32,
    pub ms: u32,
    pub hs: u32,
}

impl CndProfile {
    /// Healthy complement: 5 LS, 5 MS, 12 HS.
    pub const BASELINE: CndProfile = CndProfile {
        ls: 5,
        ms: 5,
        hs: 12,
    };

    pub fn new(ls: u32, ms: u32, hs: u32) -> Result<Self> {
        let p = Self { ls, ms, hs };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let b = Self::BASELINE;
        if self.ls > b.ls || self.ms > b.ms || self.hs > b.hs {
            return Err(Error::invalid(format!(
                "fiber counts ({}, {}, {}) exceed the healthy complement (5, 5, 12)",
                self.ls, self.ms, self.hs
            )));
        }
        if self.ls + self.ms + self.hs == 0 {
            return Err(Error::invalid("CND profile has no fibers"));
        }
        Ok(())
    }

    pub fn count(&self, t: FiberType) -> u32 {
        match t {
            FiberType::Ls => self.ls,
            FiberType::Ms => self.ms,
            FiberType::Hs => self.hs,
        }
    }

    pub fn is_baseline(&self) -> bool {
        *self == Self::BASELINE
    }

    /// The seven fiber-loss rows of the CND sweep, with their labels.
    pub fn sweep_table() -> Vec<(&'static str, CndProfile)> {
        let row = |ls, ms, hs| CndProfile { ls, ms, hs };
        vec![
            ("no_cnd", row(5, 5, 12)),
            ("lsms20", row(4, 4, 12)),
            ("lsms40", row(3, 3, 12)),
            ("lsms60", row(2, 2, 12)),
            ("lsms80", row(1, 1, 12)),
            ("lsms100", row(0, 0, 12)),
            ("lsms100_hs20", row(0, 0, 10)),
        ]
    }
}

/// Tag identifying the fiber population a PSTH or neurogram summarises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FiberTag {
    #[serde(rename = "LS")]
    Ls,
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "HS")]
    Hs,
    #[serde(rename = "SUM")]
    Sum,
}

impl FiberTag {
    pub const ALL: [FiberTag; 4] = [FiberTag::Ls, FiberTag::Ms, FiberTag::Hs, FiberTag::Sum];

    pub fn as_str(self) -> &'static str {
        match self {
            FiberTag::Ls => "LS",
            FiberTag::Ms => "MS",
            FiberTag::Hs => "HS",
            FiberTag::Sum => "SUM",
        }
    }
}

impl From<FiberType> for FiberTag {
    fn from(t: FiberType) -> Self {
        match t {
            FiberType::Ls => FiberTag::Ls,
            FiberType::Ms => FiberTag::Ms,
            FiberType::Hs => FiberTag::Hs,
        }
    }
}

impl fmt::Display for FiberTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FiberTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LS" => Ok(FiberTag::Ls),
            "MS" => Ok(FiberTag::Ms),
            "HS" => Ok(FiberTag::Hs),
            "SUM" => Ok(FiberTag::Sum),
            other => Err(Error::invalid(format!("unknown fiber tag {other:?}"))),
        }
    }
}

/// Instantaneous discharge rate (spikes/s), sampled like the drive.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTrace {
    pub rates: Vec<f64>,
    pub sample_rate: f64,
    pub cf_hz: f64,
    pub fiber: FiberTag,
}

/// Level (dB re `drive_ref`) of a drive sample; zero maps to `-inf`.
#[inline]
pub fn drive_level_db(drive: f64, drive_ref: f64) -> f64 {
    20.0 * (drive / drive_ref).log10()
}

/// Static sigmoid rate-level function:
/// `spont + (sat - spont) / (1 + exp(-4 (level - thr) / dr))`.
#[inline]
pub fn rate_at_level(level_db: f64, p: &FiberParams) -> f64 {
    let s = 1.0 / (1.0 + (-4.0 * (level_db - p.threshold_db) / p.dynamic_range_db).exp());
    p.spont_rate + (p.saturation_rate - p.spont_rate) * s
}

/// Maps a drive sequence through the rate-level function of `params`.
/// `drive_ref` is the drive at which the HS sigmoid reaches its midpoint.
pub fn fiber_rate(drive: &Drive, fiber: FiberType, params: &FiberParams, drive_ref: f64) -> RateTrace {
    RateTrace {
        rates: drive
            .values
            .iter()
            .map(|&d| rate_at_level(drive_level_db(d, drive_ref), params))
            .collect(),
        sample_rate: drive.sample_rate,
        cf_hz: drive.cf_hz,
        fiber: fiber.into(),
    }
}
