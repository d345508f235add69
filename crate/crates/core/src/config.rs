//! Run configuration: every knob of a study run in one serialisable value.
//!
//! Files are TOML; JSON is accepted when the extension is `.json` or the
//! text starts with `{`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neurogram::NeurogramSettings;
use crate::periphery::PeripheryConfig;
use crate::regression::FeatureMode;
use crate::similarity::SimilarityConfig;
use crate::stimulus::{ReverbSpec, StimulusCondition};

/// A named listening condition applied before calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub name: String,
    #[serde(default = "one")]
    pub compression_factor: f64,
    #[serde(default)]
    pub reverb: Option<ReverbSpec>,
}

fn one() -> f64 {
    1.0
}

impl ConditionSpec {
    pub fn clean() -> Self {
        Self {
            name: "clean".into(),
            compression_factor: 1.0,
            reverb: None,
        }
    }

    /// The three speech types of the fiber-loss sweep.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::clean(),
            Self {
                name: "comp65".into(),
                compression_factor: 0.65,
                reverb: None,
            },
            Self {
                name: "comp65_reverb".into(),
                compression_factor: 0.65,
                reverb: Some(ReverbSpec::default()),
            },
        ]
    }

    pub fn at_level(&self, level_db_spl: f64) -> StimulusCondition {
        StimulusCondition {
            level_db_spl,
            compression_factor: self.compression_factor,
            reverb: self.reverb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Study1Params {
    pub level_db_spl: f64,
    /// Speech-shaped-noise SNRs; features are averaged over them. Empty
    /// means stimuli in quiet.
    pub snrs_db: Vec<f64>,
    pub noise_seed: u64,
    pub folds: usize,
    pub cv_seed: u64,
    pub feature_mode: FeatureMode,
    /// Search a neighbourhood of each tabulated model instead of fitting
    /// it as given.
    pub grid_search: bool,
}

impl Default for Study1Params {
    fn default() -> Self {
        Self {
            level_db_spl: 65.0,
            snrs_db: Vec::new(),
            noise_seed: 0,
            folds: 3,
            cv_seed: 0,
            feature_mode: FeatureMode::Set,
            grid_search: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Study2Params {
    pub levels_db_spl: Vec<f64>,
    pub conditions: Vec<ConditionSpec>,
    /// Optional speech-shaped noise; the sweep runs in quiet by default.
    pub snr_db: Option<f64>,
    pub noise_seed: u64,
}

impl Default for Study2Params {
    fn default() -> Self {
        Self {
            levels_db_spl: vec![50.0, 65.0, 80.0, 95.0],
            conditions: ConditionSpec::defaults(),
            snr_db: None,
            noise_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Master seed. Per-word periphery seeds are derived from it, so the
    /// `periphery.seed` field is overwritten during studies.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub periphery: PeripheryConfig,
    pub similarity: SimilarityConfig,
    pub neurogram: NeurogramSettings,
    pub study1: Study1Params,
    pub study2: Study2Params,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            periphery: PeripheryConfig::default(),
            similarity: SimilarityConfig::default(),
            neurogram: NeurogramSettings::default(),
            study1: Study1Params::default(),
            study2: Study2Params::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.periphery.validate()?;
        if (self.neurogram.ft_bin_s - self.periphery.ft_bin_s).abs() > 1e-15 {
            return Err(Error::invalid(format!(
                "neurogram.ft_bin_s ({}) must equal periphery.ft_bin_s ({})",
                self.neurogram.ft_bin_s, self.periphery.ft_bin_s
            )));
        }
        if self.study1.folds < 2 {
            return Err(Error::invalid("study1.folds must be at least 2"));
        }
        if self.study2.levels_db_spl.is_empty() || self.study2.conditions.is_empty() {
            return Err(Error::invalid("study2 needs at least one level and one condition"));
        }
        let mut names: Vec<&str> = self.study2.conditions.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate condition name"));
        }
        for c in &self.study2.conditions {
            if c.name.is_empty() || c.name.contains([',', '/', '\\']) {
                return Err(Error::invalid(format!("bad condition name {:?}", c.name)));
            }
            c.at_level(65.0).validate()?;
        }
        Ok(())
    }

    pub fn from_str_auto(text: &str, json: bool) -> Result<Self> {
        let cfg: RunConfig = if json || text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let json = path.extension().is_some_and(|e| e == "json");
        Self::from_str_auto(&text, json).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Fails for seeds of 2^63 and above, which TOML integers cannot hold.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::invalid(format!("config as TOML: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml_and_json() {
        let d = RunConfig::default();
        assert!(d.validate().is_ok());
        assert_eq!(RunConfig::from_str_auto(&d.to_toml().unwrap(), false).unwrap(), d);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(RunConfig::from_str_auto(&json, true).unwrap(), d);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = RunConfig::from_str_auto("seed = 7\n[periphery]\nn_reps = 10\n", false).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.periphery.n_reps, 10);
        assert_eq!(c.periphery.n_cf, 40);
        assert_eq!(c.study2.conditions.len(), 3);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_str_auto("[study2]\nlevels_db_spl = []\n", false).is_err());
        assert!(RunConfig::from_str_auto("seed = \"x\"\n", false).is_err());
        let mut c = RunConfig::default();
        c.study2.conditions.push(ConditionSpec::clean());
        assert!(c.validate().is_err());
    }
}
