//! The two studies: per-profile NSIM features regressed on recognition
//! scores, and the fiber-loss sweep over levels and listening conditions.

mod report;
mod study1;
mod study2;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use report::{emit_report, render_svg, CND_EFFECT_CSV, RECORDS_CSV};
pub use study1::{
    join_scores, read_scores_csv, study1_features, study1_regression, ModelResult, Study1Features,
};
pub use study2::{
    cnd_effects, study2_sweep, study2_word_jobs, CellValues, SweepOptions, SweepOutput, SweepStats,
};

use crate::error::{Error, Result};
use crate::neurogram::{build_neurogram, Neurogram, NeurogramKind, NeurogramSettings};
use crate::periphery::{Audiogram, CndProfile, FiberBank, FiberTag, FiberType, Psth};
use crate::similarity::{nsim, SimilarityConfig};
use crate::stimulus::{load_wav, CorpusManifest, Waveform};

const PTA_FREQS: [f64; 4] = [500.0, 1000.0, 2000.0, 4000.0];

/// Pure-tone average over 500, 1000, 2000 and 4000 Hz.
pub fn pta(audiogram: &Audiogram) -> Result<f64> {
    if audiogram.min_freq() > PTA_FREQS[0] || audiogram.max_freq() < PTA_FREQS[3] {
        return Err(Error::invalid("audiogram does not cover 500-4000 Hz"));
    }
    Ok(PTA_FREQS.iter().map(|&f| audiogram.threshold_at(f)).sum::<f64>() / 4.0)
}

/// `(nsim_no_cnd - nsim_cnd) / nsim_no_cnd`. Negative when the degraded
/// profile happens to score higher.
pub fn cnd_effect(nsim_no_cnd: f64, nsim_cnd: f64) -> Result<f64> {
    if !(nsim_no_cnd > 0.0) {
        return Err(Error::invalid(format!(
            "CND effect needs a positive baseline NSIM, got {nsim_no_cnd}"
        )));
    }
    Ok((nsim_no_cnd - nsim_cnd) / nsim_no_cnd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HearingProfile {
    pub id: String,
    pub audiogram: Audiogram,
    #[serde(default = "baseline")]
    pub cnd: CndProfile,
    #[serde(default)]
    pub description: String,
}

fn baseline() -> CndProfile {
    CndProfile::BASELINE
}

impl HearingProfile {
    pub fn new(id: &str, audiogram: Audiogram, cnd: CndProfile) -> Self {
        Self {
            id: id.to_string(),
            audiogram,
            cnd,
            description: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(',') {
            return Err(Error::invalid(format!("bad profile id {:?}", self.id)));
        }
        self.cnd.validate()
    }

    /// The sloping loss combined with each row of the fiber-loss table.
    pub fn sweep_defaults() -> Vec<Self> {
        CndProfile::sweep_table()
            .into_iter()
            .map(|(id, cnd)| Self {
                description: format!("sloping loss, LS/MS/HS fibers {}/{}/{}", cnd.ls, cnd.ms, cnd.hs),
                ..Self::new(id, Audiogram::sloping_loss(), cnd)
            })
            .collect()
    }
}

#[derive(Deserialize)]
struct ProfileFile {
    profiles: Vec<HearingProfile>,
}

/// Reads `[[profiles]]` entries from TOML (or `{"profiles": [...]}` JSON).
pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<HearingProfile>> {
    let path = path.as_ref();
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| malformed(e.to_string()))?;
    let file: ProfileFile = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| malformed(e.to_string()))?
    };
    if file.profiles.is_empty() {
        return Err(malformed("no profiles".into()));
    }
    let mut ids = Vec::new();
    for p in &file.profiles {
        p.validate()?;
        if ids.contains(&p.id) {
            return Err(malformed(format!("duplicate profile id {}", p.id)));
        }
        ids.push(p.id.clone());
    }
    Ok(file.profiles)
}

/// Loads every stimulus of a manifest, keyed by word id.
pub fn load_corpus(manifest: &CorpusManifest) -> Result<Vec<(String, Waveform)>> {
    manifest
        .entries
        .iter()
        .map(|e| Ok((e.word_id.clone(), load_wav(&e.path)?)))
        .collect()
}

/// One NSIM value of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub word_id: String,
    pub profile_id: String,
    pub level_db: f64,
    pub condition: String,
    pub fiber: FiberType,
    pub kind: NeurogramKind,
    pub nsim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CndEffectPoint {
    pub profile_id: String,
    pub level_db: f64,
    pub condition: String,
    pub kind: NeurogramKind,
    pub cnd_effect: f64,
}

pub(crate) const KINDS: [NeurogramKind; 2] = [NeurogramKind::Mr, NeurogramKind::Ft];

pub(crate) fn neurogram_pair(psths: &[Psth], settings: &NeurogramSettings) -> Result<[Neurogram; 2]> {
    Ok([
        build_neurogram(psths, NeurogramKind::Mr, settings)?,
        build_neurogram(psths, NeurogramKind::Ft, settings)?,
    ])
}

/// MR and FT neurograms for each fiber class, indexed `[class][kind]`.
pub(crate) fn per_type_neurograms(
    bank: &FiberBank,
    settings: &NeurogramSettings,
) -> Result<[[Neurogram; 2]; 3]> {
    let [ls, ms, hs] = FiberType::ALL.map(|t| neurogram_pair(&bank.get(t).psths, settings));
    Ok([ls?, ms?, hs?])
}

pub(crate) fn summed_neurograms(
    bank: &FiberBank,
    settings: &NeurogramSettings,
) -> Result<[Neurogram; 2]> {
    let pair = neurogram_pair(&bank.summed(), settings)?;
    debug_assert!(pair.iter().all(|n| n.fiber == FiberTag::Sum));
    Ok(pair)
}

pub(crate) fn pair_nsim(
    reference: &[Neurogram; 2],
    degraded: &[Neurogram; 2],
    cfg: &SimilarityConfig,
) -> Result<[f64; 2]> {
    Ok([
        nsim(&reference[0].values, &degraded[0].values, cfg)?.nsim,
        nsim(&reference[1].values, &degraded[1].values, cfg)?.nsim,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pta_examples() {
        assert_eq!(pta(&Audiogram::sloping_loss()).unwrap(), 24.5);
        assert_eq!(pta(&Audiogram::flat(0.0).unwrap()).unwrap(), 0.0);
        assert_eq!(pta(&Audiogram::flat(40.0).unwrap()).unwrap(), 40.0);
    }

    #[test]
    fn cnd_effect_examples() {
        assert_eq!(cnd_effect(0.7, 0.7).unwrap(), 0.0);
        assert!((cnd_effect(0.8, 0.6).unwrap() - 0.25).abs() < 1e-15);
        assert!((cnd_effect(0.8, 0.9).unwrap() + 0.125).abs() < 1e-15);
        assert!(cnd_effect(0.0, 0.5).is_err());
        assert!(cnd_effect(-0.1, 0.5).is_err());
    }

    #[test]
    fn profile_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.toml");
        std::fs::write(
            &p,
            "[[profiles]]\nid = \"a\"\naudiogram = [[250, 0], [1000, 10], [8000, 40]]\n\n\
             [[profiles]]\nid = \"b\"\naudiogram = [[250, 20], [8000, 20]]\ncnd = { ls = 0, ms = 0, hs = 12 }\n",
        )
        .unwrap();
        let ps = load_profiles(&p).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].cnd, CndProfile::BASELINE);
        assert_eq!(ps[1].cnd.ls, 0);
        std::fs::write(&p, "[[profiles]]\nid = \"a\"\naudiogram = [[8000, 0], [250, 0]]\n").unwrap();
        assert!(load_profiles(&p).is_err());
    }

    #[test]
    fn sweep_defaults_follow_the_table() {
        let ps = HearingProfile::sweep_defaults();
        assert_eq!(ps.len(), 7);
        assert!(ps[0].cnd.is_baseline());
        assert_eq!(ps[6].cnd, CndProfile::new(0, 0, 10).unwrap());
    }
}
