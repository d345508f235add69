use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pair_nsim, pta, summed_neurograms, HearingProfile};
use crate::config::{RunConfig, Study1Params};
use crate::error::{Error, Result};
use crate::periphery::{Audiogram, CndProfile, FiberPopulation};
use crate::regression::{
    grid_search, neighborhood, table3_models, train_svr, CvReport, FeatureRow, FeatureSelector,
    SvrHyperparams, SvrModel,
};
use crate::seeding::{derive_seed, str_tag};
use crate::stimulus::{speech_shaped_noise, StimulusCondition, Waveform};

#[derive(Debug, Clone, PartialEq)]
pub struct Study1Features {
    pub rows: Vec<FeatureRow>,
    pub warnings: Vec<String>,
}

/// Average summed-fiber MR and FT NSIM per profile against the flat-0
/// reference, at the study-1 level and each configured SNR.
pub fn study1_features(
    words: &[(String, Waveform)],
    profiles: &[HearingProfile],
    cfg: &RunConfig,
) -> Result<Study1Features> {
    cfg.validate()?;
    if words.is_empty() {
        return Err(Error::invalid("study 1 needs at least one stimulus"));
    }
    if profiles.is_empty() {
        return Err(Error::invalid("study 1 needs at least one profile"));
    }
    let mut warnings = Vec::new();
    if words.len() != 10 {
        warnings.push(format!("study 1 corpus has {} items, expected 10", words.len()));
    }
    for p in profiles {
        p.validate()?;
        if !p.cnd.is_baseline() {
            return Err(Error::invalid(format!(
                "study 1 profile {} has fiber loss; only audiometric loss is modelled",
                p.id
            )));
        }
    }
    let params = &cfg.study1;
    let noise = if params.snrs_db.is_empty() {
        None
    } else {
        let corpus: Vec<Waveform> = words.iter().map(|(_, w)| w.clone()).collect();
        let longest = corpus.iter().map(|w| w.duration_s()).fold(0.0, f64::max);
        Some(speech_shaped_noise(&corpus, longest + 0.1, params.noise_seed)?)
    };
    let snrs: Vec<Option<f64>> = if params.snrs_db.is_empty() {
        vec![None]
    } else {
        params.snrs_db.iter().map(|&s| Some(s)).collect()
    };
    let flat0 = Audiogram::flat(0.0)?;
    let cond = StimulusCondition::clean(params.level_db_spl);

    let jobs: Vec<(usize, usize)> = (0..words.len())
        .flat_map(|w| (0..snrs.len()).map(move |s| (w, s)))
        .collect();
    let per_job: Vec<Vec<[f64; 2]>> = jobs
        .par_iter()
        .map(|&(wi, si)| {
            let (word_id, wave) = &words[wi];
            let stim = cond.apply(
                wave,
                noise.as_ref().zip(snrs[si]),
                cfg.periphery.internal_rate_hz,
            )?;
            let mut pc = cfg.periphery.clone();
            pc.seed = derive_seed(cfg.seed, &[str_tag(word_id), si as u64]);
            let reference = summed_neurograms(
                &FiberPopulation::simulate(&stim, &flat0, CndProfile::BASELINE, &pc)?
                    .bank(&CndProfile::BASELINE)?,
                &cfg.neurogram,
            )?;
            profiles
                .iter()
                .map(|p| {
                    let pop = FiberPopulation::simulate(&stim, &p.audiogram, p.cnd, &pc)?;
                    let degraded = summed_neurograms(&pop.bank(&p.cnd)?, &cfg.neurogram)?;
                    pair_nsim(&reference, &degraded, &cfg.similarity)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Cell {
                    cell: format!("word={word_id}"),
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;

    let n = jobs.len() as f64;
    let rows = profiles
        .iter()
        .enumerate()
        .map(|(pi, p)| {
            let mr = per_job.iter().map(|j| j[pi][0]).sum::<f64>() / n;
            let ft = per_job.iter().map(|j| j[pi][1]).sum::<f64>() / n;
            Ok(FeatureRow {
                profile_id: p.id.clone(),
                mr_nsim: mr,
                ft_nsim: ft,
                pta_db: pta(&p.audiogram)?,
                score: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Study1Features { rows, warnings })
}

#[derive(Deserialize)]
struct ScoreRow {
    profile_id: String,
    score: f64,
}

/// Reads `profile_id,score` rows; scores must lie in [0, 1].
pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let path = path.as_ref();
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let r: ScoreRow = rec.map_err(|e| malformed(e.to_string()))?;
        if !(0.0..=1.0).contains(&r.score) {
            return Err(malformed(format!("score {} for {} outside [0, 1]", r.score, r.profile_id)));
        }
        out.push((r.profile_id, r.score));
    }
    Ok(out)
}

/// Attaches scores by profile id. Every feature row needs a score.
pub fn join_scores(rows: &[FeatureRow], scores: &[(String, f64)]) -> Result<Vec<FeatureRow>> {
    let map: HashMap<&str, f64> = scores.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    rows.iter()
        .map(|r| {
            let s = map
                .get(r.profile_id.as_str())
                .ok_or_else(|| Error::invalid(format!("no score for profile {}", r.profile_id)))?;
            Ok(FeatureRow {
                score: Some(*s),
                ..r.clone()
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub label: String,
    pub features: FeatureSelector,
    pub hyperparams: SvrHyperparams,
    pub cv: CvReport,
    pub model: SvrModel,
}

/// Cross-validates the four tabulated models (or a neighbourhood of each)
/// and refits the selected hyperparameters on all rows.
pub fn study1_regression(rows: &[FeatureRow], params: &Study1Params) -> Result<Vec<ModelResult>> {
    table3_models()
        .into_iter()
        .map(|(label, feats, hp)| {
            let features = FeatureSelector::new(&feats, params.feature_mode);
            let grid = if params.grid_search {
                neighborhood(&hp)
            } else {
                vec![hp]
            };
            let g = grid_search(rows, &features, &grid, params.folds, params.cv_seed)?;
            let model = train_svr(rows, &features, &g.best)?;
            Ok(ModelResult {
                label: label.to_string(),
                features,
                hyperparams: g.best,
                cv: g.report,
                model,
            })
        })
        .collect()
}
