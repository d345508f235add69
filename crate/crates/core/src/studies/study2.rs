use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{cnd_effect, pair_nsim, per_type_neurograms, CndEffectPoint, HearingProfile, StudyRecord, KINDS};
use crate::config::{ConditionSpec, RunConfig};
use crate::error::{Error, Result};
use crate::periphery::{Audiogram, CndProfile, FiberPopulation, FiberType};
use crate::seeding::{derive_seed, str_tag};
use crate::stimulus::{speech_shaped_noise, Waveform};

const CACHE_FORMAT: &str = "study2-cell/1";

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Where completed cells are stored. No caching when absent.
    pub cache_dir: Option<PathBuf>,
    /// Reuse cells already present in the cache.
    pub reuse_cache: bool,
    /// Worker threads; the global pool when absent.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub computed: usize,
    pub cached: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<StudyRecord>,
    pub profiles: Vec<HearingProfile>,
    pub conditions: Vec<String>,
    pub levels: Vec<f64>,
    pub words: Vec<String>,
    pub stats: SweepStats,
}

/// NSIM of one (word, level, condition) cell, `[profile][class][kind]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellValues {
    pub format: String,
    pub key: String,
    pub word_id: String,
    pub level_db: f64,
    pub condition: String,
    pub nsim: Vec<[[f64; 2]; 3]>,
}

/// Number of (word, level, condition) jobs a sweep runs.
pub fn study2_word_jobs(n_words: usize, cfg: &RunConfig) -> usize {
    n_words * cfg.study2.levels_db_spl.len() * cfg.study2.conditions.len()
}

fn waveform_hash(w: &Waveform) -> String {
    let mut h = Sha256::new();
    h.update(w.sample_rate().to_le_bytes());
    for s in w.samples() {
        h.update(s.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    format: &'a str,
    word_id: &'a str,
    stimulus: &'a str,
    noise: Option<(&'a str, f64)>,
    level_db: f64,
    condition: &'a ConditionSpec,
    profiles: &'a [HearingProfile],
    seed: u64,
    periphery: &'a crate::periphery::PeripheryConfig,
    similarity: &'a crate::similarity::SimilarityConfig,
    neurogram: &'a crate::neurogram::NeurogramSettings,
}

struct Job<'a> {
    word: usize,
    level: f64,
    condition: &'a ConditionSpec,
    key: String,
}

impl Job<'_> {
    fn label(&self, words: &[(String, Waveform)]) -> String {
        format!(
            "word={} level={} condition={}",
            words[self.word].0, self.level, self.condition.name
        )
    }
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

fn read_cell(dir: &Path, key: &str) -> Option<CellValues> {
    let text = std::fs::read_to_string(cache_path(dir, key)).ok()?;
    let cell: CellValues = serde_json::from_str(&text).ok()?;
    (cell.format == CACHE_FORMAT && cell.key == key).then_some(cell)
}

fn write_cell(dir: &Path, cell: &CellValues) -> Result<()> {
    let target = cache_path(dir, &cell.key);
    let tmp = dir.join(format!(
        "{}.{}.{:?}.tmp",
        cell.key,
        std::process::id(),
        std::thread::current().id()
    ));
    let text = serde_json::to_string(cell).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(&tmp, text).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, &target).map_err(|e| Error::io(target.display().to_string(), e))
}

fn compute_cell(
    words: &[(String, Waveform)],
    job: &Job<'_>,
    noise: Option<(&Waveform, f64)>,
    profiles: &[HearingProfile],
    drawn: CndProfile,
    cfg: &RunConfig,
) -> Result<CellValues> {
    let (word_id, wave) = &words[job.word];
    let stim = job
        .condition
        .at_level(job.level)
        .apply(wave, noise, cfg.periphery.internal_rate_hz)?;
    let mut pc = cfg.periphery.clone();
    pc.seed = derive_seed(cfg.seed, &[str_tag(word_id)]);

    let reference = per_type_neurograms(
        &FiberPopulation::simulate(&stim, &Audiogram::flat(0.0)?, CndProfile::BASELINE, &pc)?
            .bank(&CndProfile::BASELINE)?,
        &cfg.neurogram,
    )?;
    let mut populations: Vec<(&Audiogram, FiberPopulation)> = Vec::new();
    let mut nsim = Vec::with_capacity(profiles.len());
    for p in profiles {
        let idx = match populations.iter().position(|(a, _)| **a == p.audiogram) {
            Some(i) => i,
            None => {
                populations.push((&p.audiogram, FiberPopulation::simulate(&stim, &p.audiogram, drawn, &pc)?));
                populations.len() - 1
            }
        };
        let degraded = per_type_neurograms(&populations[idx].1.bank(&p.cnd)?, &cfg.neurogram)?;
        let mut v = [[0.0; 2]; 3];
        for t in FiberType::ALL {
            v[t.index()] = pair_nsim(&reference[t.index()], &degraded[t.index()], &cfg.similarity)?;
        }
        nsim.push(v);
    }
    Ok(CellValues {
        format: CACHE_FORMAT.to_string(),
        key: job.key.clone(),
        word_id: word_id.clone(),
        level_db: job.level,
        condition: job.condition.name.clone(),
        nsim,
    })
}

/// Full factorial sweep: every word at every level and condition, each
/// profile's per-class MR and FT NSIM against the flat-0, full-complement
/// reference.
pub fn study2_sweep(
    words: &[(String, Waveform)],
    profiles: &[HearingProfile],
    cfg: &RunConfig,
    opts: &SweepOptions,
) -> Result<SweepOutput> {
    cfg.validate()?;
    if words.is_empty() || profiles.is_empty() {
        return Err(Error::invalid("sweep needs at least one word and one profile"));
    }
    for p in profiles {
        p.validate()?;
    }
    if profiles.iter().filter(|p| p.cnd.is_baseline()).count() != 1 {
        return Err(Error::invalid("profiles must include exactly one row without fiber loss"));
    }
    let mut ids: Vec<&str> = profiles.iter().map(|p| p.id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("duplicate profile id"));
    }
    let drawn = profiles.iter().fold(CndProfile::BASELINE, |acc, p| CndProfile {
        ls: acc.ls.max(p.cnd.ls),
        ms: acc.ms.max(p.cnd.ms),
        hs: acc.hs.max(p.cnd.hs),
    });

    let params = &cfg.study2;
    let noise = match params.snr_db {
        None => None,
        Some(snr) => {
            let corpus: Vec<Waveform> = words.iter().map(|(_, w)| w.clone()).collect();
            let longest = corpus.iter().map(|w| w.duration_s()).fold(0.0, f64::max);
            Some((speech_shaped_noise(&corpus, longest + 0.1, params.noise_seed)?, snr))
        }
    };
    let noise_hash = noise.as_ref().map(|(n, s)| (waveform_hash(n), *s));
    let word_hashes: Vec<String> = words.iter().map(|(_, w)| waveform_hash(w)).collect();

    let mut jobs = Vec::new();
    for cond in &params.conditions {
        for &level in &params.levels_db_spl {
            for (wi, (word_id, _)) in words.iter().enumerate() {
                let material = KeyMaterial {
                    format: CACHE_FORMAT,
                    word_id,
                    stimulus: &word_hashes[wi],
                    noise: noise_hash.as_ref().map(|(h, s)| (h.as_str(), *s)),
                    level_db: level,
                    condition: cond,
                    profiles,
                    seed: cfg.seed,
                    periphery: &cfg.periphery,
                    similarity: &cfg.similarity,
                    neurogram: &cfg.neurogram,
                };
                let bytes = serde_json::to_vec(&material).map_err(|e| Error::Internal(e.to_string()))?;
                jobs.push(Job {
                    word: wi,
                    level,
                    condition: cond,
                    key: hex::encode(Sha256::digest(&bytes)),
                });
            }
        }
    }

    if let Some(dir) = &opts.cache_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    let run = || -> Result<Vec<(CellValues, bool)>> {
        jobs.par_iter()
            .map(|job| {
                if let (Some(dir), true) = (&opts.cache_dir, opts.reuse_cache) {
                    if let Some(cell) = read_cell(dir, &job.key) {
                        return Ok((cell, true));
                    }
                }
                let cell = compute_cell(
                    words,
                    job,
                    noise.as_ref().map(|(n, s)| (n, *s)),
                    profiles,
                    drawn,
                    cfg,
                )
                .and_then(|cell| {
                    if let Some(dir) = &opts.cache_dir {
                        write_cell(dir, &cell)?;
                    }
                    Ok(cell)
                })
                .map_err(|e| Error::Cell {
                    cell: job.label(words),
                    source: Box::new(e),
                })?;
                Ok((cell, false))
            })
            .collect()
    };
    let cells = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let mut stats = SweepStats::default();
    let mut records = Vec::with_capacity(cells.len() * profiles.len() * 6);
    // cells are in (condition, level, word) order; records go out in
    // (condition, profile, level, word, class, kind) order
    let per_condition = params.levels_db_spl.len() * words.len();
    for (ci, cond) in params.conditions.iter().enumerate() {
        let block = &cells[ci * per_condition..(ci + 1) * per_condition];
        for (pi, p) in profiles.iter().enumerate() {
            for (cell, _) in block {
                for t in FiberType::ALL {
                    for (ki, kind) in KINDS.iter().enumerate() {
                        records.push(StudyRecord {
                            word_id: cell.word_id.clone(),
                            profile_id: p.id.clone(),
                            level_db: cell.level_db,
                            condition: cond.name.clone(),
                            fiber: t,
                            kind: *kind,
                            nsim: cell.nsim[pi][t.index()][ki],
                        });
                    }
                }
            }
        }
    }
    for (_, hit) in &cells {
        if *hit {
            stats.cached += 1;
        } else {
            stats.computed += 1;
        }
    }
    Ok(SweepOutput {
        records,
        profiles: profiles.to_vec(),
        conditions: params.conditions.iter().map(|c| c.name.clone()).collect(),
        levels: params.levels_db_spl.clone(),
        words: words.iter().map(|(id, _)| id.clone()).collect(),
        stats,
    })
}

/// Overall NSIM per (profile, level, condition, kind): the mean over
/// classes of the word-averaged per-class NSIM. The fiber-loss effect of
/// each profile is taken relative to the profile without fiber loss.
pub fn cnd_effects(out: &SweepOutput) -> Result<Vec<CndEffectPoint>> {
    let base = out
        .profiles
        .iter()
        .position(|p| p.cnd.is_baseline())
        .ok_or_else(|| Error::invalid("no profile without fiber loss"))?;
    let pidx = |id: &str| out.profiles.iter().position(|p| p.id == id);
    let cidx = |c: &str| out.conditions.iter().position(|x| x == c);
    let lidx = |l: f64| out.levels.iter().position(|&x| x == l);
    let (np, nc, nl) = (out.profiles.len(), out.conditions.len(), out.levels.len());
    // [condition][level][profile][kind] -> (sum, count)
    let mut acc = vec![[(0.0, 0usize); 2]; nc * nl * np];
    for r in &out.records {
        let (Some(p), Some(c), Some(l)) = (pidx(&r.profile_id), cidx(&r.condition), lidx(r.level_db)) else {
            return Err(Error::invalid(format!(
                "record for unknown cell {}/{}/{}",
                r.profile_id, r.condition, r.level_db
            )));
        };
        let k = KINDS.iter().position(|&k| k == r.kind).expect("two kinds");
        let slot = &mut acc[(c * nl + l) * np + p][k];
        slot.0 += r.nsim;
        slot.1 += 1;
    }
    let mut points = Vec::new();
    for (c, cond) in out.conditions.iter().enumerate() {
        for (pi, p) in out.profiles.iter().enumerate() {
            for (l, &level) in out.levels.iter().enumerate() {
                for (k, kind) in KINDS.iter().enumerate() {
                    let mean = |pp: usize| {
                        let (s, n) = acc[(c * nl + l) * np + pp][k];
                        if n == 0 {
                            Err(Error::invalid(format!("no records for {cond} at {level} dB")))
                        } else {
                            Ok(s / n as f64)
                        }
                    };
                    points.push(CndEffectPoint {
                        profile_id: p.id.clone(),
                        level_db: level,
                        condition: cond.clone(),
                        kind: *kind,
                        cnd_effect: cnd_effect(mean(base)?, mean(pi)?)?,
                    });
                }
            }
        }
    }
    Ok(points)
}
