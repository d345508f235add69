//! Synthetic consonant-vowel-consonant utterances.
//!
//! These are crude formant-synthesis stand-ins for recorded speech: a
//! noise or burst onset, a voiced vowel with three formants and a falling
//! pitch, and a noise or burst offset. They exist so that tests, demos and
//! desk-scale runs have deterministic speech-like material without shipping
//! audio files.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;

use super::{write_wav_i16, CorpusEntry, CorpusManifest, Waveform};
use crate::error::Result;
use crate::seeding::rng_for;

#[derive(Debug, Clone, Copy)]
enum Consonant {
    /// band-limited frication: centre, bandwidth (Hz)
    Fricative(f64, f64),
    /// short broadband burst followed by aspiration
    Stop(f64),
    /// low-frequency voiced murmur
    Nasal(f64),
}

const VOWELS: [(f64, f64, f64); 6] = [
    (730.0, 1090.0, 2440.0), // /a/
    (270.0, 2290.0, 3010.0), // /i/
    (300.0, 870.0, 2240.0),  // /u/
    (530.0, 1840.0, 2480.0), // /e/
    (570.0, 840.0, 2410.0),  // /o/
    (660.0, 1720.0, 2410.0), // /ae/
];

const ONSETS: [Consonant; 5] = [
    Consonant::Fricative(5500.0, 2500.0),
    Consonant::Stop(3000.0),
    Consonant::Fricative(3000.0, 1200.0),
    Consonant::Nasal(260.0),
    Consonant::Stop(1500.0),
];

const CODAS: [Consonant; 4] = [
    Consonant::Stop(2500.0),
    Consonant::Fricative(4500.0, 2000.0),
    Consonant::Nasal(300.0),
    Consonant::Stop(4000.0),
];

struct Resonator {
    a1: f64,
    a2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, fs: f64) -> Self {
        let r = (-PI * bw / fs).exp();
        Self {
            a1: 2.0 * r * (2.0 * PI * freq / fs).cos(),
            a2: -r * r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn normalize(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
}

fn ramp(x: &mut [f64], n: usize) {
    let n = n.min(x.len() / 2);
    let len = x.len();
    for i in 0..n {
        let g = 0.5 - 0.5 * (PI * i as f64 / n as f64).cos();
        x[i] *= g;
        x[len - 1 - i] *= g;
    }
}

fn consonant(c: Consonant, dur: f64, fs: f64, rng: &mut impl Rng) -> Vec<f64> {
    let n = (dur * fs) as usize;
    let mut out: Vec<f64> = match c {
        Consonant::Fricative(f, bw) => {
            let mut r1 = Resonator::new(f, bw, fs);
            let mut r2 = Resonator::new(f, bw, fs);
            (0..n)
                .map(|_| r2.step(r1.step(rng.sample::<f64, _>(StandardNormal))))
                .collect()
        }
        Consonant::Stop(f) => {
            let mut r = Resonator::new(f, f * 0.8, fs);
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    let env = if t < 0.01 { 1.0 } else { 0.25 * (-(t - 0.01) / 0.02).exp() };
                    r.step(env * rng.sample::<f64, _>(StandardNormal))
                })
                .collect()
        }
        Consonant::Nasal(f) => {
            let mut r = Resonator::new(f, 100.0, fs);
            (0..n)
                .map(|i| {
                    let pulse = if i % (fs / 115.0) as usize == 0 { 1.0 } else { 0.0 };
                    r.step(pulse)
                })
                .collect()
        }
    };
    normalize(&mut out, 0.3);
    ramp(&mut out, (0.005 * fs) as usize);
    out
}

fn vowel(formants: (f64, f64, f64), f0: f64, dur: f64, fs: f64) -> Vec<f64> {
    let n = (dur * fs) as usize;
    let mut res = [
        Resonator::new(formants.0, 80.0, fs),
        Resonator::new(formants.1, 100.0, fs),
        Resonator::new(formants.2, 150.0, fs),
    ];
    let gains = [1.0, 0.5, 0.25];
    let mut phase = 0.0;
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let pitch = f0 * (1.0 - 0.15 * i as f64 / n as f64);
            phase += pitch / fs;
            // differentiated glottal pulse
            let src = if phase >= 1.0 {
                phase -= 1.0;
                1.0
            } else {
                0.0
            };
            res.iter_mut().zip(gains).map(|(r, g)| g * r.step(src)).sum()
        })
        .collect();
    normalize(&mut out, 1.0);
    ramp(&mut out, (0.02 * fs) as usize);
    out
}

/// The `index`-th synthetic word. Deterministic in `index` and `sample_rate`.
pub fn cvc_word(index: u64, sample_rate: f64) -> Waveform {
    let mut rng = rng_for(index, &[0x5EED_C0DE]);
    let onset = ONSETS[(index % ONSETS.len() as u64) as usize];
    let vowel_f = VOWELS[((index / 2) % VOWELS.len() as u64) as usize];
    let coda = CODAS[((index / 3 + index) % CODAS.len() as u64) as usize];
    let f0 = 105.0 + 7.0 * (index % 6) as f64;
    let pad = vec![0.0; (0.02 * sample_rate) as usize];

    let mut x = pad.clone();
    x.extend(consonant(onset, 0.08, sample_rate, &mut rng));
    x.extend(vowel(vowel_f, f0, 0.22, sample_rate));
    x.extend(consonant(coda, 0.07, sample_rate, &mut rng));
    x.extend(pad);
    normalize(&mut x, 0.5);
    Waveform::new(x, sample_rate).expect("synthetic word is finite and non-empty")
}

/// Writes `n_words` synthetic words as 16-bit WAV files plus a manifest
/// into `dir`, ten words per list.
pub fn write_synthetic_corpus(
    dir: impl AsRef<Path>,
    n_words: usize,
    sample_rate: f64,
) -> Result<CorpusManifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir.display().to_string(), e))?;
    let mut entries = Vec::with_capacity(n_words);
    for i in 0..n_words {
        let word_id = format!("w{i:03}");
        let path = dir.join(format!("{word_id}.wav"));
        write_wav_i16(&path, &cvc_word(i as u64, sample_rate))?;
        entries.push(CorpusEntry {
            word_id,
            list_id: (i / 10) as u32 + 1,
            path,
        });
    }
    let manifest = CorpusManifest {
        description: format!("{n_words} synthetic CVC words at {sample_rate} Hz"),
        entries,
    };
    let mut portable = manifest.clone();
    for e in &mut portable.entries {
        e.path = PathBuf::from(e.path.file_name().expect("file name"));
    }
    portable.save(dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_are_deterministic_and_distinct() {
        let a = cvc_word(3, 16000.0);
        assert_eq!(a, cvc_word(3, 16000.0));
        assert_ne!(a, cvc_word(4, 16000.0));
        assert!((a.duration_s() - 0.41).abs() < 0.01);
        assert!(a.rms() > 0.01);
    }
}
