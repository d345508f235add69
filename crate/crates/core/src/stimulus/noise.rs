use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{load_wav, resample, rms, CorpusManifest, Waveform};
use crate::error::{Error, Result};
use crate::seeding::{rng_for, str_tag};

/// Welch segment length, in samples.
const SEGMENT: usize = 1024;

/// Welch-averaged magnitude spectrum of the concatenated signals.
///
/// Returns `SEGMENT / 2 + 1` magnitudes on a grid of `fs / SEGMENT` Hz,
/// together with the common sample rate. All signals are brought to the
/// rate of the first.
pub fn long_term_spectrum(signals: &[Waveform]) -> Result<(Vec<f64>, f64)> {
    let first = signals
        .first()
        .ok_or_else(|| Error::invalid("empty corpus"))?;
    let fs = first.sample_rate();
    let mut concat = Vec::new();
    for s in signals {
        if s.sample_rate() == fs {
            concat.extend_from_slice(s.samples());
        } else {
            concat.extend_from_slice(resample(s, fs)?.samples());
        }
    }
    if concat.len() < SEGMENT {
        concat.resize(SEGMENT, 0.0);
    }
    let window: Vec<f64> = (0..SEGMENT)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / SEGMENT as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(SEGMENT);
    let mut power = vec![0.0; SEGMENT / 2 + 1];
    let mut frames = 0usize;
    let mut start = 0;
    while start + SEGMENT <= concat.len() {
        let mut buf: Vec<Complex64> = concat[start..start + SEGMENT]
            .iter()
            .zip(&window)
            .map(|(x, w)| Complex64::new(x * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p += c.norm_sqr();
        }
        frames += 1;
        start += SEGMENT / 2;
    }
    Ok((
        power.iter().map(|p| (p / frames as f64).sqrt()).collect(),
        fs,
    ))
}

/// Gaussian noise filtered by the long-term spectrum of `corpus`, normalised
/// to unit RMS.
pub fn speech_shaped_noise(corpus: &[Waveform], duration_s: f64, seed: u64) -> Result<Waveform> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::invalid(format!("noise duration {duration_s}")));
    }
    let (mag, fs) = long_term_spectrum(corpus)?;
    let n = ((duration_s * fs).round() as usize).max(2);
    let mut rng = rng_for(seed, &[str_tag("speech-shaped-noise")]);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let grid = fs / SEGMENT as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * fs / n as f64;
        let pos = f / grid;
        let i = (pos.floor() as usize).min(mag.len() - 1);
        let j = (i + 1).min(mag.len() - 1);
        let frac = pos - i as f64;
        *c *= mag[i] * (1.0 - frac) + mag[j] * frac;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let out: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let r = rms(&out);
    if r == 0.0 {
        return Err(Error::Silent("corpus has no spectral energy"));
    }
    Waveform::new(out.iter().map(|v| v / r).collect(), fs)
}

/// Loads every file named in `corpus` and shapes noise to their average
/// spectrum.
pub fn make_speech_shaped_noise(
    corpus: &CorpusManifest,
    duration_s: f64,
    seed: u64,
) -> Result<Waveform> {
    if corpus.entries.is_empty() {
        return Err(Error::invalid("empty corpus"));
    }
    let signals = corpus
        .entries
        .iter()
        .map(|e| load_wav(&e.path))
        .collect::<Result<Vec<_>>>()?;
    speech_shaped_noise(&signals, duration_s, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn corpus() -> Vec<Waveform> {
        (0..3)
            .map(|k| crate::stimulus::synth::cvc_word(k, 16000.0))
            .collect()
    }

    #[test]
    fn deterministic_and_unit_rms() {
        let c = corpus();
        let a = speech_shaped_noise(&c, 0.5, 7).unwrap();
        let b = speech_shaped_noise(&c, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert_abs_diff_eq!(a.rms(), 1.0, epsilon = 1e-9);
        assert_eq!(a.len(), 8000);
        let other = speech_shaped_noise(&c, 0.5, 8).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn bad_duration() {
        assert!(speech_shaped_noise(&corpus(), 0.0, 1).is_err());
        assert!(speech_shaped_noise(&[], 1.0, 1).is_err());
    }
}
