//! Speech material in, calibrated pressure waveforms out.
//!
//! Everything here is a pure function of its inputs (plus an explicit seed
//! where randomness is involved).

mod manifest;
mod noise;
mod resample;
mod reverb;
pub mod synth;
mod wav;
mod wsola;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use manifest::{CorpusEntry, CorpusManifest};
pub use noise::{long_term_spectrum, make_speech_shaped_noise, speech_shaped_noise};
pub use resample::resample;
pub use reverb::{add_reverb, impulse_response, reverb_envelope, ReverbSpec};
pub use wav::{load_wav, write_wav_f32, write_wav_i16};
pub use wsola::{time_compress, WsolaParams};

/// Reference pressure for 0 dB SPL, in pascals.
pub const P_REF: f64 = 20e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::invalid(format!("sample rate {sample_rate}")));
        }
        if samples.is_empty() {
            return Err(Error::ZeroLengthAudio);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("non-finite sample"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate)
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// RMS pressure in pascals of a signal presented at `level_db_spl`.
pub fn spl_to_pascal(level_db_spl: f64) -> f64 {
    P_REF * 10f64.powf(level_db_spl / 20.0)
}

/// `p = w / rms(w) * 20e-6 * 10^(L/20)`.
pub fn scale_to_spl(w: &Waveform, level_db_spl: f64) -> Result<Waveform> {
    if !level_db_spl.is_finite() {
        return Err(Error::invalid("non-finite level"));
    }
    let r = w.rms();
    if r == 0.0 {
        return Err(Error::Silent("cannot calibrate a zero-RMS waveform"));
    }
    let k = spl_to_pascal(level_db_spl) / r;
    w.with_samples(w.samples.iter().map(|s| s * k).collect())
}

/// Adds `noise` (truncated to the signal length) scaled so that the
/// signal-to-noise ratio is `snr_db`.
pub fn mix_at_snr(signal: &Waveform, noise: &Waveform, snr_db: f64) -> Result<Waveform> {
    if signal.sample_rate != noise.sample_rate {
        return Err(Error::invalid(format!(
            "sample rates differ: {} vs {}",
            signal.sample_rate, noise.sample_rate
        )));
    }
    if noise.len() < signal.len() {
        return Err(Error::invalid("noise shorter than signal"));
    }
    let n = &noise.samples[..signal.len()];
    let rs = signal.rms();
    let rn = rms(n);
    if rs == 0.0 {
        return Err(Error::Silent("signal"));
    }
    if rn == 0.0 {
        return Err(Error::Silent("noise"));
    }
    let g = noise_gain(rs, rn, snr_db);
    signal.with_samples(
        signal
            .samples
            .iter()
            .zip(n)
            .map(|(s, v)| s + g * v)
            .collect(),
    )
}

/// Gain applied to noise of RMS `noise_rms` to sit `snr_db` below a signal
/// of RMS `signal_rms`.
pub fn noise_gain(signal_rms: f64, noise_rms: f64, snr_db: f64) -> f64 {
    signal_rms / (noise_rms * 10f64.powf(snr_db / 20.0))
}

/// Presentation level plus degradations applied before calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusCondition {
    pub level_db_spl: f64,
    #[serde(default = "unit")]
    pub compression_factor: f64,
    #[serde(default)]
    pub reverb: Option<ReverbSpec>,
}

fn unit() -> f64 {
    1.0
}

impl StimulusCondition {
    pub fn clean(level_db_spl: f64) -> Self {
        Self {
            level_db_spl,
            compression_factor: 1.0,
            reverb: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.level_db_spl.is_finite() {
            return Err(Error::invalid("non-finite level"));
        }
        if !(self.compression_factor > 0.0 && self.compression_factor <= 1.0) {
            return Err(Error::invalid(format!(
                "compression factor {} outside (0, 1]",
                self.compression_factor
            )));
        }
        if let Some(r) = &self.reverb {
            r.validate()?;
        }
        Ok(())
    }

    /// Compress, reverberate, optionally mix noise, resample to
    /// `target_rate` and calibrate to the presentation level.
    pub fn apply(
        &self,
        w: &Waveform,
        noise: Option<(&Waveform, f64)>,
        target_rate: f64,
    ) -> Result<Waveform> {
        self.validate()?;
        let mut out = time_compress(w, self.compression_factor)?;
        if let Some(spec) = &self.reverb {
            out = add_reverb(&out, spec)?;
        }
        if let Some((n, snr)) = noise {
            let n = if n.sample_rate() != out.sample_rate() {
                resample(n, out.sample_rate())?
            } else {
                n.clone()
            };
            out = mix_at_snr(&out, &n, snr)?;
        }
        if out.sample_rate() != target_rate {
            out = resample(&out, target_rate)?;
        }
        scale_to_spl(&out, self.level_db_spl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ramp() -> Waveform {
        Waveform::new((0..400).map(|i| ((i * 37) % 101) as f64 - 50.0).collect(), 8000.0).unwrap()
    }

    #[test]
    fn calibration_hits_reference_levels() {
        let w = ramp();
        assert_relative_eq!(scale_to_spl(&w, 0.0).unwrap().rms(), 2.0e-5, max_relative = 1e-12);
        assert_relative_eq!(
            scale_to_spl(&w, 65.0).unwrap().rms(),
            3.556558820e-2,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            scale_to_spl(&w, 95.0).unwrap().rms(),
            1.12468265038,
            max_relative = 1e-9
        );
    }

    #[test]
    fn calibration_is_idempotent() {
        let once = scale_to_spl(&ramp(), 80.0).unwrap();
        let twice = scale_to_spl(&once, 80.0).unwrap();
        assert_relative_eq!(once.rms(), twice.rms(), max_relative = 1e-12);
    }

    #[test]
    fn silent_input_is_an_error() {
        let w = Waveform::new(vec![0.0; 10], 8000.0).unwrap();
        assert!(matches!(scale_to_spl(&w, 60.0), Err(Error::Silent(_))));
        assert!(mix_at_snr(&w, &ramp(), 0.0).is_err());
    }

    #[test]
    fn waveform_invariants() {
        assert!(Waveform::new(vec![], 8000.0).is_err());
        assert!(Waveform::new(vec![1.0], 0.0).is_err());
        assert!(Waveform::new(vec![f64::NAN], 8000.0).is_err());
    }

    #[test]
    fn snr_mixing() {
        let s = ramp();
        let noise = Waveform::new(
            (0..500).map(|i| ((i * 7919) % 211) as f64 / 211.0 - 0.5).collect(),
            8000.0,
        )
        .unwrap();
        let mixed = mix_at_snr(&s, &noise, 0.0).unwrap();
        let scaled: Vec<f64> = mixed.samples().iter().zip(s.samples()).map(|(m, v)| m - v).collect();
        assert_relative_eq!(rms(&scaled), s.rms(), max_relative = 1e-9);

        let g0 = noise_gain(s.rms(), rms(&noise.samples()[..400]), 0.0);
        let g20 = noise_gain(s.rms(), rms(&noise.samples()[..400]), 20.0);
        assert_relative_eq!(g0 / g20, 10.0, max_relative = 1e-12);
        assert_relative_eq!(noise_gain(0.1, 1.0, 10.0), 0.1 / 10f64.powf(0.5), max_relative = 1e-12);
        assert_relative_eq!(noise_gain(0.1, 1.0, 10.0), 0.031623, max_relative = 1e-5);

        let short = Waveform::new(vec![1.0; 10], 8000.0).unwrap();
        assert!(mix_at_snr(&s, &short, 0.0).is_err());
    }

    #[test]
    fn condition_validation() {
        let mut c = StimulusCondition::clean(65.0);
        assert!(c.validate().is_ok());
        c.compression_factor = 0.0;
        assert!(c.validate().is_err());
        c.compression_factor = 1.2;
        assert!(c.validate().is_err());
    }
}
