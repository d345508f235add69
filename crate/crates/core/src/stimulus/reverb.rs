use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::error::{Error, Result};
use crate::seeding::{rng_for, str_tag};

/// Synthetic room: exponentially decaying Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverbSpec {
    pub rt60_s: f64,
    pub ir_length_s: f64,
    pub seed: u64,
}

impl Default for ReverbSpec {
    fn default() -> Self {
        Self {
            rt60_s: 0.5,
            ir_length_s: 0.5,
            seed: 0,
        }
    }
}

impl ReverbSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rt60_s > 0.0) || !self.rt60_s.is_finite() {
            return Err(Error::invalid(format!("rt60 {}", self.rt60_s)));
        }
        if !(self.ir_length_s >= self.rt60_s / 2.0) || !self.ir_length_s.is_finite() {
            return Err(Error::invalid(format!(
                "impulse response length {} s is below rt60/2",
                self.ir_length_s
            )));
        }
        Ok(())
    }
}

/// Amplitude envelope `exp(-t * 3 ln 10 / rt60)`: 60 dB down at `t = rt60`.
pub fn reverb_envelope(t_s: f64, rt60_s: f64) -> f64 {
    (-t_s * 3.0 * std::f64::consts::LN_10 / rt60_s).exp()
}

/// Unit-energy impulse response sampled at `sample_rate`.
pub fn impulse_response(spec: &ReverbSpec, sample_rate: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = ((spec.ir_length_s * sample_rate).round() as usize).max(1);
    let mut rng = rng_for(spec.seed, &[str_tag("reverb-ir")]);
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let g: f64 = rng.sample(StandardNormal);
            g * reverb_envelope(i as f64 / sample_rate, spec.rt60_s)
        })
        .collect();
    let energy: f64 = h.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::Internal("degenerate impulse response".into()));
    }
    let k = energy.sqrt().recip();
    h.iter_mut().for_each(|v| *v *= k);
    Ok(h)
}

/// Full linear convolution with the synthetic impulse response; the output
/// is `len(w) + len(ir) - 1` samples long.
pub fn add_reverb(w: &Waveform, spec: &ReverbSpec) -> Result<Waveform> {
    let h = impulse_response(spec, w.sample_rate())?;
    w.with_samples(convolve(w.samples(), &h))
}

pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        let mut out = vec![0.0; n];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(size, Complex64::new(0.0, 0.0));
        buf
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    planner.plan_fft_inverse(size).process(&mut fa);
    fa.iter().take(n).map(|c| c.re / size as f64).collect()
}
