use std::f64::consts::PI;

use super::Waveform;
use crate::error::{Error, Result};

const ZERO_CROSSINGS: f64 = 16.0;
const PASSBAND: f64 = 0.95;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(u: f64) -> f64 {
    // u in [-1, 1]
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let a = PI * (u + 1.0);
    0.42 - 0.5 * a.cos() + 0.08 * (2.0 * a).cos()
}

/// Band-limited resampling with a Blackman-windowed sinc kernel.
///
/// The output has `round(len * target / source)` samples; the anti-alias
/// cutoff sits at 95% of the lower of the two Nyquist frequencies.
pub fn resample(w: &Waveform, target_rate: f64) -> Result<Waveform> {
    if !(target_rate > 0.0) || !target_rate.is_finite() {
        return Err(Error::invalid(format!("target rate {target_rate}")));
    }
    let src_rate = w.sample_rate();
    if (target_rate - src_rate).abs() < 1e-9 * src_rate {
        return Ok(w.clone());
    }
    let ratio = target_rate / src_rate;
    let x = w.samples();
    let out_len = ((x.len() as f64 * ratio).round() as usize).max(1);
    let cutoff = ratio.min(1.0) * PASSBAND;
    let half = (ZERO_CROSSINGS / cutoff).ceil() as i64;
    let n_in = x.len() as i64;
    let out = (0..out_len)
        .map(|n| {
            let t = n as f64 / ratio;
            let centre = t.floor() as i64;
            let lo = (centre - half + 1).max(0);
            let hi = (centre + half).min(n_in - 1);
            let mut acc = 0.0;
            for k in lo..=hi {
                let d = t - k as f64;
                acc += x[k as usize] * cutoff * sinc(cutoff * d) * blackman(d / half as f64);
            }
            acc
        })
        .collect();
    Waveform::new(out, target_rate)
}
