use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::error::{Error, Result};

/// Waveform-similarity overlap-add settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WsolaParams {
    pub frame_s: f64,
    /// Half-width of the alignment search around the nominal analysis
    /// position.
    pub tolerance_s: f64,
}

impl Default for WsolaParams {
    fn default() -> Self {
        Self {
            frame_s: 0.020,
            tolerance_s: 0.005,
        }
    }
}

/// Pitch-preserving time compression to `factor` of the original duration.
/// `factor == 1` returns the input unchanged.
pub fn time_compress(w: &Waveform, factor: f64) -> Result<Waveform> {
    time_compress_with(w, factor, WsolaParams::default())
}

pub fn time_compress_with(w: &Waveform, factor: f64, params: WsolaParams) -> Result<Waveform> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::invalid(format!("compression factor {factor} outside (0, 1]")));
    }
    if factor == 1.0 {
        return Ok(w.clone());
    }
    let fs = w.sample_rate();
    let x = w.samples();
    let frame = ((params.frame_s * fs).round() as usize).max(4) & !1;
    if x.len() < frame {
        return Err(Error::invalid(format!(
            "input of {} samples is shorter than one {frame}-sample analysis frame",
            x.len()
        )));
    }
    let tol = (params.tolerance_s * fs).round() as i64;
    let syn_hop = frame / 2;
    let ana_hop = syn_hop as f64 / factor;
    let out_len = ((x.len() as f64 * factor).round() as usize).max(1);
    let last_start = (x.len() - frame) as i64;

    // periodic Hann: overlap-adds to one at 50% overlap
    let window: Vec<f64> = (0..frame)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / frame as f64).cos())
        .collect();

    let mut y = vec![0.0; out_len + frame];
    let mut norm = vec![0.0; out_len + frame];
    let mut prev_start: Option<i64> = None;
    let mut k = 0usize;
    while k * syn_hop < out_len {
        let nominal = ((k as f64 * ana_hop).round() as i64).min(last_start);
        let start = match prev_start {
            None => nominal,
            Some(p) => {
                // natural continuation of the previously placed frame
                let target = (p + syn_hop as i64).min(last_start);
                let lo = (nominal - tol).max(0);
                let hi = (nominal + tol).min(last_start);
                best_alignment(x, target as usize, lo, hi, frame)
            }
        };
        let s = start as usize;
        let o = k * syn_hop;
        for i in 0..frame {
            y[o + i] += window[i] * x[s + i];
            norm[o + i] += window[i];
        }
        prev_start = Some(start);
        k += 1;
    }
    for (v, n) in y.iter_mut().zip(&norm) {
        if *n > 1e-9 {
            *v /= n;
        }
    }
    y.truncate(out_len);
    w.with_samples(y)
}

fn best_alignment(x: &[f64], target: usize, lo: i64, hi: i64, frame: usize) -> i64 {
    let reference = &x[target..target + frame];
    let mut best = lo;
    let mut best_score = f64::NEG_INFINITY;
    for cand in lo..=hi {
        let seg = &x[cand as usize..cand as usize + frame];
        let score: f64 = reference.iter().zip(seg).map(|(a, b)| a * b).sum();
        if score > best_score {
            best_score = score;
            best = cand;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_factor_is_bit_identical() {
        let w = Waveform::new((0..999).map(|i| (i as f64 * 0.37).sin()).collect(), 16000.0).unwrap();
        assert_eq!(time_compress(&w, 1.0).unwrap(), w);
    }

    #[test]
    fn duration_contract() {
        let w = Waveform::new(
            (0..16000).map(|i| (i as f64 * 0.05).sin() * (i as f64 * 0.0011).cos()).collect(),
            16000.0,
        )
        .unwrap();
        let out = time_compress(&w, 0.65).unwrap();
        assert!((out.duration_s() - 0.65).abs() <= 0.02);
        let ratio = out.len() as f64 / w.len() as f64;
        assert!((ratio - 0.65).abs() <= 320.0 / 16000.0);
    }

    #[test]
    fn too_short_and_bad_factor() {
        let w = Waveform::new(vec![0.1; 100], 16000.0).unwrap();
        assert!(time_compress(&w, 0.5).is_err());
        assert!(time_compress(&w, 0.0).is_err());
        assert!(time_compress(&w, 1.5).is_err());
    }
}
