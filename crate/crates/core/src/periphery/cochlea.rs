use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::audiogram::{ohc_gain_reduction, Audiogram};
use crate::stimulus::Waveform;

/// Inner-hair-cell drive for one cochlear place.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub values: Vec<f64>,
    pub sample_rate: f64,
    pub cf_hz: f64,
}

/// How audiometric loss reshapes the cochlear filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CochlearParams {
    /// Largest threshold shift attributed to OHC gain, dB.
    pub ohc_cap_db: f64,
    /// Bandwidth multiplier at full OHC loss is `1 + broadening`.
    pub broadening: f64,
    /// Corner of the 2nd-order phase-locking low-pass, Hz.
    pub phase_lock_hz: f64,
}

impl Default for CochlearParams {
    fn default() -> Self {
        Self {
            ohc_cap_db: 55.0,
            broadening: 2.0,
            phase_lock_hz: 3000.0,
        }
    }
}

/// Equivalent rectangular bandwidth (Glasberg & Moore), Hz.
pub fn erb(cf_hz: f64) -> f64 {
    24.7 * (4.37 * cf_hz / 1000.0 + 1.0)
}

/// Fourth-order gammatone built from four cascaded complex one-pole
/// sections tuned to `cf`. Gain is exactly one at `cf`.
struct Gammatone {
    pole: (f64, f64),
    gain: f64,
    state: [(f64, f64); 4],
}

impl Gammatone {
    fn new(cf_hz: f64, erb_hz: f64, fs: f64) -> Self {
        let b = 1.019 * erb_hz;
        let r = (-2.0 * PI * b / fs).exp();
        let w = 2.0 * PI * cf_hz / fs;
        Self {
            pole: (r * w.cos(), r * w.sin()),
            gain: 1.0 - r,
            state: [(0.0, 0.0); 4],
        }
    }

    #[inline]
    fn step(&mut self, x: f64) -> f64 {
        let (pr, pi) = self.pole;
        let mut re = x;
        let mut im = 0.0;
        for s in &mut self.state {
            let nr = self.gain * re + pr * s.0 - pi * s.1;
            let ni = self.gain * im + pr * s.1 + pi * s.0;
            *s = (nr, ni);
            re = nr;
            im = ni;
        }
        // positive-frequency half of a real input: double it
        2.0 * re
    }
}

struct Lowpass {
    b0: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Lowpass {
    fn butterworth(fc: f64, fs: f64) -> Self {
        let k = (PI * fc / fs).tan();
        let norm = 1.0 / (1.0 + SQRT_2 * k + k * k);
        Self {
            b0: k * k * norm,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - SQRT_2 * k + k * k) * norm,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    #[inline]
    fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * (x + 2.0 * self.x1 + self.x2) - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Drive at one place for a given OHC gain loss (dB).
pub fn band_drive_for_loss(pressure: &Waveform, cf_hz: f64, loss_db: f64, params: &CochlearParams) -> Drive {
    let fs = pressure.sample_rate();
    let loss_fraction = if params.ohc_cap_db > 0.0 {
        (loss_db / params.ohc_cap_db).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let bw = erb(cf_hz) * (1.0 + params.broadening * loss_fraction);
    let gain = 10f64.powf(-loss_db / 20.0);
    let mut gt = Gammatone::new(cf_hz, bw, fs);
    let mut lp = Lowpass::butterworth(params.phase_lock_hz.min(0.45 * fs), fs);
    let values = pressure
        .samples()
        .iter()
        .map(|&x| lp.step((gain * gt.step(x)).max(0.0)).max(0.0))
        .collect();
    Drive {
        values,
        sample_rate: fs,
        cf_hz,
    }
}

/// Gammatone filtering at `cf_hz` with bandwidth broadened and gain reduced
/// according to the OHC loss read from `audiogram`, then half-wave
/// rectification and a phase-locking low-pass.
pub fn band_drive(pressure: &Waveform, cf_hz: f64, audiogram: &Audiogram, params: &CochlearParams) -> Drive {
    let loss = ohc_gain_reduction(audiogram, cf_hz, params.ohc_cap_db);
    band_drive_for_loss(pressure, cf_hz, loss, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::rms;

    fn tone(f: f64, fs: f64, secs: f64, amp: f64) -> Waveform {
        let n = (fs * secs) as usize;
        Waveform::new(
            (0..n).map(|i| amp * (2.0 * PI * f * i as f64 / fs).sin()).collect(),
            fs,
        )
        .unwrap()
    }

    #[test]
    fn silence_gives_zero_drive() {
        let w = Waveform::new(vec![0.0; 1000], 100_000.0).unwrap();
        let d = band_drive(&w, 1000.0, &Audiogram::flat(0.0).unwrap(), &CochlearParams::default());
        assert!(d.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_gain_at_cf() {
        let fs = 100_000.0;
        let w = tone(1000.0, fs, 0.2, 1.0);
        let mut gt = Gammatone::new(1000.0, erb(1000.0), fs);
        let y: Vec<f64> = w.samples().iter().map(|&x| gt.step(x)).collect();
        let steady = &y[10_000..];
        assert!((rms(steady) - 1.0 / 2f64.sqrt()).abs() < 1e-3, "{}", rms(steady));
    }

    #[test]
    fn tone_at_cf_gives_periodic_rectified_drive() {
        let fs = 100_000.0;
        let f = 500.0;
        let w = tone(f, fs, 0.2, 1.0);
        let d = band_drive(&w, f, &Audiogram::flat(0.0).unwrap(), &CochlearParams::default());
        let period = (fs / f) as usize;
        let tail = &d.values[10_000..];
        // periodic at the tone frequency
        let diff: f64 = tail
            .iter()
            .zip(&tail[period..])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-3);
        // rectified: a substantial fraction of each cycle is near zero
        let near_zero = tail[..period].iter().filter(|&&v| v < 0.05).count();
        assert!(near_zero > period / 4);
        assert!(tail.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn gain_reduction_scales_drive() {
        let fs = 100_000.0;
        let f = 2000.0;
        let w = tone(f, fs, 0.2, 0.1);
        let p = CochlearParams::default();
        let a = band_drive_for_loss(&w, f, 0.0, &p);
        let b = band_drive_for_loss(&w, f, 45.0, &p);
        let ratio = rms(&b.values[10_000..]) / rms(&a.values[10_000..]);
        let expected = 10f64.powf(-45.0 / 20.0);
        assert!((ratio / expected - 1.0).abs() < 0.01, "ratio {ratio} vs {expected}");
    }
}
