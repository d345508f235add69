//! Neurograms: PSTHs stacked over characteristic frequency and smoothed
//! in time.
//!
//! Fine-timing (FT) neurograms keep short bins and a short smoothing
//! window; mean-rate (MR) neurograms use long bins and a wide window. Both
//! smooth with a unit-DC-gain Hamming kernel applied at every bin, so the
//! output bin width equals the rebinned width.

mod io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::periphery::{FiberTag, Psth};

pub use io::{read_neurogram, write_neurogram, write_neurogram_csv, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NeurogramKind {
    #[serde(rename = "MR")]
    Mr,
    #[serde(rename = "FT")]
    Ft,
}

impl NeurogramKind {
    pub const ALL: [NeurogramKind; 2] = [NeurogramKind::Mr, NeurogramKind::Ft];

    pub fn as_str(self) -> &'static str {
        match self {
            NeurogramKind::Mr => "MR",
            NeurogramKind::Ft => "FT",
        }
    }
}

impl fmt::Display for NeurogramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NeurogramKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MR" => Ok(NeurogramKind::Mr),
            "FT" => Ok(NeurogramKind::Ft),
            other => Err(Error::invalid(format!("unknown neurogram kind {other:?}"))),
        }
    }
}

/// Bin widths and smoothing windows for the two neurogram kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeurogramSettings {
    pub ft_bin_s: f64,
    pub ft_window: usize,
    pub mr_bin_s: f64,
    pub mr_window: usize,
}

impl Default for NeurogramSettings {
    fn default() -> Self {
        Self {
            ft_bin_s: 1e-4,
            ft_window: 32,
            mr_bin_s: 6.4e-3,
            mr_window: 16,
        }
    }
}

impl NeurogramSettings {
    pub fn bin_width(&self, kind: NeurogramKind) -> f64 {
        match kind {
            NeurogramKind::Mr => self.mr_bin_s,
            NeurogramKind::Ft => self.ft_bin_s,
        }
    }

    pub fn window(&self, kind: NeurogramKind) -> usize {
        match kind {
            NeurogramKind::Mr => self.mr_window,
            NeurogramKind::Ft => self.ft_window,
        }
    }
}

/// Provenance carried with every neurogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct NeurogramMetadata {
    pub stimulus_id: String,
    pub level_db_spl: Option<f64>,
    pub condition: String,
    pub profile_id: String,
    pub seed: u64,
}

/// CF x time matrix of (smoothed) spike counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Neurogram {
    pub values: Matrix,
    pub cf_axis_hz: Vec<f64>,
    pub bin_width_s: f64,
    pub kind: NeurogramKind,
    pub fiber: FiberTag,
    pub metadata: NeurogramMetadata,
}

impl Neurogram {
    pub fn validate(&self) -> Result<()> {
        if self.values.rows() != self.cf_axis_hz.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but {} CFs",
                self.values.rows(),
                self.cf_axis_hz.len()
            )));
        }
        if !(self.bin_width_s > 0.0) {
            return Err(Error::invalid("bin width must be positive"));
        }
        if self.values.as_slice().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("neurogram values must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Result of [`rebin`]: the coarser PSTH and whether samples were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Rebinned {
    pub psth: Psth,
    pub truncated: bool,
}

fn bin_ratio(source: f64, target: f64) -> Result<usize> {
    let ratio = target / source;
    let n = ratio.round();
    if !(n >= 1.0) || (ratio - n).abs() > 1e-9 * n {
        return Err(Error::invalid(format!(
            "target bin {target} s is not an integer multiple of {source} s"
        )));
    }
    Ok(n as usize)
}

/// Sums consecutive groups of bins. A trailing partial group is dropped
/// and reported via `truncated`.
pub fn rebin(psth: &Psth, target_bin_s: f64) -> Result<Rebinned> {
    let k = bin_ratio(psth.bin_width_s, target_bin_s)?;
    let counts: Vec<u32> = psth
        .counts
        .chunks_exact(k)
        .map(|c| c.iter().sum())
        .collect();
    Ok(Rebinned {
        truncated: psth.counts.len() % k != 0,
        psth: Psth {
            counts,
            bin_width_s: if k == 1 { psth.bin_width_s } else { target_bin_s },
            cf_hz: psth.cf_hz,
            fiber: psth.fiber,
        },
    })
}

/// Symmetric Hamming window scaled to unit sum.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let w: Vec<f64> = (0..len)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (len - 1) as f64).cos())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Smooths `x` with `kernel` centred at every sample. Near the edges the
/// kernel is renormalised over the samples it covers, so constant input
/// stays constant; in the interior the total mass is preserved.
pub fn smooth(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = x.len() as isize;
    let half = (kernel.len() / 2) as isize;
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let i = t + k as isize - half;
                if (0..n).contains(&i) {
                    acc += w * x[i as usize];
                    wsum += w;
                }
            }
            if wsum > 0.0 {
                acc / wsum
            } else {
                0.0
            }
        })
        .collect()
}

/// Builds an MR or FT neurogram from one PSTH per CF (any order; rows come
/// out in ascending CF).
pub fn build_neurogram(
    psths_over_cf: &[Psth],
    kind: NeurogramKind,
    settings: &NeurogramSettings,
) -> Result<Neurogram> {
    let first = psths_over_cf
        .first()
        .ok_or_else(|| Error::invalid("no PSTHs"))?;
    for p in psths_over_cf {
        if p.counts.len() != first.counts.len()
            || (p.bin_width_s - first.bin_width_s).abs() > 1e-12 * first.bin_width_s
            || p.fiber != first.fiber
        {
            return Err(Error::ShapeMismatch(
                "PSTHs differ in length, bin width or fiber type".into(),
            ));
        }
    }
    let mut order: Vec<&Psth> = psths_over_cf.iter().collect();
    order.sort_by(|a, b| a.cf_hz.total_cmp(&b.cf_hz));

    let target = settings.bin_width(kind);
    let kernel = hamming(settings.window(kind).max(1));
    let rows = order
        .iter()
        .map(|p| {
            let r = rebin(p, target)?;
            let x: Vec<f64> = r.psth.counts.iter().map(|&c| c as f64).collect();
            Ok(smooth(&x, &kernel))
        })
        .collect::<Result<Vec<_>>>()?;
    if rows[0].is_empty() {
        return Err(Error::invalid("PSTH shorter than one neurogram bin"));
    }
    Ok(Neurogram {
        values: Matrix::from_rows(&rows)?,
        cf_axis_hz: order.iter().map(|p| p.cf_hz).collect(),
        bin_width_s: target,
        kind,
        fiber: first.fiber,
        metadata: NeurogramMetadata::default(),
    })
}

/// `L` for the similarity constants: the maximum of the reference.
pub fn intensity_range(reference: &Neurogram) -> Result<f64> {
    let m = reference.values.max();
    if !(m > 0.0) {
        return Err(Error::ZeroReference);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn psth(counts: Vec<u32>, bin: f64, cf: f64) -> Psth {
        Psth {
            counts,
            bin_width_s: bin,
            cf_hz: cf,
            fiber: FiberTag::Hs,
        }
    }

    #[test]
    fn rebin_examples() {
        let r = rebin(&psth(vec![1, 2, 3, 4], 1e-4, 1.0), 2e-4).unwrap();
        assert_eq!(r.psth.counts, vec![3, 7]);
        assert!(!r.truncated);
        let same = rebin(&psth(vec![1, 2, 3, 4], 1e-4, 1.0), 1e-4).unwrap();
        assert_eq!(same.psth.counts, vec![1, 2, 3, 4]);
        let r = rebin(&psth(vec![1, 2, 3], 1e-4, 1.0), 2e-4).unwrap();
        assert_eq!(r.psth.counts, vec![3]);
        assert!(r.truncated);
        assert!(rebin(&psth(vec![1, 2, 3], 1e-4, 1.0), 1.5e-4).is_err());
    }

    #[test]
    fn hamming_unit_dc() {
        assert_abs_diff_eq!(hamming(32).iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        let c = smooth(&[3.0; 50], &hamming(16));
        assert!(c.iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn constant_rows_stay_constant() {
        let ps = vec![psth(vec![4; 640], 1e-4, 500.0), psth(vec![2; 640], 1e-4, 250.0)];
        let n = build_neurogram(&ps, NeurogramKind::Mr, &NeurogramSettings::default()).unwrap();
        assert_eq!(n.cf_axis_hz, vec![250.0, 500.0]);
        assert_eq!(n.values.cols(), 10);
        assert!(n.values.row(0).iter().all(|&v| (v - 128.0).abs() < 1e-9));
        assert!(n.values.row(1).iter().all(|&v| (v - 256.0).abs() < 1e-9));
        assert_eq!(n.bin_width_s, 6.4e-3);
    }

    #[test]
    fn impulse_mass_conserved() {
        let mut counts = vec![0; 200];
        counts[100] = 7;
        let n = build_neurogram(&[psth(counts, 1e-4, 1.0)], NeurogramKind::Ft, &NeurogramSettings::default())
            .unwrap();
        let row = n.values.row(0);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 7.0, epsilon = 1e-9);
        // Hamming-shaped: peaked near the impulse, symmetric-ish falloff
        let peak = row.iter().cloned().fold(0.0, f64::max);
        assert!(row[100] == peak || row[99] == peak || row[101] == peak);
        assert!(row[85] < row[95]);
        assert_eq!(row[50], 0.0);
    }

    #[test]
    fn mismatched_psths_rejected() {
        let ps = vec![psth(vec![1; 10], 1e-4, 1.0), psth(vec![1; 11], 1e-4, 2.0)];
        assert!(build_neurogram(&ps, NeurogramKind::Ft, &NeurogramSettings::default()).is_err());
    }

    #[test]
    fn intensity_range_rules() {
        let ps = vec![psth(vec![8; 64], 1e-4, 1.0)];
        let mut n = build_neurogram(&ps, NeurogramKind::Ft, &NeurogramSettings::default()).unwrap();
        assert_abs_diff_eq!(intensity_range(&n).unwrap(), 8.0, epsilon = 1e-12);
        n.values = n.values.scale(2.5);
        assert_abs_diff_eq!(intensity_range(&n).unwrap(), 20.0, epsilon = 1e-12);
        n.values = n.values.scale(0.0);
        assert!(matches!(intensity_range(&n), Err(Error::ZeroReference)));
    }
}
