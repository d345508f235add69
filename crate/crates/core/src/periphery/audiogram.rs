use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard audiometric frequencies, Hz.
pub const AUDIOMETRIC_FREQS: [f64; 7] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];

/// Hearing thresholds (dB HL) at increasing frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Audiogram {
    points: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for Audiogram {
    type Error = Error;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        Audiogram::new(points)
    }
}

impl From<Audiogram> for Vec<(f64, f64)> {
    fn from(a: Audiogram) -> Self {
        a.points
    }
}

impl Audiogram {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("audiogram needs at least two points"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid("audiogram frequencies must strictly increase"));
            }
        }
        for &(f, t) in &points {
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::invalid(format!("audiogram frequency {f}")));
            }
            if !(0.0..=120.0).contains(&t) {
                return Err(Error::invalid(format!(
                    "threshold {t} dB HL at {f} Hz outside [0, 120]"
                )));
            }
        }
        if points[0].0 > 250.0 || points[points.len() - 1].0 < 8000.0 {
            return Err(Error::invalid("audiogram must cover 250-8000 Hz"));
        }
        Ok(Self { points })
    }

    /// The same threshold at every audiometric frequency.
    pub fn flat(db_hl: f64) -> Result<Self> {
        Self::new(AUDIOMETRIC_FREQS.iter().map(|&f| (f, db_hl)).collect())
    }

    /// Age-related sloping loss used for the fiber-loss sweep.
    pub fn sloping_loss() -> Self {
        let t = [0.0, 0.0, 10.0, 20.0, 23.0, 45.0, 75.0];
        Self::new(AUDIOMETRIC_FREQS.iter().copied().zip(t).collect())
            .expect("table values are valid")
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_freq(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_freq(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// Threshold at `freq_hz`, interpolated linearly in log-frequency and
    /// clamped to the end points outside the measured range.
    pub fn threshold_at(&self, freq_hz: f64) -> f64 {
        let p = &self.points;
        if freq_hz <= p[0].0 {
            return p[0].1;
        }
        if freq_hz >= p[p.len() - 1].0 {
            return p[p.len() - 1].1;
        }
        let i = p.partition_point(|&(f, _)| f <= freq_hz) - 1;
        let (f0, t0) = p[i];
        let (f1, t1) = p[i + 1];
        let x = (freq_hz.ln() - f0.ln()) / (f1.ln() - f0.ln());
        t0 + x * (t1 - t0)
    }
}

/// Threshold shift attributed to outer-hair-cell gain loss at `cf_hz`,
/// capped at `cap_db`. Loss beyond the cap is not modelled.
pub fn ohc_gain_reduction(audiogram: &Audiogram, cf_hz: f64, cap_db: f64) -> f64 {
    audiogram.threshold_at(cf_hz).min(cap_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sloping_profile_values() {
        let a = Audiogram::sloping_loss();
        assert_eq!(ohc_gain_reduction(&a, 4000.0, 55.0), 45.0);
        assert_eq!(ohc_gain_reduction(&a, 250.0, 55.0), 0.0);
        let gm = (2000.0f64 * 4000.0).sqrt();
        assert_abs_diff_eq!(ohc_gain_reduction(&a, gm, 55.0), 34.0, epsilon = 1e-9);
        // 75 dB HL at 8 kHz is capped
        assert_eq!(ohc_gain_reduction(&a, 8000.0, 55.0), 55.0);
    }

    #[test]
    fn clamps_outside_range() {
        let a = Audiogram::sloping_loss();
        assert_eq!(a.threshold_at(50.0), 0.0);
        assert_eq!(a.threshold_at(12000.0), 75.0);
    }

    #[test]
    fn validation() {
        assert!(Audiogram::new(vec![(250.0, 0.0), (250.0, 0.0), (8000.0, 0.0)]).is_err());
        assert!(Audiogram::new(vec![(250.0, -5.0), (8000.0, 0.0)]).is_err());
        assert!(Audiogram::new(vec![(250.0, 0.0), (8000.0, 130.0)]).is_err());
        assert!(Audiogram::new(vec![(500.0, 0.0), (8000.0, 0.0)]).is_err());
        assert!(Audiogram::new(vec![(250.0, 0.0), (4000.0, 0.0)]).is_err());
        assert!(Audiogram::flat(40.0).is_ok());
    }

    #[test]
    fn serde_validates() {
        let a: Audiogram = serde_json::from_str("[[250,0],[8000,10]]").unwrap();
        assert_eq!(a.threshold_at(8000.0), 10.0);
        assert!(serde_json::from_str::<Audiogram>("[[8000,0],[250,10]]").is_err());
    }
}
