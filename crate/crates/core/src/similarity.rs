//! Windowed structural similarity between a reference and a degraded
//! neurogram.
//!
//! The full three-component index (luminance, contrast, structure) is kept
//! for cross-checking against ordinary SSIM implementations. The neurogram
//! index drops the contrast term and the component weights, leaving
//!
//! ```text
//! NSI = (2 mu_r mu_d + C1) / (mu_r^2 + mu_d^2 + C1) * (sigma_rd + C3) / (sigma_r sigma_d + C3)
//! ```
//!
//! evaluated over every interior 3x3 window and averaged into the NSIM
//! score. Borders are not padded: a `N x M` input yields an
//! `(N-2) x (M-2)` map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{compensated_sum, Matrix};

/// How the stabilising constants scale with the intensity range `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsRule {
    /// `C1 = 0.01 L`, `C2 = (0.03 L)^2`, `C3 = C2 / 2`.
    #[default]
    Paper,
    /// `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2`, `C3 = C2 / 2` (classic SSIM).
    Standard,
}

/// Where the intensity range `L` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LMode {
    /// Maximum of the reference neurogram.
    #[default]
    ReferenceMax,
    /// Maximum over both neurograms.
    PairMax,
    /// A fixed value, independent of either input.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Constants {
    pub fn new(rule: ConstantsRule, l: f64) -> Self {
        let c1 = match rule {
            ConstantsRule::Paper => 0.01 * l,
            ConstantsRule::Standard => (0.01 * l).powi(2),
        };
        let c2 = (0.03 * l).powi(2);
        Self { c1, c2, c3: c2 / 2.0 }
    }
}

/// Normalised 3x3 weighting window, indexed `[df + 1][dt + 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowKernel {
    pub weights: [[f64; 3]; 3],
}

impl WindowKernel {
    /// Gaussian of the given radius sampled on the offsets `{-1, 0, 1}^2`.
    pub fn gaussian(radius: f64) -> Self {
        let mut weights = [[0.0; 3]; 3];
        let mut total = 0.0;
        for (i, row) in weights.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                let df = i as f64 - 1.0;
                let dt = j as f64 - 1.0;
                *w = (-(df * df + dt * dt) / (2.0 * radius * radius)).exp();
                total += *w;
            }
        }
        for w in weights.iter_mut().flatten() {
            *w /= total;
        }
        Self { weights }
    }

    pub fn uniform() -> Self {
        Self {
            weights: [[1.0 / 9.0; 3]; 3],
        }
    }

    pub fn center(&self) -> f64 {
        self.weights[1][1]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }
}

impl Default for WindowKernel {
    fn default() -> Self {
        gaussian_window()
    }
}

/// The 3x3 Gaussian window of radius 0.5 used for every NSIM evaluation.
pub fn gaussian_window() -> WindowKernel {
    WindowKernel::gaussian(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    #[serde(default)]
    pub constants: ConstantsRule,
    #[serde(default)]
    pub l_mode: LMode,
    /// Luminance exponent (full SSI only).
    #[serde(default = "one")]
    pub alpha: f64,
    /// Contrast exponent (full SSI only).
    #[serde(default = "one")]
    pub beta: f64,
    /// Structure exponent (full SSI only).
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(skip, default)]
    pub window: WindowKernel,
}

fn one() -> f64 {
    1.0
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            constants: ConstantsRule::Paper,
            l_mode: LMode::ReferenceMax,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            window: gaussian_window(),
        }
    }
}

impl SimilarityConfig {
    /// Classic SSIM settings: squared `C1`, unit exponents.
    pub fn standard() -> Self {
        Self {
            constants: ConstantsRule::Standard,
            ..Self::default()
        }
    }

    /// Resolve `L` for a (reference, degraded) pair according to `l_mode`.
    pub fn intensity_range(&self, r: &Matrix, d: &Matrix) -> Result<f64> {
        let l = match self.l_mode {
            LMode::ReferenceMax => r.max(),
            LMode::PairMax => r.max().max(d.max()),
            LMode::Fixed(v) => v,
        };
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::ZeroReference);
        }
        Ok(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalStats {
    pub mu_r: f64,
    pub mu_d: f64,
    pub sigma_r: f64,
    pub sigma_d: f64,
    pub sigma_rd: f64,
}

impl LocalStats {
    pub fn luminance(&self, k: &Constants) -> f64 {
        (2.0 * self.mu_r * self.mu_d + k.c1) / (self.mu_r * self.mu_r + self.mu_d * self.mu_d + k.c1)
    }

    pub fn contrast(&self, k: &Constants) -> f64 {
        (2.0 * self.sigma_r * self.sigma_d + k.c2)
            / (self.sigma_r * self.sigma_r + self.sigma_d * self.sigma_d + k.c2)
    }

    pub fn structure(&self, k: &Constants) -> f64 {
        (self.sigma_rd + k.c3) / (self.sigma_r * self.sigma_d + k.c3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityResult {
    pub nsim: f64,
    pub nsi_map: Matrix,
    pub n_windows: usize,
    pub l_used: f64,
}

fn check_pair(r: &Matrix, d: &Matrix) -> Result<()> {
    if r.shape() != d.shape() {
        return Err(Error::ShapeMismatch(format!(
            "reference {}x{} vs degraded {}x{}",
            r.rows(),
            r.cols(),
            d.rows(),
            d.cols()
        )));
    }
    if r.rows() < 3 || r.cols() < 3 {
        return Err(Error::TooSmall {
            rows: r.rows(),
            cols: r.cols(),
        });
    }
    Ok(())
}

/// Weighted statistics of the 3x3 window centred on `(f, t)`.
///
/// Deviations are taken about the centre sample first so that a constant
/// window gives `mu == value` and `sigma == 0` exactly.
pub fn local_stats(
    r: &Matrix,
    d: &Matrix,
    kernel: &WindowKernel,
    f: usize,
    t: usize,
) -> Result<LocalStats> {
    if r.shape() != d.shape() {
        return Err(Error::ShapeMismatch(format!(
            "reference {:?} vs degraded {:?}",
            r.shape(),
            d.shape()
        )));
    }
    if f == 0 || t == 0 || f + 1 >= r.rows() || t + 1 >= r.cols() {
        return Err(Error::invalid(format!(
            "window centred at ({f}, {t}) leaves a {}x{} matrix",
            r.rows(),
            r.cols()
        )));
    }
    Ok(window_stats(r, d, kernel, f, t))
}

#[inline]
fn window_stats(r: &Matrix, d: &Matrix, kernel: &WindowKernel, f: usize, t: usize) -> LocalStats {
    let r0 = r.get(f, t);
    let d0 = d.get(f, t);
    let mut mr = 0.0;
    let mut md = 0.0;
    for (i, wrow) in kernel.weights.iter().enumerate() {
        for (j, &w) in wrow.iter().enumerate() {
            mr += w * (r.get(f + i - 1, t + j - 1) - r0);
            md += w * (d.get(f + i - 1, t + j - 1) - d0);
        }
    }
    let mut vr = 0.0;
    let mut vd = 0.0;
    let mut crd = 0.0;
    for (i, wrow) in kernel.weights.iter().enumerate() {
        for (j, &w) in wrow.iter().enumerate() {
            let er = r.get(f + i - 1, t + j - 1) - r0 - mr;
            let ed = d.get(f + i - 1, t + j - 1) - d0 - md;
            vr += w * er * er;
            vd += w * ed * ed;
            crd += w * er * ed;
        }
    }
    LocalStats {
        mu_r: r0 + mr,
        mu_d: d0 + md,
        sigma_r: vr.max(0.0).sqrt(),
        sigma_d: vd.max(0.0).sqrt(),
        sigma_rd: crd,
    }
}

fn window_map(
    r: &Matrix,
    d: &Matrix,
    kernel: &WindowKernel,
    f: impl Fn(&LocalStats) -> f64,
) -> Matrix {
    let rows = r.rows() - 2;
    let cols = r.cols() - 2;
    Matrix::from_fn(rows, cols, |i, j| f(&window_stats(r, d, kernel, i + 1, j + 1)))
}

fn summarize(map: Matrix, l: f64) -> SimilarityResult {
    let n = map.rows() * map.cols();
    let nsim = compensated_sum(map.as_slice().iter().copied()) / n as f64;
    SimilarityResult {
        nsim,
        nsi_map: map,
        n_windows: n,
        l_used: l,
    }
}

/// Full luminance x contrast x structure index with exponents
/// `alpha`, `beta`, `gamma` from `config`.
pub fn ssi(r: &Matrix, d: &Matrix, config: &SimilarityConfig) -> Result<SimilarityResult> {
    check_pair(r, d)?;
    let l = config.intensity_range(r, d)?;
    let k = Constants::new(config.constants, l);
    let (a, b, g) = (config.alpha, config.beta, config.gamma);
    let map = window_map(r, d, &config.window, |s| {
        s.luminance(&k).powf(a) * s.contrast(&k).powf(b) * s.structure(&k).powf(g)
    });
    Ok(summarize(map, l))
}

/// Per-window NSI values, `(rows-2) x (cols-2)`. Negative values are kept.
pub fn nsi_map(r: &Matrix, d: &Matrix, config: &SimilarityConfig) -> Result<Matrix> {
    Ok(nsim(r, d, config)?.nsi_map)
}

/// Neurogram similarity: mean of the NSI map over all interior windows.
pub fn nsim(r: &Matrix, d: &Matrix, config: &SimilarityConfig) -> Result<SimilarityResult> {
    check_pair(r, d)?;
    let l = config.intensity_range(r, d)?;
    let k = Constants::new(config.constants, l);
    let map = window_map(r, d, &config.window, |s| s.luminance(&k) * s.structure(&k));
    Ok(summarize(map, l))
}

/// Equal-weight mean of the three per-fiber-type scores.
pub fn overall_nsim(ls: f64, ms: f64, hs: f64) -> f64 {
    (ls + ms + hs) / 3.0
}
