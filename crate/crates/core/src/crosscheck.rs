//! Direct-formula SSIM and NSI used to cross-check the windowed similarity
//! core. Deliberately naive: every window is gathered into a flat array and
//! the textbook statistics are evaluated on it.

use rand::Rng;

use crate::matrix::Matrix;
use crate::seeding::rng_for;
use crate::similarity::{self, SimilarityConfig};
use crate::Result;

fn gather(m: &Matrix, f: usize, t: usize) -> [f64; 9] {
    let mut out = [0.0; 9];
    for df in 0..3 {
        for dt in 0..3 {
            out[df * 3 + dt] = m.get(f + df - 1, t + dt - 1);
        }
    }
    out
}

fn stats(x: &[f64; 9], y: &[f64; 9], w: &[f64; 9]) -> (f64, f64, f64, f64, f64) {
    let mx: f64 = (0..9).map(|i| w[i] * x[i]).sum();
    let my: f64 = (0..9).map(|i| w[i] * y[i]).sum();
    let vx: f64 = (0..9).map(|i| w[i] * (x[i] - mx).powi(2)).sum();
    let vy: f64 = (0..9).map(|i| w[i] * (y[i] - my).powi(2)).sum();
    let cxy: f64 = (0..9).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    (mx, my, vx, vy, cxy)
}

fn flat_weights(cfg: &SimilarityConfig) -> [f64; 9] {
    let mut w = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            w[i * 3 + j] = cfg.window.weights[i][j];
        }
    }
    w
}

/// Mean classic SSIM (`C1 = (0.01 L)^2`, unit exponents) with `L = max(r)`.
pub fn direct_ssim(r: &Matrix, d: &Matrix) -> f64 {
    let cfg = SimilarityConfig::standard();
    let w = flat_weights(&cfg);
    let l = r.max();
    let c1 = (0.01 * l).powi(2);
    let c2 = (0.03 * l).powi(2);
    let c3 = c2 / 2.0;
    let mut total = 0.0;
    let mut n = 0usize;
    for f in 1..r.rows() - 1 {
        for t in 1..r.cols() - 1 {
            let (mx, my, vx, vy, cxy) = stats(&gather(r, f, t), &gather(d, f, t), &w);
            let (sx, sy) = (vx.sqrt(), vy.sqrt());
            let lum = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
            let con = (2.0 * sx * sy + c2) / (vx + vy + c2);
            let st = (cxy + c3) / (sx * sy + c3);
            total += lum * con * st;
            n += 1;
        }
    }
    total / n as f64
}

/// Mean NSI with the default (`C1 = 0.01 L`) constants and `L = max(r)`.
pub fn direct_nsim(r: &Matrix, d: &Matrix) -> f64 {
    let cfg = SimilarityConfig::default();
    let w = flat_weights(&cfg);
    let l = r.max();
    let c1 = 0.01 * l;
    let c3 = (0.03 * l).powi(2) / 2.0;
    let mut total = 0.0;
    let mut n = 0usize;
    for f in 1..r.rows() - 1 {
        for t in 1..r.cols() - 1 {
            let (mx, my, vx, vy, cxy) = stats(&gather(r, f, t), &gather(d, f, t), &w);
            let lum = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
            let st = (cxy + c3) / (vx.sqrt() * vy.sqrt() + c3);
            total += lum * st;
            n += 1;
        }
    }
    total / n as f64
}

#[derive(Debug, Clone, Copy)]
pub struct CrossCheckReport {
    pub pairs: usize,
    pub max_ssim_diff: f64,
    pub max_nsim_diff: f64,
}

/// Random matrix pairs, `3..=max_rows` x `3..=max_cols`, values in [0, 1).
pub fn random_pairs(n: usize, max_rows: usize, max_cols: usize, seed: u64) -> Vec<(Matrix, Matrix)> {
    let mut rng = rng_for(seed, &[0xC0FFEE]);
    (0..n)
        .map(|_| {
            let rows = rng.random_range(3..=max_rows.max(3));
            let cols = rng.random_range(3..=max_cols.max(3));
            let r = Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>());
            let d = Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>());
            (r, d)
        })
        .collect()
}

/// Compares the library's `ssi` and `nsim` with the direct formulas on
/// `n` random pairs.
pub fn run(n: usize, seed: u64) -> Result<CrossCheckReport> {
    let mut report = CrossCheckReport {
        pairs: n,
        max_ssim_diff: 0.0,
        max_nsim_diff: 0.0,
    };
    for (r, d) in random_pairs(n, 32, 64, seed) {
        let s = similarity::ssi(&r, &d, &SimilarityConfig::standard())?.nsim;
        report.max_ssim_diff = report.max_ssim_diff.max((s - direct_ssim(&r, &d)).abs());
        let v = similarity::nsim(&r, &d, &SimilarityConfig::default())?.nsim;
        report.max_nsim_diff = report.max_nsim_diff.max((v - direct_nsim(&r, &d)).abs());
    }
    Ok(report)
}
