//! Epsilon-insensitive support vector regression trained with sequential
//! minimal optimisation on the dual.
//!
//! The dual has `2l` box-constrained variables (`alpha` for the upper tube
//! edge, `alpha*` for the lower) and one equality constraint. Each
//! iteration picks the maximally KKT-violating pair and solves the
//! two-variable sub-problem in closed form.

use serde::{Deserialize, Serialize};

use super::{Gamma, Kernel, SvrHyperparams};
use crate::error::{Error, Result};

/// Column-wise standardisation fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits per-column mean and population standard deviation. `names`
    /// labels columns in the zero-variance error.
    pub fn fit(x: &[Vec<f64>], names: &[String]) -> Result<Self> {
        let n = x.len() as f64;
        let d = x[0].len();
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        for j in 0..d {
            mean[j] = x.iter().map(|r| r[j]).sum::<f64>() / n;
            std[j] = (x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
            if !(std[j] > 1e-12 * mean[j].abs().max(1.0)) {
                let name = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
                return Err(Error::DegenerateFeature(name));
            }
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kernel: Kernel,
    /// Resolved RBF width (unused for the linear kernel).
    pub gamma: f64,
}

impl KernelSpec {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kernel {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
                (-self.gamma * d2).exp()
            }
        }
    }
}

/// A trained model. Support vectors are stored in standardised space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub format: String,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub kernel: KernelSpec,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha - alpha*` for each support vector; `|coef| <= C`.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Maximal KKT violation when the solver stopped.
    pub kkt_gap: f64,
    pub iterations: usize,
}

pub const MODEL_FORMAT: &str = "svr-model/1";

impl SvrModel {
    pub fn n_features(&self) -> usize {
        self.standardizer.mean.len()
    }

    /// Decision function on an already standardised vector.
    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * self.kernel.eval(sv, z))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} features, got {}",
                self.n_features(),
                x.len()
            )));
        }
        Ok(self.decision_standardized(&self.standardizer.transform(x)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: SvrModel = serde_json::from_str(s).map_err(|e| Error::invalid(e.to_string()))?;
        if m.format != MODEL_FORMAT {
            return Err(Error::UnknownFormat(m.format));
        }
        Ok(m)
    }
}

/// Fits an SVR on raw features `x` and targets `y`.
pub fn fit(
    x: &[Vec<f64>],
    y: &[f64],
    names: &[String],
    hp: &SvrHyperparams,
) -> Result<SvrModel> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::invalid(format!(
            "need at least two rows with one target each ({} rows, {} targets)",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("feature rows must be non-empty and equal length"));
    }
    hp.validate()?;
    let standardizer = Standardizer::fit(x, names)?;
    let z: Vec<Vec<f64>> = x.iter().map(|r| standardizer.transform(r)).collect();
    let gamma = match hp.gamma {
        Gamma::Auto => 1.0 / d as f64,
        Gamma::Scale => {
            let all: Vec<f64> = z.iter().flatten().copied().collect();
            let m = all.iter().sum::<f64>() / all.len() as f64;
            let var = all.iter().map(|v| (v - m).powi(2)).sum::<f64>() / all.len() as f64;
            1.0 / (d as f64 * var)
        }
        Gamma::Fixed(g) => g,
    };
    let kernel = KernelSpec {
        kernel: hp.kernel,
        gamma,
    };
    let sol = solve(&z, y, &kernel, hp.c, hp.epsilon, hp.tol, hp.max_iter);
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for (i, &coef) in sol.coef.iter().enumerate() {
        if coef != 0.0 {
            support_vectors.push(z[i].clone());
            dual_coef.push(coef);
        }
    }
    Ok(SvrModel {
        format: MODEL_FORMAT.to_string(),
        feature_names: names.to_vec(),
        standardizer,
        kernel,
        support_vectors,
        dual_coef,
        bias: sol.bias,
        c: hp.c,
        epsilon: hp.epsilon,
        kkt_gap: sol.gap,
        iterations: sol.iterations,
    })
}

struct Solution {
    coef: Vec<f64>,
    bias: f64,
    gap: f64,
    iterations: usize,
}

const TAU: f64 = 1e-12;

fn solve(
    z: &[Vec<f64>],
    y: &[f64],
    kernel: &KernelSpec,
    c: f64,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Solution {
    let l = z.len();
    let k: Vec<Vec<f64>> = z
        .iter()
        .map(|a| z.iter().map(|b| kernel.eval(a, b)).collect())
        .collect();
    let n = 2 * l;
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let idx = |t: usize| if t < l { t } else { t - l };
    // Q_st = s_s s_t K
    let q = |s: usize, t: usize| sign(s) * sign(t) * k[idx(s)][idx(t)];

    let mut beta = vec![0.0; n];
    let mut grad: Vec<f64> = (0..n)
        .map(|t| if t < l { eps - y[t] } else { eps + y[t - l] })
        .collect();

    let at_upper = |b: f64| b >= c;
    let at_lower = |b: f64| b <= 0.0;

    let mut iterations = 0;
    let mut gap;
    loop {
        // maximal violating pair
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        for t in 0..n {
            let s = sign(t);
            let v = -s * grad[t];
            let in_up = if s > 0.0 { !at_upper(beta[t]) } else { !at_lower(beta[t]) };
            let in_low = if s > 0.0 { !at_lower(beta[t]) } else { !at_upper(beta[t]) };
            if in_up && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        gap = gmax - gmin;
        if i == usize::MAX || j == usize::MAX || gap < tol || iterations >= max_iter {
            if !gap.is_finite() {
                gap = 0.0;
            }
            break;
        }
        iterations += 1;

        let (si, sj) = (sign(i), sign(j));
        let qii = q(i, i);
        let qjj = q(j, j);
        let qij = q(i, j);
        let old_i = beta[i];
        let old_j = beta[j];
        if si != sj {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }
        let di = beta[i] - old_i;
        let dj = beta[j] - old_j;
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // bias from free variables, else the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..n {
        let s = sign(t);
        let yg = s * grad[t];
        if at_upper(beta[t]) {
            if s < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(beta[t]) {
            if s > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    Solution {
        coef: (0..l).map(|i| beta[i] - beta[i + l]).collect(),
        bias: -rho,
        gap,
        iterations,
    }
}
