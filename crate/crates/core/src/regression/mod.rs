//! Support vector regression of recognition scores on neurogram features.

mod svr;

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use svr::{fit, KernelSpec, Standardizer, SvrModel, MODEL_FORMAT};

use crate::error::{Error, Result};
use crate::seeding::rng_for;

/// Per-profile features and (optionally) the measured score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub profile_id: String,
    pub mr_nsim: f64,
    pub ft_nsim: f64,
    pub pta_db: f64,
    pub score: Option<f64>,
}

impl FeatureRow {
    pub fn validate(&self) -> Result<()> {
        if ![self.mr_nsim, self.ft_nsim, self.pta_db].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(format!("non-finite feature in row {}", self.profile_id)));
        }
        if let Some(s) = self.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::invalid(format!(
                    "score {s} for {} is outside [0, 1]",
                    self.profile_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    MrNsim,
    FtNsim,
    PtaDb,
}

impl Feature {
    pub fn name(self) -> &'static str {
        match self {
            Feature::MrNsim => "mr_nsim",
            Feature::FtNsim => "ft_nsim",
            Feature::PtaDb => "pta_db",
        }
    }

    fn of(self, row: &FeatureRow) -> f64 {
        match self {
            Feature::MrNsim => row.mr_nsim,
            Feature::FtNsim => row.ft_nsim,
            Feature::PtaDb => row.pta_db,
        }
    }
}

/// How a multi-feature model combines its inputs: as separate columns
/// (`set`) or as one column holding their product (`product`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    #[default]
    Set,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelector {
    pub features: Vec<Feature>,
    #[serde(default)]
    pub mode: FeatureMode,
}

impl FeatureSelector {
    pub fn new(features: &[Feature], mode: FeatureMode) -> Self {
        Self {
            features: features.to_vec(),
            mode,
        }
    }

    pub fn set(features: &[Feature]) -> Self {
        Self::new(features, FeatureMode::Set)
    }

    pub fn names(&self) -> Vec<String> {
        match self.mode {
            FeatureMode::Set => self.features.iter().map(|f| f.name().to_string()).collect(),
            FeatureMode::Product => vec![self
                .features
                .iter()
                .map(|f| f.name())
                .collect::<Vec<_>>()
                .join("*")],
        }
    }

    pub fn extract(&self, row: &FeatureRow) -> Vec<f64> {
        match self.mode {
            FeatureMode::Set => self.features.iter().map(|f| f.of(row)).collect(),
            FeatureMode::Product => vec![self.features.iter().map(|f| f.of(row)).product()],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::invalid("feature selector is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Rbf,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / n_features`
    Auto,
    /// `1 / (n_features * var(X))`
    Scale,
    Fixed(f64),
}

fn default_tol() -> f64 {
    1e-3
}

fn default_max_iter() -> usize {
    100_000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyperparams {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: Gamma,
    pub kernel: Kernel,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl SvrHyperparams {
    pub fn new(c: f64, epsilon: f64, gamma: Gamma, kernel: Kernel) -> Self {
        Self {
            c,
            epsilon,
            gamma,
            kernel,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("C must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if let Gamma::Fixed(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::invalid(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::invalid("solver tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

/// The four best models reported for the phoneme-recognition data.
pub fn table3_models() -> Vec<(&'static str, Vec<Feature>, SvrHyperparams)> {
    use Feature::*;
    vec![
        ("mr", vec![MrNsim], SvrHyperparams::new(1.0, 0.075, Gamma::Auto, Kernel::Rbf)),
        ("ft", vec![FtNsim], SvrHyperparams::new(0.25, 0.1, Gamma::Auto, Kernel::Rbf)),
        (
            "mr_ft",
            vec![MrNsim, FtNsim],
            SvrHyperparams::new(10.0, 0.05, Gamma::Auto, Kernel::Rbf),
        ),
        (
            "mr_ft_pta",
            vec![MrNsim, FtNsim, PtaDb],
            SvrHyperparams::new(2.5, 0.05, Gamma::Scale, Kernel::Linear),
        ),
    ]
}

/// A grid around one set of hyperparameters: C scaled by {1/4, 1/2, 1, 2, 4},
/// epsilon by {1/2, 1, 2}, same kernel and gamma.
pub fn neighborhood(hp: &SvrHyperparams) -> Vec<SvrHyperparams> {
    let mut out = Vec::new();
    for cf in [0.25, 0.5, 1.0, 2.0, 4.0] {
        for ef in [0.5, 1.0, 2.0] {
            out.push(SvrHyperparams {
                c: hp.c * cf,
                epsilon: hp.epsilon * ef,
                ..*hp
            });
        }
    }
    out
}

fn design(rows: &[FeatureRow], features: &FeatureSelector) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    features.validate()?;
    let mut x = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for r in rows {
        r.validate()?;
        let s = r
            .score
            .ok_or_else(|| Error::invalid(format!("row {} has no score", r.profile_id)))?;
        x.push(features.extract(r));
        y.push(s);
    }
    Ok((x, y))
}

pub fn train_svr(
    rows: &[FeatureRow],
    features: &FeatureSelector,
    hp: &SvrHyperparams,
) -> Result<SvrModel> {
    let (x, y) = design(rows, features)?;
    fit(&x, &y, &features.names(), hp)
}

/// Mean squared error and coefficient of determination.
pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<(f64, f64)> {
    if y_true.len() != y_pred.len() || y_true.len() < 2 {
        return Err(Error::invalid(format!(
            "metrics need equal lengths >= 2 (got {} and {})",
            y_true.len(),
            y_pred.len()
        )));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::invalid("r^2 is undefined for constant truth"));
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((ss_res / n, 1.0 - ss_res / ss_tot))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub size: usize,
    pub mse: f64,
    /// Absent when the held-out scores are constant or the fold has one row.
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldMetrics>,
    pub pooled_mse: f64,
    pub pooled_r2: f64,
    /// Fold index per input row.
    pub fold_of: Vec<usize>,
    /// Held-out prediction per input row, clamped to [0, 1].
    pub predictions: Vec<f64>,
}

/// Seeded assignment of rows to `k` contiguous folds of the shuffled
/// `order`.
fn assign_folds(order: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let mut shuffled = order.to_vec();
    shuffled.shuffle(&mut rng_for(seed, &[0xF01D]));
    let n = order.len();
    let mut fold_of = vec![0; n];
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        for &row in &shuffled[start..start + size] {
            fold_of[row] = f;
        }
        start += size;
    }
    fold_of
}

pub fn kfold_cv(
    rows: &[FeatureRow],
    features: &FeatureSelector,
    hp: &SvrHyperparams,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    if k < 2 || k > rows.len() {
        return Err(Error::invalid(format!(
            "k = {k} folds needs 2 <= k <= rows ({})",
            rows.len()
        )));
    }
    let (x, y) = design(rows, features)?;
    let names = features.names();
    // all work happens in canonical (id-sorted) order so that permuting the
    // input changes nothing, not even summation order
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].profile_id.cmp(&rows[b].profile_id));
    let canon: Vec<usize> = (0..rows.len()).collect();
    let canon_fold = assign_folds(&canon, k, seed);
    let cx: Vec<&Vec<f64>> = order.iter().map(|&i| &x[i]).collect();
    let cy: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let mut canon_pred = vec![f64::NAN; rows.len()];
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let (train, test): (Vec<usize>, Vec<usize>) =
            (0..rows.len()).partition(|&i| canon_fold[i] != f);
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| cx[i].clone()).collect();
        let ty: Vec<f64> = train.iter().map(|&i| cy[i]).collect();
        let model = fit(&tx, &ty, &names, hp)?;
        let mut truth = Vec::with_capacity(test.len());
        let mut pred = Vec::with_capacity(test.len());
        for &i in &test {
            let p = model.predict(cx[i])?.clamp(0.0, 1.0);
            canon_pred[i] = p;
            truth.push(cy[i]);
            pred.push(p);
        }
        let mse = truth.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            / truth.len() as f64;
        folds.push(FoldMetrics {
            size: test.len(),
            mse,
            r2: metrics(&truth, &pred).ok().map(|m| m.1),
        });
    }
    let (pooled_mse, pooled_r2) = metrics(&cy, &canon_pred)?;
    let mut fold_of = vec![0; rows.len()];
    let mut predictions = vec![0.0; rows.len()];
    for (c, &i) in order.iter().enumerate() {
        fold_of[i] = canon_fold[c];
        predictions[i] = canon_pred[c];
    }
    Ok(CvReport {
        k,
        seed,
        folds,
        pooled_mse,
        pooled_r2,
        fold_of,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_index: usize,
    pub best: SvrHyperparams,
    pub report: CvReport,
    /// Pooled MSE of every grid entry, in grid order.
    pub scores: Vec<f64>,
}

pub fn grid_search(
    rows: &[FeatureRow],
    features: &FeatureSelector,
    grid: &[SvrHyperparams],
    k: usize,
    seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    let reports: Vec<CvReport> = grid
        .par_iter()
        .map(|hp| kfold_cv(rows, features, hp, k, seed))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for i in 1..grid.len() {
        let (a, b) = (&reports[i], &reports[best]);
        let better = a.pooled_mse < b.pooled_mse
            || (a.pooled_mse == b.pooled_mse
                && (grid[i].c < grid[best].c
                    || (grid[i].c == grid[best].c && grid[i].epsilon > grid[best].epsilon)));
        if better {
            best = i;
        }
    }
    Ok(GridResult {
        best_index: best,
        best: grid[best],
        scores: reports.iter().map(|r| r.pooled_mse).collect(),
        report: reports.into_iter().nth(best).expect("best index in range"),
    })
}

pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>> {
    let path = path.as_ref();
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let row: FeatureRow = rec.map_err(|e| malformed(e.to_string()))?;
        row.validate()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_feature_csv(rows: &[FeatureRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| Error::Internal(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}
