//! Tabular patient data, CSV ingestion, standardization and resampling plans.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use log::warn;
use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{PpmError, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Binary,
    Continuous,
}

impl FeatureKind {
    /// A column is binary iff every value is exactly 0 or 1.
    pub fn infer(values: impl IntoIterator<Item = f64>) -> Self {
        if values.into_iter().all(|v| v == 0.0 || v == 1.0) {
            FeatureKind::Binary
        } else {
            FeatureKind::Continuous
        }
    }
}

/// N patients by p features with a binary outcome per patient.
///
/// Immutable after construction; row access hands out contiguous slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    outcomes: Vec<u8>,
    feature_names: Vec<String>,
    feature_kinds: Vec<FeatureKind>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        outcomes: Vec<u8>,
        feature_names: Vec<String>,
        feature_kinds: Vec<FeatureKind>,
    ) -> Result<Self> {
        let (n, p) = features.dim();
        if n == 0 {
            return Err(PpmError::EmptyDataset);
        }
        if p == 0 {
            return Err(PpmError::InvalidDataset("no feature columns".into()));
        }
        if outcomes.len() != n {
            return Err(PpmError::DimensionMismatch {
                expected: n,
                found: outcomes.len(),
            });
        }
        if feature_names.len() != p || feature_kinds.len() != p {
            return Err(PpmError::DimensionMismatch {
                expected: p,
                found: feature_names.len().min(feature_kinds.len()),
            });
        }
        if let Some(row) = outcomes.iter().position(|&y| y > 1) {
            return Err(PpmError::OutcomeNotBinary {
                row: row + 1,
                value: outcomes[row].to_string(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(PpmError::InvalidDataset("non-finite feature value".into()));
        }
        for (j, kind) in feature_kinds.iter().enumerate() {
            if *kind == FeatureKind::Binary
                && features.column(j).iter().any(|&v| v != 0.0 && v != 1.0)
            {
                return Err(PpmError::InvalidDataset(format!(
                    "binary column `{}` holds a value outside {{0,1}}",
                    feature_names[j]
                )));
            }
        }
        // Row slices below rely on standard (row-major) layout.
        let features = features.as_standard_layout().into_owned();
        Ok(Dataset {
            features,
            outcomes,
            feature_names,
            feature_kinds,
        })
    }

    /// Builds a dataset with generated names `x1..xp` and inferred kinds.
    pub fn from_matrix(features: Array2<f64>, outcomes: Vec<u8>) -> Result<Self> {
        let p = features.ncols();
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        let kinds = features
            .columns()
            .into_iter()
            .map(|c| FeatureKind::infer(c.iter().copied()))
            .collect();
        Dataset::new(features, outcomes, names, kinds)
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features
            .row(i)
            .to_slice()
            .expect("dataset rows are contiguous")
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn outcome(&self, i: usize) -> u8 {
        self.outcomes[i]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_kinds(&self) -> &[FeatureKind] {
        &self.feature_kinds
    }

    pub fn n_events(&self) -> usize {
        self.outcomes.iter().filter(|&&y| y == 1).count()
    }

    /// New dataset made of the given rows, in the given order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            outcomes: rows.iter().map(|&i| self.outcomes[i]).collect(),
            feature_names: self.feature_names.clone(),
            feature_kinds: self.feature_kinds.clone(),
        }
    }

    pub fn write_csv(&self, path: &Path, outcome_column: &str) -> Result<()> {
        let file = File::create(path).map_err(|e| PpmError::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| PpmError::io(path, e);
        let header: Vec<&str> = self
            .feature_names
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(outcome_column))
            .collect();
        writeln!(out, "{}", header.join(",")).map_err(io)?;
        for i in 0..self.n_rows() {
            let mut line = String::new();
            for v in self.row(i) {
                line.push_str(&v.to_string());
                line.push(',');
            }
            line.push_str(&self.outcomes[i].to_string());
            writeln!(out, "{line}").map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// Reads a header-first CSV; every column except `outcome_column` becomes a feature.
pub fn load_csv(path: &Path, outcome_column: &str) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| PpmError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let outcome_idx = headers
        .iter()
        .position(|h| h == outcome_column)
        .ok_or_else(|| PpmError::MissingOutcome(outcome_column.to_owned()))?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&j| j != outcome_idx).collect();

    let mut values = Vec::new();
    let mut outcomes = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let raw_y = record.get(outcome_idx).unwrap_or("");
        let y = match raw_y.parse::<f64>() {
            Ok(0.0) => 0,
            Ok(1.0) => 1,
            _ => {
                return Err(PpmError::OutcomeNotBinary {
                    row,
                    value: raw_y.to_owned(),
                })
            }
        };
        outcomes.push(y);
        for &j in &feature_cols {
            let cell = record.get(j).unwrap_or("");
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| PpmError::NonNumeric {
                    row,
                    column: headers[j].clone(),
                    value: cell.to_owned(),
                })?;
            values.push(v);
        }
    }
    if outcomes.is_empty() {
        return Err(PpmError::EmptyDataset);
    }
    let features = Array2::from_shape_vec((outcomes.len(), feature_cols.len()), values)
        .map_err(|e| PpmError::InvalidDataset(e.to_string()))?;
    let names = feature_cols.iter().map(|&j| headers[j].clone()).collect();
    let kinds = features
        .columns()
        .into_iter()
        .map(|c| FeatureKind::infer(c.iter().copied()))
        .collect();
    Dataset::new(features, outcomes, names, kinds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl StandardizationParams {
    pub fn identity(p: usize) -> Self {
        StandardizationParams {
            means: vec![0.0; p],
            scales: vec![1.0; p],
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

/// Column means and sample standard deviations; zero deviations become 1.
pub fn fit_standardizer(train: &Dataset) -> StandardizationParams {
    let n = train.n_rows();
    let x = train.features();
    let means: Vec<f64> = x
        .columns()
        .into_iter()
        .map(|c| c.sum() / n as f64)
        .collect();
    let scales = x
        .columns()
        .into_iter()
        .zip(&means)
        .map(|(c, &m)| {
            if n < 2 {
                return 1.0;
            }
            let ss: f64 = c.iter().map(|v| (v - m) * (v - m)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    StandardizationParams { means, scales }
}

pub fn apply_standardizer(ds: &Dataset, params: &StandardizationParams) -> Result<Dataset> {
    let p = ds.n_features();
    if params.means.len() != p || params.scales.len() != p {
        return Err(PpmError::DimensionMismatch {
            expected: p,
            found: params.means.len(),
        });
    }
    let mut features = ds.features.clone();
    for (j, mut col) in features.columns_mut().into_iter().enumerate() {
        let (m, s) = (params.means[j], params.scales[j]);
        col.mapv_inplace(|v| (v - m) / s);
    }
    Ok(Dataset {
        features,
        outcomes: ds.outcomes.clone(),
        feature_names: ds.feature_names.clone(),
        // Standardized binaries are no longer {0,1}.
        feature_kinds: vec![FeatureKind::Continuous; p],
    })
}

/// Holdout fraction plus repeated K-fold settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub holdout_fraction: f64,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            holdout_fraction: 0.2,
            folds: 10,
            repeats: 20,
            seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(PpmError::Config("holdout_fraction out of range".into()));
        }
        if self.folds < 2 {
            return Err(PpmError::Config("K must be at least 2".into()));
        }
        if self.repeats < 1 {
            return Err(PpmError::Config("v must be at least 1".into()));
        }
        warn_if_few_evaluations(self.folds, self.repeats);
        Ok(())
    }
}

pub(crate) fn warn_if_few_evaluations(folds: usize, repeats: usize) {
    if folds * repeats < 200 {
        warn!(
            "v*K = {} is below the recommended 200 cross-validation evaluations",
            folds * repeats
        );
    }
}

/// Round-half-up of `x`.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Ceiling that ignores floating-point dust just above an integer.
pub(crate) fn ceil_count(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Row indices (ascending) of the train/test part and the holdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldoutIndices {
    pub trte: Vec<usize>,
    pub holdout: Vec<usize>,
}

pub fn holdout_indices(n: usize, fraction: f64, seed: u64) -> Result<HoldoutIndices> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(PpmError::Config("holdout_fraction out of range".into()));
    }
    let size = round_half_up(fraction * n as f64);
    if size < 1 || size >= n {
        return Err(PpmError::TooSmall(format!(
            "holdout of {size} rows out of {n} leaves an empty part"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let mut holdout = perm[..size].to_vec();
    let mut trte = perm[size..].to_vec();
    holdout.sort_unstable();
    trte.sort_unstable();
    Ok(HoldoutIndices { trte, holdout })
}

/// Splits into (train/test, holdout) datasets.
pub fn split_holdout(ds: &Dataset, plan: &SplitPlan) -> Result<(Dataset, Dataset)> {
    let idx = holdout_indices(ds.n_rows(), plan.holdout_fraction, plan.seed)?;
    Ok((ds.select_rows(&idx.trte), ds.select_rows(&idx.holdout)))
}

/// Shuffled balanced partition of `0..n` into `k` folds; each fold is sorted.
///
/// The first `n % k` folds hold one extra index.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(PpmError::TooSmall(format!("cannot split {n} rows into {k} folds")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Complement of `fold` within `0..n`, ascending.
pub fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in fold {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}
