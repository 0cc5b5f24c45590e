//! Repeated K-fold cross-validated grid search over the subpopulation size.
//!
//! All model fits depend only on the data, the fold layout and the grid, not
//! on the loss, so predictions are computed once ([`CrossValidatedPredictions`])
//! and any number of objectives (mixture losses for several alphas, the Brier
//! score, full measure sweeps) are evaluated on them afterwards.

use std::io::Write;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ceil_count, complement, kfold_partition, warn_if_few_evaluations, Dataset};
use crate::error::{PpmError, Result};
use crate::glm::FitConfig;
use crate::metrics::{
    brier_score, full_report, mixture_loss, LossConfig, Measure, MetricsConfig, PredictionSet,
};
use crate::personalized::{predict_index_patient, prepare_split, PpmSettings};
use crate::seed::{derive_seed, streams};
use crate::similarity::WeightScheme;

/// Grid of proportions used when none is configured.
pub const DEFAULT_M_GRID: [f64; 13] = [
    0.02, 0.05, 0.078, 0.1, 0.156, 0.2, 0.3, 0.4, 0.5, 0.642, 0.75, 0.871, 1.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    /// Candidate subpopulation sizes as proportions of the training fold.
    pub m_grid: Vec<f64>,
    pub alpha: f64,
    #[serde(rename = "K")]
    pub folds: usize,
    #[serde(rename = "v")]
    pub repeats: usize,
    pub weight_scheme: WeightScheme,
    pub seed: u64,
    pub fit: FitConfig,
    pub min_subpop: usize,
    pub min_events_per_class: usize,
    pub standardize: bool,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            m_grid: DEFAULT_M_GRID.to_vec(),
            alpha: 0.5,
            folds: 10,
            repeats: 20,
            weight_scheme: WeightScheme::Uniform,
            seed: 0,
            fit: FitConfig::default(),
            min_subpop: 20,
            min_events_per_class: 5,
            standardize: true,
        }
    }
}

impl TuningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_grid.is_empty() {
            return Err(PpmError::Config("tuning.m_grid is empty".into()));
        }
        if self.m_grid.iter().any(|&m| !(m > 0.0 && m <= 1.0)) {
            return Err(PpmError::Config("tuning.m_grid values must lie in (0, 1]".into()));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PpmError::Config("tuning.m_grid must be strictly increasing".into()));
        }
        LossConfig::new(self.alpha)?;
        if self.folds < 2 {
            return Err(PpmError::Config("tuning.K must be at least 2".into()));
        }
        if self.repeats < 1 {
            return Err(PpmError::Config("tuning.v must be at least 1".into()));
        }
        self.fit.validate()
    }

    pub fn settings(&self) -> PpmSettings {
        PpmSettings {
            weight_scheme: self.weight_scheme,
            fit: self.fit,
            min_events_per_class: self.min_events_per_class,
        }
    }

    /// Smallest subpopulation worth fitting: `max(min_subpop, p + 2)`.
    pub fn viability_floor(&self, n_features: usize) -> usize {
        self.min_subpop.max(n_features + 2)
    }

    fn repetition_seed(&self, repetition: usize) -> u64 {
        derive_seed(derive_seed(self.seed, streams::TUNING), repetition as u64)
    }
}

/// What the grid search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Objective {
    Mixture { alpha: f64 },
    Brier,
}

impl Objective {
    pub fn evaluate(&self, ps: &PredictionSet) -> f64 {
        match *self {
            Objective::Mixture { alpha } => mixture_loss(ps, &LossConfig { alpha }),
            Objective::Brier => brier_score(ps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub proportion: f64,
    /// Size on the smallest training fold.
    pub m: usize,
    pub feasible: bool,
}

/// Predictions of one test fold for every feasible grid point.
#[derive(Debug, Clone)]
pub struct FoldPredictions {
    pub repetition: usize,
    pub test_indices: Vec<usize>,
    pub outcomes: Vec<u8>,
    /// Per grid point: the size used on this fold (`None` when infeasible).
    pub sizes: Vec<Option<usize>>,
    /// `[grid][test patient]`; empty for infeasible grid points.
    pub predictions: Vec<Vec<f64>>,
    pub fallbacks: Vec<usize>,
    pub nonconverged: Vec<usize>,
}

impl FoldPredictions {
    pub fn prediction_set(&self, g: usize) -> Option<PredictionSet> {
        if self.predictions[g].is_empty() {
            return None;
        }
        PredictionSet::new(self.outcomes.clone(), self.predictions[g].clone()).ok()
    }
}

fn run_fold(
    trte: &Dataset,
    repetition: usize,
    test_indices: &[usize],
    sizes: &[Option<usize>],
    cfg: &TuningConfig,
) -> Result<FoldPredictions> {
    let train_indices = complement(trte.n_rows(), test_indices);
    let (train, test) = prepare_split(
        &trte.select_rows(&train_indices),
        &trte.select_rows(test_indices),
        cfg.standardize,
    )?;
    let feasible: Vec<usize> = sizes.iter().flatten().copied().collect();
    let settings = cfg.settings();
    let per_patient: Vec<_> = (0..test.n_rows())
        .into_par_iter()
        .map(|i| predict_index_patient(&train, test.row(i), &feasible, &settings))
        .collect::<Result<_>>()?;

    let mut predictions = vec![Vec::new(); sizes.len()];
    let mut fallbacks = vec![0; sizes.len()];
    let mut nonconverged = vec![0; sizes.len()];
    let mut slot = 0;
    for (g, size) in sizes.iter().enumerate() {
        if size.is_none() {
            continue;
        }
        predictions[g] = per_patient.iter().map(|p| p[slot].probability).collect();
        fallbacks[g] = per_patient.iter().filter(|p| p[slot].fallback).count();
        nonconverged[g] = per_patient.iter().filter(|p| !p[slot].converged).count();
        slot += 1;
    }
    Ok(FoldPredictions {
        repetition,
        test_indices: test_indices.to_vec(),
        outcomes: test.outcomes().to_vec(),
        sizes: sizes.to_vec(),
        predictions,
        fallbacks,
        nonconverged,
    })
}

/// Out-of-fold predictions for every repetition, fold and grid point.
#[derive(Debug, Clone)]
pub struct CrossValidatedPredictions {
    pub n_rows: usize,
    /// Smallest training-fold size; the denominator of `p_optimal`.
    pub n_train: usize,
    pub floor: usize,
    pub grid: Vec<GridPoint>,
    pub repeats: usize,
    /// Folds in (repetition, fold) order.
    pub folds: Vec<FoldPredictions>,
}

pub fn cross_validated_predictions(trte: &Dataset, cfg: &TuningConfig) -> Result<CrossValidatedPredictions> {
    cfg.validate()?;
    warn_if_few_evaluations(cfg.folds, cfg.repeats);
    let n = trte.n_rows();
    if cfg.folds > n {
        return Err(PpmError::TooSmall(format!("{n} rows cannot form {} folds", cfg.folds)));
    }
    let n_train = n - n.div_ceil(cfg.folds);
    let floor = cfg.viability_floor(trte.n_features());
    let grid: Vec<GridPoint> = cfg
        .m_grid
        .iter()
        .map(|&proportion| {
            let m = ceil_count(proportion * n_train as f64).clamp(1, n_train.max(1));
            GridPoint {
                proportion,
                m,
                feasible: m >= floor,
            }
        })
        .collect();
    if grid.iter().all(|g| !g.feasible) {
        return Err(PpmError::AllInfeasible {
            floor,
            largest: grid.last().map_or(0, |g| g.m),
        });
    }

    let mut folds = Vec::with_capacity(cfg.repeats * cfg.folds);
    for repetition in 0..cfg.repeats {
        let plan = kfold_partition(n, cfg.folds, cfg.repetition_seed(repetition))?;
        for test_indices in &plan {
            let fold_train = n - test_indices.len();
            let sizes: Vec<Option<usize>> = grid
                .iter()
                .map(|g| {
                    g.feasible
                        .then(|| ceil_count(g.proportion * fold_train as f64).clamp(g.m, fold_train))
                })
                .collect();
            folds.push(run_fold(trte, repetition, test_indices, &sizes, cfg)?);
        }
        info!("tuning repetition {}/{} done", repetition + 1, cfg.repeats);
    }
    Ok(CrossValidatedPredictions {
        n_rows: n,
        n_train,
        floor,
        grid,
        repeats: cfg.repeats,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurveEntry {
    #[serde(rename = "M")]
    pub m: usize,
    pub proportion: f64,
    pub mean_loss: Option<f64>,
    pub se_loss: Option<f64>,
    pub n_evaluations: usize,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub objective: Objective,
    pub loss_curve: Vec<LossCurveEntry>,
    pub optimal_m: usize,
    pub p_optimal: f64,
    pub n_train: usize,
    /// Predictions served by the outcome-mean fallback, over all evaluations.
    pub skipped: usize,
    pub nonconverged: usize,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl CrossValidatedPredictions {
    /// Per-fold objective values for grid point `g`, in (repetition, fold) order.
    pub fn fold_losses(&self, g: usize, objective: &Objective) -> Vec<f64> {
        self.folds
            .iter()
            .filter_map(|f| f.prediction_set(g))
            .map(|ps| objective.evaluate(&ps))
            .collect()
    }

    pub fn tuning_result(&self, objective: Objective) -> Result<TuningResult> {
        let mut loss_curve = Vec::with_capacity(self.grid.len());
        let mut best: Option<(usize, f64)> = None;
        for (g, point) in self.grid.iter().enumerate() {
            let losses = self.fold_losses(g, &objective);
            let (mean, se) = if losses.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_and_se(&losses);
                (Some(m), Some(s))
            };
            if let (true, Some(m)) = (point.feasible, mean) {
                // Strict comparison keeps the smaller M on ties.
                if best.is_none_or(|(_, b)| m < b) {
                    best = Some((g, m));
                }
            }
            loss_curve.push(LossCurveEntry {
                m: point.m,
                proportion: point.proportion,
                mean_loss: mean,
                se_loss: se,
                n_evaluations: losses.len(),
                feasible: point.feasible,
            });
        }
        let (g, _) = best.ok_or(PpmError::AllInfeasible {
            floor: self.floor,
            largest: self.grid.last().map_or(0, |p| p.m),
        })?;
        let optimal_m = self.grid[g].m;
        Ok(TuningResult {
            objective,
            loss_curve,
            optimal_m,
            p_optimal: optimal_m as f64 / self.n_train as f64,
            n_train: self.n_train,
            skipped: self.folds.iter().map(|f| f.fallbacks.iter().sum::<usize>()).sum(),
            nonconverged: self.folds.iter().map(|f| f.nonconverged.iter().sum::<usize>()).sum(),
        })
    }

    /// Every measure per grid point: predictions of each repetition are pooled
    /// over its folds, then measures are averaged over repetitions.
    pub fn measure_sweep(&self, metrics: &MetricsConfig) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for (g, point) in self.grid.iter().enumerate() {
            let reports: Vec<_> = if point.feasible {
                (0..self.repeats)
                    .filter_map(|r| {
                        let (mut y, mut p) = (Vec::new(), Vec::new());
                        for fold in self.folds.iter().filter(|f| f.repetition == r) {
                            y.extend_from_slice(&fold.outcomes);
                            p.extend_from_slice(&fold.predictions[g]);
                        }
                        PredictionSet::new(y, p).ok().map(|ps| full_report(&ps, metrics))
                    })
                    .collect()
            } else {
                Vec::new()
            };
            for measure in Measure::ALL {
                let values: Vec<f64> = reports.iter().filter_map(|r| r.get(measure)).collect();
                let (value, se) = if values.is_empty() {
                    (None, None)
                } else {
                    let (m, s) = mean_and_se(&values);
                    (Some(m), Some(s))
                };
                rows.push(SweepRow {
                    m: point.m,
                    proportion: point.proportion,
                    measure,
                    value,
                    se,
                    n_repetitions: values.len(),
                    feasible: point.feasible,
                });
            }
        }
        rows
    }
}

/// One (M, measure) cell of a subpopulation-size sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub proportion: f64,
    pub measure: Measure,
    pub value: Option<f64>,
    pub se: Option<f64>,
    pub n_repetitions: usize,
    pub feasible: bool,
}

pub fn tune_subpopulation_size(trte: &Dataset, cfg: &TuningConfig) -> Result<TuningResult> {
    cross_validated_predictions(trte, cfg)?.tuning_result(Objective::Mixture { alpha: cfg.alpha })
}

/// One tuning result per alpha, sharing a single set of model fits.
pub fn tune_alpha_sweep(trte: &Dataset, cfg: &TuningConfig, alphas: &[f64]) -> Result<Vec<TuningResult>> {
    for &a in alphas {
        LossConfig::new(a)?;
    }
    let cv = cross_validated_predictions(trte, cfg)?;
    alphas
        .iter()
        .map(|&alpha| cv.tuning_result(Objective::Mixture { alpha }))
        .collect()
}

/// Result of scoring a single fixed M over one fold layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    pub m: usize,
    pub feasible: bool,
    pub fold_losses: Vec<f64>,
    pub mean_loss: Option<f64>,
    pub skipped: usize,
}

/// Mixture loss of subpopulation size `m`, averaged over the given folds.
pub fn evaluate_candidate(
    trte: &Dataset,
    folds: &[Vec<usize>],
    m: usize,
    cfg: &TuningConfig,
) -> Result<CandidateEvaluation> {
    cfg.validate()?;
    let n = trte.n_rows();
    let smallest_train = folds.iter().map(|f| n - f.len()).min().unwrap_or(0);
    if m > smallest_train {
        return Err(PpmError::SubpopulationSize {
            m,
            max: smallest_train,
        });
    }
    if m < cfg.viability_floor(trte.n_features()) {
        warn!("M = {m} is below the viability floor; candidate marked infeasible");
        return Ok(CandidateEvaluation {
            m,
            feasible: false,
            fold_losses: Vec::new(),
            mean_loss: None,
            skipped: 0,
        });
    }
    let objective = Objective::Mixture { alpha: cfg.alpha };
    let mut fold_losses = Vec::with_capacity(folds.len());
    let mut skipped = 0;
    for test in folds {
        let run = run_fold(trte, 0, test, &[Some(m)], cfg)?;
        skipped += run.fallbacks[0];
        if let Some(ps) = run.prediction_set(0) {
            fold_losses.push(objective.evaluate(&ps));
        }
    }
    let mean_loss = (!fold_losses.is_empty()).then(|| mean_and_se(&fold_losses).0);
    Ok(CandidateEvaluation {
        m,
        feasible: true,
        fold_losses,
        mean_loss,
        skipped,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `M,proportion,mean_loss,se_loss,feasible`
pub fn write_loss_curve_csv(result: &TuningResult, path: &Path) -> Result<()> {
    let mut out = String::from("M,proportion,mean_loss,se_loss,feasible\n");
    for e in &result.loss_curve {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.m,
            e.proportion,
            opt(e.mean_loss),
            opt(e.se_loss),
            e.feasible
        ));
    }
    write_text(path, &out)
}

/// `M,proportion,measure,value,se,n_repetitions,feasible`
pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut out = String::from("M,proportion,measure,value,se,n_repetitions,feasible\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.m,
            r.proportion,
            r.measure,
            opt(r.value),
            opt(r.se),
            r.n_repetitions,
            r.feasible
        ));
    }
    write_text(path, &out)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| PpmError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| PpmError::io(path, e))
}
