//! External validation of a tuned subpopulation proportion on a hold-out
//! sample: bootstrap replicates, each split into an inner training and test
//! part, scored with every performance measure and summarized by BCa
//! intervals.

mod bca;

use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ceil_count, round_half_up, Dataset};
use crate::error::{PpmError, Result};
use crate::glm::FitConfig;
use crate::metrics::{full_report, Measure, MetricsConfig, PerformanceReport, PredictionSet};
use crate::personalized::{predict_index_patient, prepare_split, PpmSettings};
use crate::seed::{derive_seed, rng_from_seed, streams};
use crate::similarity::WeightScheme;
use crate::tuner::write_text;

pub use bca::{acceleration, bca_interval, quantile_type7, sample_sd, ConfidenceInterval, IntervalMethod};

/// Resampling attempts per replicate before it is declared failed.
pub const MAX_ATTEMPTS: usize = 10;

/// Largest tolerated share of failed replicates.
pub const MAX_FAILED_SHARE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    #[serde(rename = "B")]
    pub bootstrap_samples: usize,
    pub p_optimal: f64,
    /// Share of each bootstrap sample used for the inner training part.
    pub inner_split: f64,
    pub weight_scheme: WeightScheme,
    /// Confidence level of the intervals.
    pub alpha_level: f64,
    pub seed: u64,
    pub fit: FitConfig,
    pub min_events_per_class: usize,
    pub standardize: bool,
    pub metrics: MetricsConfig,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            bootstrap_samples: 1000,
            p_optimal: 1.0,
            inner_split: 0.8,
            weight_scheme: WeightScheme::Uniform,
            alpha_level: 0.95,
            seed: 0,
            fit: FitConfig::default(),
            min_events_per_class: 5,
            standardize: true,
            metrics: MetricsConfig::default(),
        }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_samples < 2 {
            return Err(PpmError::Config("validation.B must be at least 2".into()));
        }
        if !(self.p_optimal > 0.0 && self.p_optimal <= 1.0) {
            return Err(PpmError::Config("p_optimal must lie in (0, 1]".into()));
        }
        if !(self.inner_split > 0.0 && self.inner_split < 1.0) {
            return Err(PpmError::Config("validation.inner_split must lie in (0, 1)".into()));
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(PpmError::Config("validation.alpha_level must lie in (0, 1)".into()));
        }
        self.fit.validate()?;
        self.metrics.validate()
    }

    fn settings(&self) -> PpmSettings {
        PpmSettings {
            weight_scheme: self.weight_scheme,
            fit: self.fit,
            min_events_per_class: self.min_events_per_class,
        }
    }

    fn replicate_seed(&self, b: usize) -> u64 {
        derive_seed(derive_seed(self.seed, streams::VALIDATION), b as u64)
    }
}

/// Stratified (train, test) positions; `None` unless both parts see both classes.
fn stratified_split(outcomes: &[u8], train_share: f64, rng: &mut ChaCha8Rng) -> Option<(Vec<usize>, Vec<usize>)> {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i] == class).collect();
        if members.len() < 2 {
            return None;
        }
        members.shuffle(rng);
        let n_test = round_half_up(members.len() as f64 * (1.0 - train_share)).clamp(1, members.len() - 1);
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Some((train, test))
}

/// Predictions of the inner test part from models fitted on the inner training part.
fn score_split(sample: &Dataset, train_idx: &[usize], test_idx: &[usize], cfg: &ValidationConfig) -> Result<PredictionSet> {
    let (train, test) = prepare_split(
        &sample.select_rows(train_idx),
        &sample.select_rows(test_idx),
        cfg.standardize,
    )?;
    let m = ceil_count(train.n_rows() as f64 * cfg.p_optimal).clamp(1, train.n_rows());
    let settings = cfg.settings();
    let mut predictions = Vec::with_capacity(test.n_rows());
    for i in 0..test.n_rows() {
        let p = predict_index_patient(&train, test.row(i), &[m], &settings)?;
        predictions.push(p[0].probability);
    }
    PredictionSet::new(test.outcomes().to_vec(), predictions)
}

/// Pooled predictions of one bootstrap replicate.
pub fn bootstrap_predictions(holdout: &Dataset, cfg: &ValidationConfig, replicate_seed: u64) -> Result<PredictionSet> {
    let mut rng = rng_from_seed(replicate_seed);
    let n = holdout.n_rows();
    for _ in 0..MAX_ATTEMPTS {
        let draw: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let sample = holdout.select_rows(&draw);
        if let Some((train, test)) = stratified_split(sample.outcomes(), cfg.inner_split, &mut rng) {
            return score_split(&sample, &train, &test, cfg);
        }
    }
    Err(PpmError::TooSmall(format!(
        "no viable inner split after {MAX_ATTEMPTS} bootstrap draws"
    )))
}

pub fn run_bootstrap_replicate(holdout: &Dataset, cfg: &ValidationConfig, replicate_seed: u64) -> Result<PerformanceReport> {
    cfg.validate()?;
    let ps = bootstrap_predictions(holdout, cfg, replicate_seed)?;
    Ok(full_report(&ps, &cfg.metrics))
}

/// The un-resampled hold-out scored once with the same inner split rule.
pub fn reference_predictions(holdout: &Dataset, cfg: &ValidationConfig) -> Result<PredictionSet> {
    let mut rng = rng_from_seed(derive_seed(derive_seed(cfg.seed, streams::VALIDATION), streams::REFERENCE));
    for _ in 0..MAX_ATTEMPTS {
        if let Some((train, test)) = stratified_split(holdout.outcomes(), cfg.inner_split, &mut rng) {
            return score_split(holdout, &train, &test, cfg);
        }
    }
    Err(PpmError::TooSmall("hold-out has fewer than two patients of a class".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub measure: Measure,
    /// Mean of the defined replicate values.
    pub point: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: IntervalMethod,
    /// Value on the un-resampled hold-out run.
    pub reference: Option<f64>,
    pub n_defined: usize,
    pub n_failed_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub p_optimal: f64,
    pub bootstrap_samples: usize,
    pub alpha_level: f64,
    pub n_failed_replicates: usize,
    pub measures: Vec<Option<MeasureSummary>>,
    #[serde(skip)]
    pub replicates: Vec<Option<PerformanceReport>>,
}

impl ValidationReport {
    pub fn summary(&self, measure: Measure) -> Option<&MeasureSummary> {
        self.measures.iter().flatten().find(|s| s.measure == measure)
    }

    /// `replicate,measure,value`; empty values mark failed or undefined cells.
    pub fn write_replicates_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("replicate,measure,value\n");
        for (b, rep) in self.replicates.iter().enumerate() {
            for m in Measure::ALL {
                let v = rep.and_then(|r| r.get(m)).map(|v| v.to_string()).unwrap_or_default();
                out.push_str(&format!("{b},{m},{v}\n"));
            }
        }
        write_text(path, &out)
    }
}

pub fn external_validate(holdout: &Dataset, cfg: &ValidationConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let reference = match reference_predictions(holdout, cfg) {
        Ok(ps) => Some(ps),
        Err(e) => {
            warn!("reference hold-out run failed ({e}); intervals use zero acceleration");
            None
        }
    };

    let replicates: Vec<Option<PerformanceReport>> = (0..cfg.bootstrap_samples)
        .into_par_iter()
        .map(|b| match run_bootstrap_replicate(holdout, cfg, cfg.replicate_seed(b)) {
            Ok(r) => Ok(Some(r)),
            Err(PpmError::TooSmall(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let failed = replicates.iter().filter(|r| r.is_none()).count();
    if failed as f64 > MAX_FAILED_SHARE * cfg.bootstrap_samples as f64 {
        return Err(PpmError::ValidationUnstable {
            failed,
            total: cfg.bootstrap_samples,
        });
    }

    let reference_report = reference.as_ref().map(|ps| full_report(ps, &cfg.metrics));
    let jackknife: Vec<PerformanceReport> = reference
        .as_ref()
        .map(|ps| {
            (0..ps.len())
                .into_par_iter()
                .filter_map(|i| ps.without(i))
                .map(|loo| full_report(&loo, &cfg.metrics))
                .collect()
        })
        .unwrap_or_default();

    let measures = Measure::ALL
        .iter()
        .map(|&measure| {
            let values: Vec<f64> = replicates.iter().flatten().filter_map(|r| r.get(measure)).collect();
            if values.is_empty() {
                return Ok(None);
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let reference_value = reference_report.and_then(|r| r.get(measure));
            let jack: Vec<f64> = jackknife.iter().filter_map(|r| r.get(measure)).collect();
            let ci = bca_interval(&values, &jack, reference_value.unwrap_or(mean), cfg.alpha_level)?;
            Ok(Some(MeasureSummary {
                measure,
                point: mean,
                se: ci.se,
                lower: ci.lower,
                upper: ci.upper,
                method: ci.method,
                reference: reference_value,
                n_defined: values.len(),
                n_failed_replicates: failed,
            }))
        })
        .collect::<Result<_>>()?;

    Ok(ValidationReport {
        p_optimal: cfg.p_optimal,
        bootstrap_samples: cfg.bootstrap_samples,
        alpha_level: cfg.alpha_level,
        n_failed_replicates: failed,
        measures,
        replicates,
    })
}
