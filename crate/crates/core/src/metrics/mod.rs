//! Performance measures for binary-outcome predictions and the mixture loss.

mod brier;
mod calibration;
mod discrimination;
pub mod smoother;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PpmError, Result};

pub use brier::{brier_decomposition, brier_score, citl, mixture_loss, BrierDecomposition};
pub use calibration::{
    calibration_curve, calibration_slope, ici, logit, CalibrationCurve, SlopeMethod,
    DEFAULT_ICI_SPAN, LOGIT_CLIP, MIN_CURVE_POINTS,
};
pub use discrimination::{auprc, auroc};

/// Paired observed outcomes and predicted probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    outcomes: Vec<u8>,
    predictions: Vec<f64>,
}

impl PredictionSet {
    pub fn new(outcomes: Vec<u8>, predictions: Vec<f64>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(PpmError::InvalidPredictions("empty".into()));
        }
        if outcomes.len() != predictions.len() {
            return Err(PpmError::DimensionMismatch {
                expected: outcomes.len(),
                found: predictions.len(),
            });
        }
        if outcomes.iter().any(|&y| y > 1) {
            return Err(PpmError::InvalidPredictions("outcome outside {0,1}".into()));
        }
        if predictions.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(PpmError::InvalidPredictions("prediction outside [0,1]".into()));
        }
        Ok(PredictionSet {
            outcomes,
            predictions,
        })
    }

    /// Reads a CSV with columns `y` (0/1) and `p`; other columns are ignored.
    pub fn from_csv(path: &std::path::Path) -> Result<Self> {
        let ds = crate::data::load_csv(path, "y")?;
        let j = ds
            .feature_names()
            .iter()
            .position(|n| n == "p")
            .ok_or_else(|| PpmError::InvalidDataset("pairs file needs a `p` column".into()))?;
        PredictionSet::new(ds.outcomes().to_vec(), ds.features().column(j).to_vec())
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    /// (positives, negatives)
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.outcomes.iter().filter(|&&y| y == 1).count();
        (pos, self.len() - pos)
    }

    /// Copy without entry `i`; `None` if that would leave the set empty.
    pub fn without(&self, i: usize) -> Option<PredictionSet> {
        if self.len() <= 1 {
            return None;
        }
        let mut outcomes = self.outcomes.clone();
        let mut predictions = self.predictions.clone();
        outcomes.remove(i);
        predictions.remove(i);
        Some(PredictionSet {
            outcomes,
            predictions,
        })
    }

    fn mean_of(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.outcomes
            .iter()
            .zip(&self.predictions)
            .map(|(&y, &p)| f(f64::from(y), p))
            .sum::<f64>()
            / self.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha: f64,
}

impl LossConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(PpmError::Config(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(LossConfig { alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub ici_span: f64,
    pub slope_method: SlopeMethod,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            ici_span: DEFAULT_ICI_SPAN,
            slope_method: SlopeMethod::Logistic,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ici_span > 0.0 && self.ici_span <= 1.0) {
            return Err(PpmError::Config("metrics.ici_span outside (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Auroc,
    Auprc,
    Citl,
    CalibrationSlope,
    Ici,
    Brier,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::Auroc,
        Measure::Auprc,
        Measure::Citl,
        Measure::CalibrationSlope,
        Measure::Ici,
        Measure::Brier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Auroc => "auroc",
            Measure::Auprc => "auprc",
            Measure::Citl => "citl",
            Measure::CalibrationSlope => "calibration_slope",
            Measure::Ici => "ici",
            Measure::Brier => "brier",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All measures for one prediction set; undefined measures are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub citl: Option<f64>,
    pub calibration_slope: Option<f64>,
    pub ici: Option<f64>,
    pub brier: Option<f64>,
}

impl PerformanceReport {
    pub fn get(&self, m: Measure) -> Option<f64> {
        match m {
            Measure::Auroc => self.auroc,
            Measure::Auprc => self.auprc,
            Measure::Citl => self.citl,
            Measure::CalibrationSlope => self.calibration_slope,
            Measure::Ici => self.ici,
            Measure::Brier => self.brier,
        }
    }
}

pub fn full_report(ps: &PredictionSet, cfg: &MetricsConfig) -> PerformanceReport {
    PerformanceReport {
        auroc: auroc(ps).ok(),
        auprc: auprc(ps).ok(),
        citl: Some(citl(ps)),
        calibration_slope: calibration_slope(ps, cfg.slope_method).ok(),
        ici: ici(ps, cfg.ici_span).ok(),
        brier: Some(brier_score(ps)),
    }
}
