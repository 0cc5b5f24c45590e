//! Brier score, its two-term decomposition and the mixture loss built on it.

use super::{LossConfig, PredictionSet};

/// Mean squared error between outcomes and predictions.
pub fn brier_score(ps: &PredictionSet) -> f64 {
    ps.mean_of(|y, p| (y - p) * (y - p))
}

/// Calibration and refinement parts of the Brier score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrierDecomposition {
    /// `mean((y - p)(1 - 2p))`
    pub calibration_term: f64,
    /// `mean(p(1 - p))`
    pub refinement_term: f64,
}

impl BrierDecomposition {
    pub fn total(&self) -> f64 {
        self.calibration_term + self.refinement_term
    }
}

pub fn brier_decomposition(ps: &PredictionSet) -> BrierDecomposition {
    BrierDecomposition {
        calibration_term: ps.mean_of(|y, p| (y - p) * (1.0 - 2.0 * p)),
        refinement_term: ps.mean_of(|_, p| p * (1.0 - p)),
    }
}

/// `alpha * calibration_term + (1 - alpha) * refinement_term`.
pub fn mixture_loss(ps: &PredictionSet, cfg: &LossConfig) -> f64 {
    let d = brier_decomposition(ps);
    cfg.alpha * d.calibration_term + (1.0 - cfg.alpha) * d.refinement_term
}

/// Mean absolute difference between outcomes and predictions.
pub fn citl(ps: &PredictionSet) -> f64 {
    ps.mean_of(|y, p| (y - p).abs())
}
