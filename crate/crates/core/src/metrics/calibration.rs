//! Weak (slope) and moderate (ICI) calibration measures.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::smoother::LocalLinear;
use super::PredictionSet;
use crate::error::{PpmError, Result};
use crate::glm::{fit_weighted_logistic, FitConfig};

/// Probabilities are clipped to `[LOGIT_CLIP, 1 - LOGIT_CLIP]` before any logit.
pub const LOGIT_CLIP: f64 = 1e-6;

pub const DEFAULT_ICI_SPAN: f64 = 0.75;

pub const MIN_CURVE_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeMethod {
    /// Slope `b` of the recalibration model `logit P(y=1) = a + b logit(p)`.
    #[default]
    Logistic,
    /// Least-squares slope of `y` on `p`.
    Linear,
}

pub fn logit(p: f64) -> f64 {
    let p = p.clamp(LOGIT_CLIP, 1.0 - LOGIT_CLIP);
    (p / (1.0 - p)).ln()
}

pub fn calibration_slope(ps: &PredictionSet, method: SlopeMethod) -> Result<f64> {
    let (pos, neg) = ps.class_counts();
    if pos == 0 || neg == 0 {
        return Err(PpmError::Undefined("calibration slope needs both outcome classes"));
    }
    let p = ps.predictions();
    if p.iter().all(|&v| v == p[0]) {
        return Err(PpmError::Undefined("calibration slope needs distinct predictions"));
    }
    match method {
        SlopeMethod::Logistic => {
            let x = Array2::from_shape_vec((p.len(), 1), p.iter().map(|&v| logit(v)).collect())
                .expect("one column per prediction");
            if x.iter().all(|&v| v == x[[0, 0]]) {
                return Err(PpmError::Undefined("calibration slope needs distinct predictions"));
            }
            let (coefs, diag) = fit_weighted_logistic(
                x.view(),
                ps.outcomes(),
                &vec![1.0; p.len()],
                &FitConfig::unpenalized(),
            )
            .map_err(|_| PpmError::Undefined("calibration slope fit failed"))?;
            if !diag.converged {
                return Err(PpmError::Undefined("calibration slope fit did not converge"));
            }
            Ok(coefs.betas[0])
        }
        SlopeMethod::Linear => {
            let n = p.len() as f64;
            let pbar = p.iter().sum::<f64>() / n;
            let ybar = ps.outcomes().iter().map(|&y| f64::from(y)).sum::<f64>() / n;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (&pk, &yk) in p.iter().zip(ps.outcomes()) {
                sxy += (pk - pbar) * (f64::from(yk) - ybar);
                sxx += (pk - pbar) * (pk - pbar);
            }
            Ok(sxy / sxx)
        }
    }
}

/// Smoothed observed frequency as a function of predicted probability.
#[derive(Debug, Clone)]
pub struct CalibrationCurve {
    smoother: LocalLinear,
    observed: Vec<f64>,
}

impl CalibrationCurve {
    /// Curve value at `p`, kept inside [0, 1].
    pub fn at(&self, p: f64) -> f64 {
        self.smoother.fit_at(p).clamp(0.0, 1.0)
    }

    /// Curve values at the observed predictions, in input order.
    pub fn at_observed(&self) -> Vec<f64> {
        self.smoother
            .fitted(&self.observed)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect()
    }
}

pub fn calibration_curve(ps: &PredictionSet, span: f64) -> Result<CalibrationCurve> {
    if !(span > 0.0 && span <= 1.0) {
        return Err(PpmError::Config(format!("ici_span {span} outside (0, 1]")));
    }
    if ps.len() < MIN_CURVE_POINTS {
        return Err(PpmError::Undefined("calibration curve needs at least 10 predictions"));
    }
    let ys: Vec<f64> = ps.outcomes().iter().map(|&y| f64::from(y)).collect();
    Ok(CalibrationCurve {
        smoother: LocalLinear::new(ps.predictions(), &ys, span),
        observed: ps.predictions().to_vec(),
    })
}

/// Mean absolute gap between the calibration curve and the predictions,
/// taken over the observed predictions.
pub fn ici(ps: &PredictionSet, span: f64) -> Result<f64> {
    let curve = calibration_curve(ps, span)?;
    let fitted = curve.at_observed();
    Ok(fitted
        .iter()
        .zip(ps.predictions())
        .map(|(c, p)| (c - p).abs())
        .sum::<f64>()
        / ps.len() as f64)
}
