//! One personalized model per index patient: rank the training patients by
//! cosine similarity, keep the top M, weight them, fit a weighted logistic
//! regression and predict the index patient.

use log::{debug, warn};
use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::data::{apply_standardizer, fit_standardizer, Dataset};
use crate::error::{PpmError, Result};
use crate::glm::{fit_weighted_logistic_from, predict_prob, FitConfig, ModelCoefficients};
use crate::similarity::{rank_by_similarity, select_top_m, SimilarityRanking, WeightScheme};

/// Everything needed to turn a ranked subpopulation into a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpmSettings {
    pub weight_scheme: WeightScheme,
    pub fit: FitConfig,
    /// Subpopulations with fewer events (or non-events) than this are
    /// predicted by their weighted outcome mean instead of a fitted model.
    pub min_events_per_class: usize,
}

impl Default for PpmSettings {
    fn default() -> Self {
        PpmSettings {
            weight_scheme: WeightScheme::Uniform,
            fit: FitConfig::default(),
            min_events_per_class: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpmPrediction {
    pub probability: f64,
    /// True when the outcome-mean fallback replaced the fitted model.
    pub fallback: bool,
    pub converged: bool,
}

/// Standardizes `train` and `test` with statistics of `train` alone.
pub fn prepare_split(train: &Dataset, test: &Dataset, standardize: bool) -> Result<(Dataset, Dataset)> {
    if !standardize {
        return Ok((train.clone(), test.clone()));
    }
    let params = fit_standardizer(train);
    Ok((apply_standardizer(train, &params)?, apply_standardizer(test, &params)?))
}

fn ranking_for(index_x: &[f64], train: &Dataset) -> Result<SimilarityRanking> {
    match rank_by_similarity(index_x, train) {
        Err(PpmError::UndefinedSimilarity) => {
            warn!("index patient has a zero feature vector; treating all training patients as equally similar");
            Ok(SimilarityRanking::from_scores((0..train.n_rows()).map(|k| (k, 0.0))))
        }
        other => other,
    }
}

/// Predictions for one index patient at each size in `sizes` (ascending).
///
/// Larger subpopulations reuse the previous converged fit as a Newton start.
pub fn predict_index_patient(
    train: &Dataset,
    index_x: &[f64],
    sizes: &[usize],
    settings: &PpmSettings,
) -> Result<Vec<PpmPrediction>> {
    let ranking = ranking_for(index_x, train)?;
    let mut warm: Option<ModelCoefficients> = None;
    let mut out = Vec::with_capacity(sizes.len());
    for &m in sizes {
        let sub = select_top_m(&ranking, m)?;
        let weights = settings.weight_scheme.weights(m);
        let y: Vec<u8> = sub.member_indices.iter().map(|&k| train.outcome(k)).collect();
        let events = y.iter().filter(|&&v| v == 1).count();
        let minority = events.min(m - events);
        let mean_prediction = || {
            let sw: f64 = weights.iter().sum();
            let sy: f64 = weights.iter().zip(&y).map(|(w, &v)| w * f64::from(v)).sum();
            PpmPrediction {
                probability: (sy / sw).clamp(0.0, 1.0),
                fallback: true,
                converged: true,
            }
        };
        if minority < settings.min_events_per_class.max(1) {
            out.push(mean_prediction());
            continue;
        }
        let x = train.features().select(Axis(0), &sub.member_indices);
        match fit_weighted_logistic_from(x.view(), &y, &weights, &settings.fit, warm.as_ref()) {
            Ok((coefs, diag)) => {
                if !diag.converged {
                    debug!("subpopulation fit of size {m} did not converge after {} iterations", diag.iterations);
                }
                out.push(PpmPrediction {
                    probability: predict_prob(&coefs, index_x),
                    fallback: false,
                    converged: diag.converged,
                });
                warm = diag.converged.then_some(coefs);
            }
            Err(PpmError::DegenerateOutcome | PpmError::Singular) => out.push(mean_prediction()),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::fit_weighted_logistic;
    use ndarray::Array2;

    fn toy(n: usize) -> Dataset {
        let x = Array2::from_shape_fn((n, 3), |(i, j)| (((i * 31 + j * 17) % 23) as f64 - 11.0) / 5.0);
        let y = (0..n).map(|i| u8::from((i * 7) % 5 < 2)).collect();
        Dataset::from_matrix(x, y).unwrap()
    }

    #[test]
    fn full_population_equals_global_fit() {
        let train = toy(60);
        let idx = [0.4, -0.2, 1.0];
        let settings = PpmSettings::default();
        let got = predict_index_patient(&train, &idx, &[60], &settings).unwrap();
        let (coefs, _) = fit_weighted_logistic(train.features(), train.outcomes(), &[1.0; 60], &settings.fit).unwrap();
        assert!((got[0].probability - predict_prob(&coefs, &idx)).abs() < 1e-10);
        assert!(!got[0].fallback);
    }

    #[test]
    fn single_class_subpopulation_falls_back_to_mean() {
        let x = Array2::from_shape_fn((30, 2), |(i, j)| 1.0 + i as f64 * 0.1 + j as f64);
        let y = vec![0u8; 30];
        let train = Dataset::from_matrix(x, y).unwrap();
        let got = predict_index_patient(&train, &[1.0, 2.0], &[10, 30], &PpmSettings::default()).unwrap();
        assert!(got.iter().all(|p| p.fallback && p.probability == 0.0));
    }

    #[test]
    fn zero_index_vector_still_predicts() {
        let train = toy(40);
        let got = predict_index_patient(&train, &[0.0, 0.0, 0.0], &[40], &PpmSettings::default()).unwrap();
        assert!(got[0].probability > 0.0 && got[0].probability < 1.0);
    }
}
