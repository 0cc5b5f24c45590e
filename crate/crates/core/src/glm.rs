//! Weighted, ridge-penalized logistic regression fitted by Newton-Raphson (IRLS).
//!
//! The objective is the weighted Bernoulli log-likelihood minus
//! `ridge_penalty / 2 * |betas|^2`; the intercept is never penalized.
//! Rows with zero weight are dropped before fitting, so they cannot affect
//! the result.

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{PpmError, Result};

pub const PROB_FLOOR: f64 = 1e-12;

const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the largest absolute coefficient change.
    pub tolerance: f64,
    pub ridge_penalty: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 50,
            tolerance: 1e-8,
            ridge_penalty: 1e-6,
        }
    }
}

impl FitConfig {
    pub fn unpenalized() -> Self {
        FitConfig {
            ridge_penalty: 0.0,
            ..FitConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(PpmError::Config("tolerance must be positive".into()));
        }
        if !self.ridge_penalty.is_finite() || self.ridge_penalty < 0.0 {
            return Err(PpmError::Config("ridge_penalty must be nonnegative".into()));
        }
        if self.max_iterations == 0 {
            return Err(PpmError::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCoefficients {
    pub intercept: f64,
    pub betas: Vec<f64>,
}

impl ModelCoefficients {
    pub fn zeros(p: usize) -> Self {
        ModelCoefficients {
            intercept: 0.0,
            betas: vec![0.0; p],
        }
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept + self.betas.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.intercept)
            .chain(self.betas.iter().copied())
            .collect()
    }

    fn from_slice(theta: &[f64]) -> Self {
        ModelCoefficients {
            intercept: theta[0],
            betas: theta[1..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub final_change: f64,
}

/// Inverse logit, clipped to `[1e-12, 1 - 1e-12]`.
pub fn predict_prob(coefs: &ModelCoefficients, x: &[f64]) -> f64 {
    inverse_logit(coefs.linear_predictor(x)).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Overflow-safe `1 / (1 + exp(-z))`.
pub fn inverse_logit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Positive-weight rows with a leading intercept column, row-major.
struct Design {
    z: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    dim: usize,
}

impl Design {
    fn new(x: ArrayView2<f64>, y: &[u8], w: &[f64]) -> Result<Self> {
        let (n, p) = x.dim();
        if y.len() != n || w.len() != n {
            return Err(PpmError::DimensionMismatch {
                expected: n,
                found: if y.len() != n { y.len() } else { w.len() },
            });
        }
        if w.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(PpmError::InvalidWeights);
        }
        let dim = p + 1;
        let kept = w.iter().filter(|&&v| v > 0.0).count();
        if kept == 0 {
            return Err(PpmError::InvalidWeights);
        }
        let mut design = Design {
            z: Vec::with_capacity(kept * dim),
            y: Vec::with_capacity(kept),
            w: Vec::with_capacity(kept),
            dim,
        };
        for (i, row) in x.rows().into_iter().enumerate() {
            if w[i] > 0.0 {
                design.z.push(1.0);
                design.z.extend(row.iter());
                design.y.push(f64::from(y[i]));
                design.w.push(w[i]);
            }
        }
        let events = design.y.iter().filter(|&&v| v == 1.0).count();
        if events == 0 || events == kept {
            return Err(PpmError::DegenerateOutcome);
        }
        Ok(design)
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.z.chunks_exact(self.dim)
    }

    fn linear_predictors(&self, theta: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn penalized_log_likelihood(&self, theta: &[f64], eta: &[f64], ridge: f64) -> f64 {
        let ll: f64 = eta
            .iter()
            .zip(self.y.iter().zip(&self.w))
            .map(|(&e, (&y, &w))| w * (y * e - softplus(e)))
            .sum();
        ll - 0.5 * ridge * theta[1..].iter().map(|b| b * b).sum::<f64>()
    }

    /// Score vector and negative Hessian (row-major) of the penalized objective.
    fn score_and_information(&self, theta: &[f64], eta: &[f64], ridge: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut score = vec![0.0; d];
        // Rows scaled by sqrt(w mu (1 - mu)), so the information is S'S.
        let mut scaled = Vec::with_capacity(self.z.len());
        for (i, row) in self.rows().enumerate() {
            let mu = inverse_logit(eta[i]);
            let resid = self.w[i] * (self.y[i] - mu);
            let sv = (self.w[i] * mu * (1.0 - mu)).sqrt();
            for (g, &za) in score.iter_mut().zip(row) {
                *g += resid * za;
            }
            scaled.extend(row.iter().map(|&za| sv * za));
        }
        let s = ArrayView2::from_shape((self.y.len(), d), &scaled).expect("row-major design");
        let mut info = s.t().dot(&s).into_raw_vec_and_offset().0;
        for a in 1..d {
            score[a] -= ridge * theta[a];
            info[a * d + a] += ridge;
        }
        (score, info)
    }
}

fn solve_symmetric(upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let d = rhs.len();
    let full = |jitter: f64| {
        DMatrix::from_fn(d, d, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            upper[a * d + b] + if i == j { jitter } else { 0.0 }
        })
    };
    let b = DVector::from_column_slice(rhs);
    if let Some(chol) = full(0.0).cholesky() {
        return Ok(chol.solve(&b).iter().copied().collect());
    }
    let scale = (0..d).map(|i| upper[i * d + i]).fold(1.0, f64::max);
    full(1e-10 * scale)
        .cholesky()
        .map(|chol| chol.solve(&b).iter().copied().collect())
        .ok_or(PpmError::Singular)
}

pub fn fit_weighted_logistic(
    x: ArrayView2<f64>,
    y: &[u8],
    w: &[f64],
    cfg: &FitConfig,
) -> Result<(ModelCoefficients, FitDiagnostics)> {
    fit_weighted_logistic_from(x, y, w, cfg, None)
}

/// As [`fit_weighted_logistic`], optionally starting Newton iterations at `start`.
///
/// Without a start the intercept begins at the weighted log-odds of `y`.
pub fn fit_weighted_logistic_from(
    x: ArrayView2<f64>,
    y: &[u8],
    w: &[f64],
    cfg: &FitConfig,
    start: Option<&ModelCoefficients>,
) -> Result<(ModelCoefficients, FitDiagnostics)> {
    let design = Design::new(x, y, w)?;
    let ridge = cfg.ridge_penalty;
    let mut theta = match start {
        Some(s) if s.betas.len() + 1 == design.dim => s.to_vec(),
        _ => {
            let sw: f64 = design.w.iter().sum();
            let sy: f64 = design.w.iter().zip(&design.y).map(|(w, y)| w * y).sum();
            let ybar = sy / sw;
            let mut t = vec![0.0; design.dim];
            t[0] = (ybar / (1.0 - ybar)).ln();
            t
        }
    };
    let mut eta = design.linear_predictors(&theta);
    let mut objective = design.penalized_log_likelihood(&theta, &eta, ridge);
    let mut diagnostics = FitDiagnostics {
        converged: false,
        iterations: 0,
        final_change: f64::INFINITY,
    };

    for iteration in 1..=cfg.max_iterations {
        let (score, info) = design.score_and_information(&theta, &eta, ridge);
        let delta = solve_symmetric(&info, &score)?;

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + step * d).collect();
            let cand_eta = design.linear_predictors(&candidate);
            let cand_obj = design.penalized_log_likelihood(&candidate, &cand_eta, ridge);
            if cand_obj.is_finite() && cand_obj >= objective - 1e-12 * objective.abs().max(1.0) {
                accepted = Some((candidate, cand_eta, cand_obj));
                break;
            }
            step *= 0.5;
        }
        diagnostics.iterations = iteration;
        let Some((candidate, cand_eta, cand_obj)) = accepted else {
            // No ascent direction left: report the current point as is.
            diagnostics.final_change = 0.0;
            diagnostics.converged = score.iter().all(|g| g.abs() < cfg.tolerance.sqrt());
            break;
        };
        let change = theta
            .iter()
            .zip(&candidate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = candidate;
        eta = cand_eta;
        objective = cand_obj;
        diagnostics.final_change = change;
        if change < cfg.tolerance {
            diagnostics.converged = true;
            break;
        }
    }

    if theta.iter().any(|t| !t.is_finite()) {
        return Err(PpmError::Singular);
    }
    Ok((ModelCoefficients::from_slice(&theta), diagnostics))
}

/// Penalized weighted log-likelihood at `coefs`.
pub fn penalized_log_likelihood(
    x: ArrayView2<f64>,
    y: &[u8],
    w: &[f64],
    ridge: f64,
    coefs: &ModelCoefficients,
) -> Result<f64> {
    let design = Design::new(x, y, w)?;
    let theta = coefs.to_vec();
    let eta = design.linear_predictors(&theta);
    Ok(design.penalized_log_likelihood(&theta, &eta, ridge))
}

/// Analytic gradient of [`penalized_log_likelihood`], intercept first.
pub fn penalized_score(
    x: ArrayView2<f64>,
    y: &[u8],
    w: &[f64],
    ridge: f64,
    coefs: &ModelCoefficients,
) -> Result<Vec<f64>> {
    let design = Design::new(x, y, w)?;
    let theta = coefs.to_vec();
    let eta = design.linear_predictors(&theta);
    Ok(design.score_and_information(&theta, &eta, ridge).0)
}
