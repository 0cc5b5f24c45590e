//! Synthetic cohorts: equicorrelated Gaussian features, a block of them
//! dichotomized at zero, and a nonlinear logistic outcome model.
//!
//! Every row draws its features and its outcome from two separate
//! counter-based streams, so the output does not depend on how rows are
//! scheduled and changing `noise_sd` leaves the features untouched.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind};
use crate::error::{PpmError, Result};
use crate::glm::inverse_logit;
use crate::seed::{derive_seed, rng_from_seed, streams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    pub n_features: usize,
    pub n_binary: usize,
    /// Latent pairwise correlation between any two features.
    pub correlation: f64,
    pub noise_sd: f64,
    pub seed: u64,
    /// Put the binary block after the continuous one. The default keeps the
    /// features of the outcome model continuous, which puts prevalence in the
    /// 0.3 to 0.5 range; binary-first lands near 0.25.
    pub binary_last: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n: 16_000,
            n_features: 20,
            n_binary: 10,
            correlation: 0.2,
            noise_sd: 1.0,
            seed: 0,
            binary_last: true,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(PpmError::Config("simulation.n must be positive".into()));
        }
        if self.n_features < 8 {
            return Err(PpmError::Config("simulation.n_features must be at least 8".into()));
        }
        if self.n_binary > self.n_features {
            return Err(PpmError::Config("simulation.n_binary exceeds n_features".into()));
        }
        // One-factor construction needs 0 <= r < 1; it is then positive definite.
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(PpmError::Config("simulation.correlation must lie in [0, 1)".into()));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(PpmError::Config("simulation.noise_sd must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn is_binary(&self, j: usize) -> bool {
        if self.binary_last {
            j >= self.n_features - self.n_binary
        } else {
            j < self.n_binary
        }
    }

    pub fn feature_kinds(&self) -> Vec<FeatureKind> {
        (0..self.n_features)
            .map(|j| {
                if self.is_binary(j) {
                    FeatureKind::Binary
                } else {
                    FeatureKind::Continuous
                }
            })
            .collect()
    }
}

/// Latent equicorrelated normal row: `sqrt(r) c + sqrt(1 - r) e_j`.
fn latent_row(cfg: &SimulationConfig, row: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(derive_seed(derive_seed(cfg.seed, streams::FEATURES), row as u64));
    let common: f64 = StandardNormal.sample(&mut rng);
    let (a, b) = (cfg.correlation.sqrt(), (1.0 - cfg.correlation).sqrt());
    (0..cfg.n_features)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            a * common + b * e
        })
        .collect()
}

fn feature_row(cfg: &SimulationConfig, row: usize) -> Vec<f64> {
    let mut x = latent_row(cfg, row);
    for (j, v) in x.iter_mut().enumerate() {
        if cfg.is_binary(j) {
            *v = if *v > 0.0 { 1.0 } else { 0.0 };
        }
    }
    x
}

/// Latent (pre-dichotomization) feature matrix.
pub fn generate_latent(cfg: &SimulationConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let rows: Vec<Vec<f64>> = (0..cfg.n).into_par_iter().map(|i| latent_row(cfg, i)).collect();
    Ok(Array2::from_shape_vec((cfg.n, cfg.n_features), rows.concat()).expect("rectangular rows"))
}

/// Observed feature matrix with kinds.
pub fn generate_features(cfg: &SimulationConfig) -> Result<(Array2<f64>, Vec<FeatureKind>)> {
    cfg.validate()?;
    let rows: Vec<Vec<f64>> = (0..cfg.n).into_par_iter().map(|i| feature_row(cfg, i)).collect();
    let x = Array2::from_shape_vec((cfg.n, cfg.n_features), rows.concat()).expect("rectangular rows");
    Ok((x, cfg.feature_kinds()))
}

/// `z = -4x1 + x6 - 2x1x3 + 3exp(x4) - 5exp(x2x8) + noise`, features 1-based.
pub fn true_linear_predictor(x: &[f64], noise: f64) -> f64 {
    assert!(x.len() >= 8, "outcome model needs at least 8 features");
    -4.0 * x[0] + x[5] - 2.0 * x[0] * x[2] + 3.0 * x[3].exp() - 5.0 * (x[1] * x[7]).exp() + noise
}

pub fn outcome_probability(z: f64) -> f64 {
    inverse_logit(z)
}

pub fn generate_dataset(cfg: &SimulationConfig) -> Result<Dataset> {
    let (x, kinds) = generate_features(cfg)?;
    let outcomes: Vec<u8> = (0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(derive_seed(cfg.seed, streams::OUTCOMES), i as u64));
            let e: f64 = StandardNormal.sample(&mut rng);
            let row = x.row(i);
            let z = true_linear_predictor(row.as_slice().expect("standard layout"), cfg.noise_sd * e);
            u8::from(rng.random::<f64>() < outcome_probability(z))
        })
        .collect();
    let names = (1..=cfg.n_features).map(|j| format!("x{j}")).collect();
    Dataset::new(x, outcomes, names, kinds)
}

/// Summary written next to simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetadata {
    pub config: SimulationConfig,
    pub prevalence: f64,
    pub latent_correlation: f64,
    /// Mean observed pairwise correlation within and across the feature blocks.
    pub observed_correlation_binary: Option<f64>,
    pub observed_correlation_continuous: Option<f64>,
    pub observed_correlation_mixed: Option<f64>,
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn simulation_metadata(cfg: &SimulationConfig, ds: &Dataset) -> SimulationMetadata {
    let cols: Vec<Vec<f64>> = ds.features().columns().into_iter().map(|c| c.to_vec()).collect();
    let (mut bin, mut cont, mut mixed) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let r = pearson(&cols[i], &cols[j]);
            match (cfg.is_binary(i), cfg.is_binary(j)) {
                (true, true) => bin.push(r),
                (false, false) => cont.push(r),
                _ => mixed.push(r),
            }
        }
    }
    let mean = |v: &[f64]| {
        let v: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    SimulationMetadata {
        config: *cfg,
        prevalence: ds.n_events() as f64 / ds.n_rows() as f64,
        latent_correlation: cfg.correlation,
        observed_correlation_binary: mean(&bin),
        observed_correlation_continuous: mean(&cont),
        observed_correlation_mixed: mean(&mixed),
    }
}
