//! Experiment configuration files (TOML).
//!
//! ```toml
//! seed = 7
//! Z = 10
//! data = "cohort.csv"     # omit to simulate
//! outcome = "died"
//!
//! [split]
//! holdout_fraction = 0.2
//!
//! [tuning]
//! alpha = [0.5, 0.75]
//! K = 10
//! v = 20
//!
//! [validation]
//! B = 1000
//! ```
//!
//! Every key is optional; unknown keys are rejected with their path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::SplitPlan;
use crate::error::{PpmError, Result};
use crate::glm::FitConfig;
use crate::metrics::MetricsConfig;
use crate::similarity::WeightScheme;
use crate::simgen::SimulationConfig;
use crate::tuner::{TuningConfig, DEFAULT_M_GRID};
use crate::validator::ValidationConfig;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum AlphaSpec {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    #[serde(rename = "Z")]
    z: usize,
    workers: usize,
    data: Option<PathBuf>,
    outcome: String,
    standardize: bool,
    split: RawSplit,
    tuning: RawTuning,
    validation: RawValidation,
    metrics: MetricsConfig,
    simulation: SimulationConfig,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig {
            seed: 0,
            z: 10,
            workers: 0,
            data: None,
            outcome: "y".into(),
            standardize: true,
            split: RawSplit::default(),
            tuning: RawTuning::default(),
            validation: RawValidation::default(),
            metrics: MetricsConfig::default(),
            simulation: SimulationConfig::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSplit {
    holdout_fraction: f64,
}

impl Default for RawSplit {
    fn default() -> Self {
        RawSplit { holdout_fraction: 0.2 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawTuning {
    m_grid: Vec<f64>,
    alpha: AlphaSpec,
    #[serde(rename = "K")]
    folds: usize,
    #[serde(rename = "v")]
    repeats: usize,
    min_subpop: usize,
    min_events_per_class: usize,
    weight_scheme: WeightScheme,
    max_iterations: usize,
    tolerance: f64,
    ridge_penalty: f64,
}

impl Default for RawTuning {
    fn default() -> Self {
        let t = TuningConfig::default();
        RawTuning {
            m_grid: DEFAULT_M_GRID.to_vec(),
            alpha: AlphaSpec::One(t.alpha),
            folds: t.folds,
            repeats: t.repeats,
            min_subpop: t.min_subpop,
            min_events_per_class: t.min_events_per_class,
            weight_scheme: t.weight_scheme,
            max_iterations: t.fit.max_iterations,
            tolerance: t.fit.tolerance,
            ridge_penalty: t.fit.ridge_penalty,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawValidation {
    #[serde(rename = "B")]
    bootstrap_samples: usize,
    inner_split: f64,
    alpha_level: f64,
    full_population_row: bool,
}

impl Default for RawValidation {
    fn default() -> Self {
        let v = ValidationConfig::default();
        RawValidation {
            bootstrap_samples: v.bootstrap_samples,
            inner_split: v.inner_split,
            alpha_level: v.alpha_level,
            full_population_row: true,
        }
    }
}

/// Where the patients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv { path: PathBuf, outcome: String },
    Simulation(SimulationConfig),
}

/// A validated experiment: outer repetitions, tuning and validation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Outer repetitions with fresh hold-out samples.
    #[serde(rename = "Z")]
    pub repetitions: usize,
    /// Worker threads; 0 uses every available core. Not written to reports,
    /// which must not depend on it.
    #[serde(skip)]
    pub workers: usize,
    pub source: DataSource,
    pub split: SplitPlan,
    /// Tuning settings; `alpha` holds the first entry of `alphas`.
    pub tuning: TuningConfig,
    pub alphas: Vec<f64>,
    /// Validation settings; `p_optimal` is filled in per cell.
    pub validation: ValidationConfig,
    /// Also validate the whole training population (proportion 1) per repetition.
    pub full_population_row: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config_str("", Path::new(".")).expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(key_error("Z", "must be at least 1"));
        }
        section("split", self.split.validate())?;
        section("tuning", self.tuning.validate())?;
        if self.alphas.is_empty() {
            return Err(key_error("tuning.alpha", "list is empty"));
        }
        for &a in &self.alphas {
            if !(0.0..=1.0).contains(&a) {
                return Err(key_error("tuning.alpha", &format!("{a} outside [0, 1]")));
            }
        }
        section("validation", self.validation.validate())?;
        if let DataSource::Simulation(sim) = &self.source {
            section("simulation", sim.validate())?;
        }
        Ok(())
    }

    /// Validation settings for one tuned proportion.
    pub fn validation_for(&self, p_optimal: f64, seed: u64) -> ValidationConfig {
        ValidationConfig {
            p_optimal,
            seed,
            ..self.validation.clone()
        }
    }
}

fn key_error(key: &str, msg: &str) -> PpmError {
    PpmError::Config(format!("{key}: {msg}"))
}

fn section(name: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        PpmError::Config(msg) => PpmError::Config(format!("[{name}] {msg}")),
        other => other,
    })
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| PpmError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

/// Parses TOML text; relative data paths are resolved against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| PpmError::Config(e.to_string()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        PpmError::Config(format!("{path}: {}", e.into_inner().message().trim()))
    })?;

    let alphas = match raw.tuning.alpha {
        AlphaSpec::One(a) => vec![a],
        AlphaSpec::Many(v) => v,
    };
    let fit = FitConfig {
        max_iterations: raw.tuning.max_iterations,
        tolerance: raw.tuning.tolerance,
        ridge_penalty: raw.tuning.ridge_penalty,
    };
    let tuning = TuningConfig {
        m_grid: raw.tuning.m_grid,
        alpha: alphas.first().copied().unwrap_or(0.5),
        folds: raw.tuning.folds,
        repeats: raw.tuning.repeats,
        weight_scheme: raw.tuning.weight_scheme,
        seed: raw.seed,
        fit,
        min_subpop: raw.tuning.min_subpop,
        min_events_per_class: raw.tuning.min_events_per_class,
        standardize: raw.standardize,
    };
    let validation = ValidationConfig {
        bootstrap_samples: raw.validation.bootstrap_samples,
        p_optimal: 1.0,
        inner_split: raw.validation.inner_split,
        weight_scheme: tuning.weight_scheme,
        alpha_level: raw.validation.alpha_level,
        seed: raw.seed,
        fit,
        min_events_per_class: tuning.min_events_per_class,
        standardize: raw.standardize,
        metrics: raw.metrics,
    };
    let split = SplitPlan {
        holdout_fraction: raw.split.holdout_fraction,
        folds: tuning.folds,
        repeats: tuning.repeats,
        seed: raw.seed,
    };
    let source = match raw.data {
        Some(p) => DataSource::Csv {
            path: if p.is_relative() { base_dir.join(p) } else { p },
            outcome: raw.outcome,
        },
        None => DataSource::Simulation(raw.simulation),
    };
    let cfg = ExperimentConfig {
        seed: raw.seed,
        repetitions: raw.z,
        workers: raw.workers,
        source,
        split,
        tuning,
        alphas,
        validation,
        full_population_row: raw.validation.full_population_row,
    };
    cfg.validate()?;
    Ok(cfg)
}
