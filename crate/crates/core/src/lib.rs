//! Personalized predictive models built on similar subpopulations.
//!
//! For each index patient the training patients are ranked by cosine
//! similarity, the top `M` are weighted and a logistic regression is fitted on
//! them alone. The subpopulation size is tuned by repeated cross-validation
//! against a mixture of the calibration and refinement terms of the Brier
//! score, then validated on a hold-out sample with bootstrap BCa intervals.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod glm;
pub mod metrics;
pub mod personalized;
pub mod seed;
pub mod similarity;
pub mod simgen;
pub mod tuner;
pub mod validator;

pub use data::{load_csv, Dataset, FeatureKind, SplitPlan};
pub use error::{PpmError, Result};
pub use metrics::{full_report, Measure, MetricsConfig, PerformanceReport, PredictionSet};
pub use similarity::WeightScheme;
pub use tuner::{TuningConfig, TuningResult};
pub use validator::{ValidationConfig, ValidationReport};
