//! The outer loop: `Z` hold-out samples, tuning per alpha on the rest, and
//! validation of each tuned proportion on the hold-out.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, ExperimentConfig};
use crate::data::{holdout_indices, load_csv, Dataset};
use crate::error::{PpmError, Result};
use crate::metrics::Measure;
use crate::seed::{derive_seed, streams};
use crate::simgen::generate_dataset;
use crate::tuner::{
    cross_validated_predictions, write_loss_curve_csv, write_sweep_csv, write_text, Objective, SweepRow,
    TuningConfig, TuningResult,
};
use crate::validator::{external_validate, ValidationReport};

/// One (repetition, alpha) cell. `alpha = None` marks the whole-population row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub repetition: usize,
    pub alpha: Option<f64>,
    pub tuning: Option<TuningResult>,
    pub validation: Option<ValidationReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub repetition: usize,
    pub seed: u64,
    pub n_trte: usize,
    pub n_holdout: usize,
    /// Every performance measure per grid point, from the tuning predictions.
    pub m_sweep: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub n_rows: usize,
    pub repetitions: Vec<RepetitionRecord>,
    pub cells: Vec<CellRecord>,
}

pub fn load_source(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Csv { path, outcome } => load_csv(path, outcome),
        DataSource::Simulation(sim) => generate_dataset(sim),
    }
}

/// Pooled cross-validated value of every measure at every grid point.
pub fn emit_m_sweep(trte: &Dataset, cfg: &TuningConfig, metrics: &crate::metrics::MetricsConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    Ok(cross_validated_predictions(trte, cfg)?.measure_sweep(metrics))
}

fn repetition_seed(master: u64, z: usize) -> u64 {
    derive_seed(master, z as u64)
}

fn run_repetition(ds: &Dataset, cfg: &ExperimentConfig, z: usize) -> (RepetitionRecord, Vec<CellRecord>) {
    let seed = repetition_seed(cfg.seed, z);
    let failed_cells = |record: RepetitionRecord, e: &PpmError| {
        warn!("repetition {z} failed: {e}");
        let mut cells: Vec<CellRecord> = cfg
            .alphas
            .iter()
            .map(|&a| CellRecord {
                repetition: z,
                alpha: Some(a),
                tuning: None,
                validation: None,
                error: Some(e.to_string()),
            })
            .collect();
        if cfg.full_population_row {
            cells.push(CellRecord {
                repetition: z,
                alpha: None,
                tuning: None,
                validation: None,
                error: Some(e.to_string()),
            });
        }
        (record, cells)
    };
    let mut record = RepetitionRecord {
        repetition: z,
        seed,
        n_trte: 0,
        n_holdout: 0,
        m_sweep: Vec::new(),
    };

    let idx = match holdout_indices(ds.n_rows(), cfg.split.holdout_fraction, derive_seed(seed, streams::HOLDOUT)) {
        Ok(idx) => idx,
        Err(e) => return failed_cells(record, &e),
    };
    let (trte, holdout) = (ds.select_rows(&idx.trte), ds.select_rows(&idx.holdout));
    record.n_trte = trte.n_rows();
    record.n_holdout = holdout.n_rows();

    info!("repetition {z}: tuning on {} patients", trte.n_rows());
    let tuning_cfg = TuningConfig {
        seed,
        ..cfg.tuning.clone()
    };
    let cv = cross_validated_predictions(&trte, &tuning_cfg);
    if let Ok(cv) = &cv {
        record.m_sweep = cv.measure_sweep(&cfg.validation.metrics);
    }

    let validation_seed = derive_seed(seed, streams::VALIDATION);
    // Equal proportions give identical reports, so each is validated once.
    let mut validated: BTreeMap<u64, std::result::Result<ValidationReport, String>> = BTreeMap::new();
    let mut validate = |p: f64| {
        validated
            .entry(p.to_bits())
            .or_insert_with(|| {
                info!("repetition {z}: validating proportion {p}");
                external_validate(&holdout, &cfg.validation_for(p, validation_seed)).map_err(|e| e.to_string())
            })
            .clone()
    };

    let mut cells = Vec::with_capacity(cfg.alphas.len() + 1);
    for &alpha in &cfg.alphas {
        let tuned = cv
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|cv| cv.tuning_result(Objective::Mixture { alpha }).map_err(|e| e.to_string()));
        let cell = match tuned {
            Ok(t) => {
                let v = validate(t.p_optimal);
                CellRecord {
                    repetition: z,
                    alpha: Some(alpha),
                    error: v.as_ref().err().cloned(),
                    validation: v.ok(),
                    tuning: Some(t),
                }
            }
            Err(e) => CellRecord {
                repetition: z,
                alpha: Some(alpha),
                tuning: None,
                validation: None,
                error: Some(e),
            },
        };
        if let Some(e) = &cell.error {
            warn!("repetition {z}, alpha {alpha}: {e}");
        }
        cells.push(cell);
    }
    if cfg.full_population_row {
        let v = validate(1.0);
        cells.push(CellRecord {
            repetition: z,
            alpha: None,
            tuning: None,
            error: v.as_ref().err().cloned(),
            validation: v.ok(),
        });
    }
    (record, cells)
}

pub fn run_experiment_on(ds: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PpmError::Config(format!("workers: {e}")))?;
    let (repetitions, cells): (Vec<_>, Vec<_>) =
        pool.install(|| (0..cfg.repetitions).map(|z| run_repetition(ds, cfg, z)).unzip());
    let cells: Vec<CellRecord> = cells.into_iter().flatten().collect();
    if cells.iter().all(|c| c.error.is_some()) {
        let first = cells.first().and_then(|c| c.error.clone()).unwrap_or_default();
        return Err(PpmError::InvalidDataset(format!("every experiment cell failed; first error: {first}")));
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        n_rows: ds.n_rows(),
        repetitions,
        cells,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let ds = load_source(&cfg.source)?;
    run_experiment_on(&ds, cfg)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cell_name(c: &CellRecord) -> String {
    match c.alpha {
        Some(a) => format!("rep{}_alpha{}", c.repetition, a),
        None => format!("rep{}_full", c.repetition),
    }
}

impl ExperimentReport {
    /// Table-1-shaped rows: per cell and measure, proportion, estimate, SE and interval.
    pub fn summary_table_csv(&self) -> String {
        let mut out = String::from("repetition,alpha,proportion,measure,point,se,lower,upper,method,n_failed_replicates\n");
        for c in &self.cells {
            let Some(v) = &c.validation else { continue };
            for m in Measure::ALL {
                let alpha = c.alpha.map(|a| a.to_string()).unwrap_or_default();
                match v.summary(m) {
                    Some(s) => out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{}\n",
                        c.repetition,
                        alpha,
                        v.p_optimal,
                        m,
                        s.point,
                        s.se,
                        s.lower,
                        s.upper,
                        s.method,
                        s.n_failed_replicates
                    )),
                    None => out.push_str(&format!(
                        "{},{},{},{},,,,,,{}\n",
                        c.repetition, alpha, v.p_optimal, m, v.n_failed_replicates
                    )),
                }
            }
        }
        out
    }

    /// `repetition,alpha,optimal_m,p_optimal,n_train,min_mean_loss`
    pub fn alpha_sweep_csv(&self) -> String {
        let mut out = String::from("repetition,alpha,optimal_m,p_optimal,n_train,min_mean_loss\n");
        for c in &self.cells {
            let (Some(alpha), Some(t)) = (c.alpha, &c.tuning) else { continue };
            let best = t.loss_curve.iter().find(|e| e.m == t.optimal_m).and_then(|e| e.mean_loss);
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.repetition,
                alpha,
                t.optimal_m,
                t.p_optimal,
                t.n_train,
                opt(best)
            ));
        }
        out
    }

    /// (alpha, p_optimal) of every successfully tuned cell.
    pub fn alpha_p_optimal_pairs(&self) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter_map(|c| Some((c.alpha?, c.tuning.as_ref()?.p_optimal)))
            .collect()
    }

    /// Writes the report, Table-1 and alpha-sweep summaries, and per-cell files.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        let cells_dir = dir.join("cells");
        fs::create_dir_all(&cells_dir).map_err(|e| PpmError::io(&cells_dir, e))?;
        write_text(&dir.join("experiment_report.json"), &(serde_json::to_string_pretty(self)? + "\n"))?;
        write_text(&dir.join("summary_table.csv"), &self.summary_table_csv())?;
        write_text(&dir.join("alpha_sweep.csv"), &self.alpha_sweep_csv())?;
        for r in &self.repetitions {
            write_sweep_csv(&r.m_sweep, &cells_dir.join(format!("rep{}_m_sweep.csv", r.repetition)))?;
        }
        for c in &self.cells {
            let name = cell_name(c);
            if let Some(t) = &c.tuning {
                write_text(
                    &cells_dir.join(format!("{name}_tuning.json")),
                    &(serde_json::to_string_pretty(t)? + "\n"),
                )?;
                write_loss_curve_csv(t, &cells_dir.join(format!("{name}_loss_curve.csv")))?;
            }
            if let Some(v) = &c.validation {
                write_text(
                    &cells_dir.join(format!("{name}_validation_report.json")),
                    &(serde_json::to_string_pretty(v)? + "\n"),
                )?;
                v.write_replicates_csv(&cells_dir.join(format!("{name}_replicates.csv")))?;
            }
        }
        Ok(())
    }
}
