use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use ppm_core::config::{parse_config, DataSource, ExperimentConfig};
use ppm_core::experiment::{emit_m_sweep, load_source, run_experiment};
use ppm_core::metrics::{brier_decomposition, full_report, PredictionSet};
use ppm_core::simgen::{generate_dataset, simulation_metadata};
use ppm_core::tuner::{write_loss_curve_csv, write_sweep_csv};
use ppm_core::validator::external_validate;
use ppm_core::{load_csv, tuner, Dataset};

#[derive(Parser)]
#[command(name = "ppm", version, about = "Personalized predictive models on similar subpopulations")]
struct Cli {
    /// Worker threads (0 = all cores); overrides `workers` in the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct DataArgs {
    /// TOML config; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV dataset; defaults to the config's data source.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Outcome column of `--data`.
    #[arg(long)]
    outcome: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with outcome column `y`.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Tune the subpopulation size on a train/test dataset.
    Tune {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `loss_curve.csv` next to `--out`.
        #[arg(long)]
        loss_curve: Option<PathBuf>,
    },
    /// Bootstrap validation of a tuned proportion on a hold-out dataset.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        p_optimal: f64,
        /// Output directory for validation_report.json and replicates.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Every performance measure as a function of the subpopulation size.
    SweepM {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full experiment: Z hold-out samples, tuning per alpha, validation.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// All measures for a CSV of (y, p) pairs.
    Metrics {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>, workers: Option<usize>) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => parse_config(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(w) = workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn load_data(args: &DataArgs, cfg: &ExperimentConfig) -> Result<Dataset> {
    let ds = match (&args.data, &cfg.source) {
        (Some(path), DataSource::Csv { outcome, .. }) => load_csv(path, args.outcome.as_deref().unwrap_or(outcome)),
        (Some(path), DataSource::Simulation(_)) => load_csv(path, args.outcome.as_deref().unwrap_or("y")),
        (None, DataSource::Csv { path, outcome }) => load_csv(path, args.outcome.as_deref().unwrap_or(outcome)),
        (None, source) => load_source(source),
    };
    let ds = ds.context("loading data")?;
    info!("{} patients, {} features, {} events", ds.n_rows(), ds.n_features(), ds.n_events());
    Ok(ds)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let workers = cli.workers;
    match cli.command {
        Command::Simulate { config, out, seed, n } => {
            let cfg = load_config(config.as_deref(), workers)?;
            let mut sim = match cfg.source {
                DataSource::Simulation(sim) => sim,
                DataSource::Csv { .. } => anyhow::bail!("config names a data file; nothing to simulate"),
            };
            sim.seed = seed.unwrap_or(sim.seed);
            sim.n = n.unwrap_or(sim.n);
            let ds = generate_dataset(&sim)?;
            ds.write_csv(&out, "y")?;
            write_json(&out.with_extension("meta.json"), &simulation_metadata(&sim, &ds))?;
            info!("wrote {} rows to {}", ds.n_rows(), out.display());
        }
        Command::Tune { data, alpha, out, loss_curve } => {
            let cfg = load_config(data.config.as_deref(), workers)?;
            let ds = load_data(&data, &cfg)?;
            let mut tuning = cfg.tuning.clone();
            tuning.alpha = alpha.unwrap_or(tuning.alpha);
            let result = tuner::tune_subpopulation_size(&ds, &tuning)?;
            info!(
                "optimal M = {} (proportion {:.4}), {} fallback predictions",
                result.optimal_m, result.p_optimal, result.skipped
            );
            write_json(&out, &result)?;
            let curve = loss_curve.unwrap_or_else(|| out.with_file_name("loss_curve.csv"));
            write_loss_curve_csv(&result, &curve)?;
        }
        Command::Validate { data, p_optimal, out } => {
            let cfg = load_config(data.config.as_deref(), workers)?;
            let ds = load_data(&data, &cfg)?;
            let vcfg = cfg.validation_for(p_optimal, cfg.validation.seed);
            let report = external_validate(&ds, &vcfg)?;
            if report.n_failed_replicates > 0 {
                log::warn!("{} bootstrap replicates failed", report.n_failed_replicates);
            }
            fs::create_dir_all(&out)?;
            write_json(&out.join("validation_report.json"), &report)?;
            report.write_replicates_csv(&out.join("replicates.csv"))?;
        }
        Command::SweepM { data, out } => {
            let cfg = load_config(data.config.as_deref(), workers)?;
            let ds = load_data(&data, &cfg)?;
            let rows = emit_m_sweep(&ds, &cfg.tuning, &cfg.validation.metrics)?;
            write_sweep_csv(&rows, &out)?;
        }
        Command::Experiment { config, out } => {
            let cfg = load_config(config.as_deref(), workers)?;
            let report = run_experiment(&cfg)?;
            let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
            info!("{} cells, {failed} failed", report.cells.len());
            report.write_outputs(&out)?;
        }
        Command::Metrics { pairs, out } => {
            let ps = PredictionSet::from_csv(&pairs)?;
            let cfg = load_config(None, workers)?;
            let report = full_report(&ps, &cfg.validation.metrics);
            let decomposition = brier_decomposition(&ps);
            write_json(
                &out,
                &serde_json::json!({
                    "n": ps.len(),
                    "measures": report,
                    "calibration_term": decomposition.calibration_term,
                    "refinement_term": decomposition.refinement_term,
                }),
            )?;
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        // Commands other than `experiment` run on the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
