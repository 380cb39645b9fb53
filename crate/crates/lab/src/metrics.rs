//! Run outputs: `epochs.csv`, `summary.json`, histograms, checkpoints and the config echo.

use std::path::{Path, PathBuf};

use nlab_core::lossmodel::HistogramBin;
use nlab_core::strategies::{Audit, Purpose, ViewRole};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{io_err, LabError, LabResult};
use crate::files::{save_checkpoint, write};
use crate::run::{aggregate, RunResult, LAST_WINDOW};

pub const LAST_CONVENTION: &str = "mean test accuracy over the final 5 epochs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub test_acc: f64,
    pub train_loss: f64,
    pub auc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub violations: u64,
    pub analysis_loss_fit: u64,
    pub analysis_pseudo_label: u64,
    pub analysis_selection: u64,
    pub descent_update: u64,
    pub descent_non_update: u64,
    pub analysis_update: u64,
    pub plain_update: u64,
    pub plain_loss_fit: u64,
    pub messages: Vec<String>,
}

impl AuditSummary {
    pub fn from_audit(a: &Audit) -> Self {
        Self {
            violations: a.violation_count(),
            analysis_loss_fit: a.count(ViewRole::Analysis, Purpose::LossFit),
            analysis_pseudo_label: a.count(ViewRole::Analysis, Purpose::PseudoLabel),
            analysis_selection: a.count(ViewRole::Analysis, Purpose::Selection),
            descent_update: a.count(ViewRole::Descent, Purpose::Update),
            descent_non_update: [Purpose::LossFit, Purpose::PseudoLabel, Purpose::Selection]
                .iter()
                .map(|&p| a.count(ViewRole::Descent, p))
                .sum(),
            analysis_update: a.count(ViewRole::Analysis, Purpose::Update),
            plain_update: a.count(ViewRole::Plain, Purpose::Update),
            plain_loss_fit: a.count(ViewRole::Plain, Purpose::LossFit),
            messages: a.violations().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub strategy: String,
    pub best: f64,
    pub last: f64,
    pub last_convention: String,
    pub final_acc: f64,
    pub epochs: usize,
    pub train_size: usize,
    pub noise_fraction: f64,
    pub wall_time_s: f64,
    pub audit: AuditSummary,
    /// INI text of the single-seed configuration.
    pub config: String,
}

impl Summary {
    pub fn new(result: &RunResult, cfg: &ExperimentConfig) -> Self {
        Self {
            seed: result.seed,
            strategy: cfg.strategy.to_string(),
            best: result.best,
            last: result.last,
            last_convention: LAST_CONVENTION.to_string(),
            final_acc: result.epochs.last().map_or(f64::NAN, |r| r.test_acc),
            epochs: result.epochs.len(),
            train_size: result.train_size,
            noise_fraction: result.noise_fraction,
            wall_time_s: result.wall_time_s,
            audit: AuditSummary::from_audit(&result.audit),
            config: cfg.for_seed(result.seed).to_ini_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub strategy: String,
    pub seeds: Vec<u64>,
    pub best: Vec<f64>,
    pub last: Vec<f64>,
    pub best_mean: f64,
    /// Sample standard deviation; absent for a single seed.
    pub best_std: Option<f64>,
    pub last_mean: f64,
    pub last_std: Option<f64>,
    pub last_convention: String,
}

impl AggregateSummary {
    pub fn new(results: &[RunResult], cfg: &ExperimentConfig) -> Self {
        let agg = aggregate(results);
        Self {
            strategy: cfg.strategy.to_string(),
            seeds: results.iter().map(|r| r.seed).collect(),
            best: results.iter().map(|r| r.best).collect(),
            last: results.iter().map(|r| r.last).collect(),
            best_mean: agg.best_mean,
            best_std: agg.best_std,
            last_mean: agg.last_mean,
            last_std: agg.last_std,
            last_convention: LAST_CONVENTION.to_string(),
        }
    }
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> LabError + '_ {
    move |e| LabError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> LabResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write(path, &bytes)
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> LabResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| LabError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    bytes.push(b'\n');
    write(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> LabResult<T> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| LabError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_left: f64,
    pub clean: usize,
    pub noisy: usize,
}

pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> LabResult<()> {
    let rows: Vec<HistogramRow> = bins
        .iter()
        .map(|b| HistogramRow {
            bin_left: b.bin_left,
            clean: b.clean_count,
            noisy: b.noisy_count,
        })
        .collect();
    write_csv(path, &rows)
}

pub fn histogram_path(dir: &Path, epoch: usize) -> PathBuf {
    dir.join("histograms").join(format!("epoch_{epoch}.csv"))
}

pub fn checkpoint_path(dir: &Path, k: usize) -> PathBuf {
    dir.join("checkpoints").join(format!("net_{k}.nlab"))
}

/// Writes one seed's outputs into `dir`.
pub fn emit_metrics(result: &RunResult, cfg: &ExperimentConfig, dir: &Path) -> LabResult<Summary> {
    let rows: Vec<EpochRow> = result
        .epochs
        .iter()
        .map(|r| EpochRow {
            epoch: r.epoch,
            test_acc: r.test_acc,
            train_loss: r.train_loss,
            auc: r.auc,
            lr: r.lr,
        })
        .collect();
    write_csv(&dir.join("epochs.csv"), &rows)?;
    for (epoch, bins) in &result.histograms {
        write_histogram(&histogram_path(dir, *epoch), bins)?;
    }
    if cfg.output.checkpoint {
        for (k, net) in result.nets.iter().enumerate() {
            save_checkpoint(net, &checkpoint_path(dir, k))?;
        }
    }
    write(&dir.join("config.ini"), cfg.for_seed(result.seed).to_ini_string().as_bytes())?;
    let summary = Summary::new(result, cfg);
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Writes every seed under `out/seed_<s>` plus `out/aggregate.json` and `out/config.ini`.
pub fn emit_all(results: &[RunResult], cfg: &ExperimentConfig, out: &Path) -> LabResult<AggregateSummary> {
    for r in results {
        emit_metrics(r, cfg, &seed_dir(out, r.seed))?;
    }
    write(&out.join("config.ini"), cfg.to_ini_string().as_bytes())?;
    let agg = AggregateSummary::new(results, cfg);
    write_json(&out.join("aggregate.json"), &agg)?;
    Ok(agg)
}

const _: () = assert!(LAST_WINDOW == 5, "LAST_CONVENTION text names the window");
