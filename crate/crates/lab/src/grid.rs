//! Strategy x noise-rate sweeps, one result directory per cell.

use std::path::{Path, PathBuf};

use nlab_core::strategies::StrategySpec;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::metrics::{emit_all, write_json, AggregateSummary};
use crate::run::run;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub strategy: String,
    pub noise_rate: f64,
    pub dir: PathBuf,
    pub summary: AggregateSummary,
}

pub fn cell_dir(out: &Path, strategy: &StrategySpec, rate: f64) -> PathBuf {
    out.join(format!("{strategy}_noise{rate}"))
}

/// The configurations of every cell, strategies outermost.
pub fn grid_configs(base: &ExperimentConfig, strategies: &[StrategySpec], rates: &[f64]) -> Vec<ExperimentConfig> {
    strategies
        .iter()
        .flat_map(|s| {
            rates.iter().map(move |&r| {
                let mut cfg = base.clone();
                cfg.strategy = *s;
                cfg.noise.rate = r;
                cfg
            })
        })
        .collect()
}

/// Runs every cell in turn (seeds within a cell run in parallel) and writes
/// `out/<strategy>_noise<rate>/` for each plus `out/grid.json`.
pub fn grid(base: &ExperimentConfig, strategies: &[StrategySpec], rates: &[f64], out: &Path) -> LabResult<Vec<GridCell>> {
    if strategies.is_empty() || rates.is_empty() {
        return Err(LabError::Usage("grid needs at least one strategy and one noise rate".into()));
    }
    let mut cells = Vec::new();
    for cfg in grid_configs(base, strategies, rates) {
        let dir = cell_dir(out, &cfg.strategy, cfg.noise.rate);
        let results = run(&cfg)?;
        let summary = emit_all(&results, &cfg, &dir)?;
        cells.push(GridCell {
            strategy: cfg.strategy.to_string(),
            noise_rate: cfg.noise.rate,
            dir,
            summary,
        });
    }
    write_json(&out.join("grid.json"), &cells)?;
    Ok(cells)
}
