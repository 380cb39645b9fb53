//! Warm-up probe: warm up with stochastic strong augmentation and inspect the loss
//! distribution at a fixed epoch.

use std::path::{Path, PathBuf};

use nlab_core::lossmodel::{separation_auc, HistogramBin};
use nlab_core::strategies::{warmup_epoch, Algorithm, WarmupOptions};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::metrics::{histogram_path, seed_dir, write_histogram, write_json};
use crate::run::{histogram, mean_plain_losses, new_context, parallel_map, prepare};

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRun {
    pub p_strong: f64,
    pub seed: u64,
    pub epoch: usize,
    pub auc: f64,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub p_strong: f64,
    pub epoch: usize,
    pub seeds: Vec<u64>,
    pub auc: Vec<f64>,
    pub auc_mean: f64,
}

/// Warm-up of `cfg.probe.epoch` epochs with strong-augmentation probability `p`, then
/// the histogram and separation AUC of the mean plain-image losses.
pub fn probe_seed(cfg: &ExperimentConfig, p: f64, seed: u64) -> LabResult<ProbeRun> {
    if !(0.0..=1.0).contains(&p) {
        return Err(LabError::Usage(format!("probe probability {p} outside [0, 1]")));
    }
    let tc = cfg.train_config(seed);
    let (train, _) = prepare(cfg, seed)?;
    let mut ctx = new_context(cfg, &tc, &train, cfg.strategy.algorithm.network_count())?;
    let opts = WarmupOptions {
        penalty: cfg.strategy.algorithm == Algorithm::DivideMix && cfg.dividemix.base.warmup_penalty,
        p_strong: Some(p),
    };
    for _ in 0..cfg.probe.epoch {
        warmup_epoch(&mut ctx, &train, &tc, opts)?;
    }
    let losses = mean_plain_losses(&mut ctx, &train)?;
    Ok(ProbeRun {
        p_strong: p,
        seed,
        epoch: cfg.probe.epoch,
        auc: separation_auc(&losses, &train.flip_mask)?,
        histogram: histogram(&losses, &train.flip_mask, cfg.output.histogram_bins)?,
    })
}

pub fn probe_dir(out: &Path, p: f64) -> PathBuf {
    out.join(format!("p_{p}"))
}

/// Every `(p, seed)` pair of the configuration; writes
/// `out/p_<p>/seed_<s>/histograms/epoch_<e>.csv` and `out/p_<p>/probe.json`.
pub fn warmup_probe(cfg: &ExperimentConfig, out: &Path) -> LabResult<Vec<ProbeSummary>> {
    cfg.validate()?;
    let jobs: Vec<(f64, u64)> = cfg
        .probe
        .p_strong
        .iter()
        .flat_map(|&p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let runs = parallel_map(&jobs, |&(p, s)| probe_seed(cfg, p, s))
        .into_iter()
        .collect::<LabResult<Vec<_>>>()?;
    let mut summaries = Vec::new();
    for &p in &cfg.probe.p_strong {
        let dir = probe_dir(out, p);
        let mine: Vec<&ProbeRun> = runs.iter().filter(|r| r.p_strong == p).collect();
        for r in &mine {
            write_histogram(&histogram_path(&seed_dir(&dir, r.seed), r.epoch), &r.histogram)?;
        }
        let auc: Vec<f64> = mine.iter().map(|r| r.auc).collect();
        let summary = ProbeSummary {
            p_strong: p,
            epoch: cfg.probe.epoch,
            seeds: mine.iter().map(|r| r.seed).collect(),
            auc_mean: auc.iter().sum::<f64>() / auc.len() as f64,
            auc,
        };
        write_json(&dir.join("probe.json"), &summary)?;
        summaries.push(summary);
    }
    crate::files::write(&out.join("config.ini"), cfg.to_ini_string().as_bytes())?;
    Ok(summaries)
}
