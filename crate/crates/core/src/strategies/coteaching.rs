use alloc::format;
use alloc::vec::Vec;

use super::audit::{audited_forward, ViewRole};
use super::context::{one_hots, policy_batch, strategy_batches, EpochStats, Meter, TrainConfig, TrainContext};
use super::warmup::ce_step;
use crate::data::{batches, NoisyDataset};
use crate::nn::{argmax, softmax_xent, ProbVector};
use crate::rng::tag;
use crate::{Error, Result};

const COTEACH_PHASE: u64 = 0xc7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoTeachPlusConfig {
    /// Final forget rate.
    pub tau: f64,
    /// Epochs over which the forget rate ramps to `tau`.
    pub tk: usize,
}

impl Default for CoTeachPlusConfig {
    fn default() -> Self {
        Self { tau: 0.5, tk: 10 }
    }
}

impl CoTeachPlusConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) || self.tk == 0 {
            return Err(Error::Config(format!("invalid Co-teaching+ settings {self:?}")));
        }
        Ok(())
    }
}

/// Keep fraction `1 - min(e / tk * tau, tau)`.
pub fn r_schedule(e: usize, tk: usize, tau: f64) -> f64 {
    1.0 - (e as f64 / tk as f64 * tau).min(tau)
}

/// Positions of the `ceil(frac * n)` smallest losses, in increasing position order.
/// Ties are broken by position.
pub fn select_small_loss(losses: &[f64], frac: f64) -> Vec<usize> {
    let n = losses.len();
    // The tolerance keeps products like 0.7 * 10 from rounding up to 8.
    let keep = (libm::ceil(frac.clamp(0.0, 1.0) * n as f64 - 1e-9).max(0.0) as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let mut chosen = order[..keep].to_vec();
    chosen.sort_unstable();
    chosen
}

/// One Co-teaching+ epoch. Per batch both networks predict on analysis views. If they
/// disagree on some samples, each network picks its small-loss share of the disagreement
/// set and the peer updates on it; otherwise each picks its small-loss share of the whole
/// batch and the peer updates on the descent views of that selection.
pub fn coteaching_plus_epoch(
    ctx: &mut TrainContext,
    ds: &NoisyDataset,
    cfg: &TrainConfig,
    ct: &CoTeachPlusConfig,
) -> Result<EpochStats> {
    ct.validate()?;
    if ctx.nets.len() != 2 {
        return Err(Error::Config("Co-teaching+ needs exactly two networks".into()));
    }
    let e = ctx.epoch;
    ctx.set_lr(cfg.schedule.lr_at(e));
    let keep = r_schedule(e, ct.tk, ct.tau);
    let shape = ctx.nets[0].input_shape().to_vec();
    let (analysis_policy, _) = cfg.policies();
    let mut meter = Meter::default();
    let mut disagreement_batches = 0usize;
    for (b, idx) in batches(ds.len(), cfg.batch_size, e, cfg.seed).iter().enumerate() {
        let keys = [tag::VIEW, COTEACH_PHASE, e as u64, b as u64];
        let views = strategy_batches(ds, idx, 1, cfg, &shape, &keys)?;
        let targets = one_hots(idx.iter().map(|&i| ds.given_labels[i]), ds.num_classes);
        let mut losses = Vec::with_capacity(2);
        let mut preds = Vec::with_capacity(2);
        for k in 0..2 {
            let logits = audited_forward(&ctx.nets[k], &views.analysis[0], super::Purpose::Selection, &mut ctx.audit)?;
            preds.push((0..idx.len()).map(|i| argmax(logits.row(i))).collect::<Vec<_>>());
            losses.push(softmax_xent(&logits, &targets)?.per_sample);
        }
        let disagree: Vec<usize> = (0..idx.len()).filter(|&i| preds[0][i] != preds[1][i]).collect();
        // selections[k] = positions chosen by network k, fed to its peer
        let (selections, descent_policy_for_branch) = if !disagree.is_empty() {
            disagreement_batches += 1;
            let sel = |k: usize| -> Vec<usize> {
                let sub: Vec<f64> = disagree.iter().map(|&i| losses[k][i]).collect();
                select_small_loss(&sub, keep).into_iter().map(|j| disagree[j]).collect()
            };
            ([sel(0), sel(1)], Some(analysis_policy))
        } else {
            (
                [select_small_loss(&losses[0], keep), select_small_loss(&losses[1], keep)],
                None,
            )
        };
        let mut step_loss = 0.0;
        for k in 0..2 {
            let chosen = &selections[1 - k];
            if chosen.is_empty() {
                continue;
            }
            let sub_idx: Vec<usize> = chosen.iter().map(|&p| idx[p]).collect();
            let sub_targets: Vec<ProbVector> = chosen.iter().map(|&p| targets[p].clone()).collect();
            let batch = match descent_policy_for_branch {
                // disagreement branch: the update sees a fresh draw of the analysis-side
                // policy from the descent stream
                Some(policy) => policy_batch(ds, &sub_idx, policy, ViewRole::Descent, &shape, cfg.seed, &keys)?,
                None => {
                    let rows: Vec<&[f64]> = chosen.iter().map(|&p| views.descent[0].inputs.row(p)).collect();
                    super::ViewBatch::new(ViewRole::Descent, crate::nn::Tensor::stack(&shape, &rows)?)
                }
            };
            step_loss += ce_step(ctx, k, &batch, &sub_targets, false)?;
        }
        meter.add(step_loss / 2.0, &[("keep", keep)]);
    }
    ctx.epoch += 1;
    ctx.check_finite()?;
    let mut stats = meter.finish(e);
    stats.terms.push(("disagreement_batches", disagreement_batches as f64));
    Ok(stats)
}
