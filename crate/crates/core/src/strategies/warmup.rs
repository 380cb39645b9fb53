use alloc::vec::Vec;

use rand::Rng;

use super::audit::{audited_trace, ViewBatch, ViewRole};
use super::context::{one_hots, policy_batch, EpochStats, Meter, TrainConfig, TrainContext};
use crate::augment::{Policy, StrategyVariant, WarmupVariant};
use crate::data::{batches, NoisyDataset};
use crate::nn::{confidence_penalty, sgd_step, softmax_xent, ProbVector};
use crate::rng::{derive_seed, rng_for, tag};
use crate::{Error, Result};

/// Stream keys for warm-up and baseline view draws.
const WARMUP_PHASE: u64 = 0x57;
const CE_PHASE: u64 = 0xce;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WarmupOptions {
    /// Add the confidence penalty to the cross-entropy.
    pub penalty: bool,
    /// Per-batch probability of strong augmentation. `None` uses the strategy's
    /// warm-up variant: 0 for WAW, 1 for SAW.
    pub p_strong: Option<f64>,
}

/// The weak-side policy of a strategy: no augmentation for raw and expansion
/// variants, weak otherwise.
pub fn base_policy(variant: StrategyVariant) -> Policy {
    match variant {
        StrategyVariant::Raw | StrategyVariant::ExpansionW | StrategyVariant::ExpansionS => Policy::Raw,
        _ => Policy::Weak,
    }
}

/// One SGD step of cross-entropy (plus optional confidence penalty) on a descent batch.
/// Returns the objective value.
pub(crate) fn ce_step(
    ctx: &mut TrainContext,
    k: usize,
    batch: &ViewBatch,
    targets: &[ProbVector],
    penalty: bool,
) -> Result<f64> {
    let trace = audited_trace(&ctx.nets[k], batch, &mut ctx.audit)?;
    let ce = softmax_xent(trace.logits(), targets)?;
    let mut grad = ce.grad;
    let mut value = ce.loss;
    if penalty {
        let p = confidence_penalty(trace.logits())?;
        grad.add_scaled(&p.grad, 1.0);
        value += p.loss;
    }
    let grads = ctx.nets[k].backward(&trace, &grad)?;
    sgd_step(&mut ctx.nets[k], &grads, &mut ctx.optimizers[k])?;
    Ok(value)
}

/// One warm-up epoch: every network trained on the given labels with cross-entropy.
/// Each batch draws a coin from a dedicated stream and uses strong augmentation with
/// probability `p_strong`, the strategy's base policy otherwise.
pub fn warmup_epoch(
    ctx: &mut TrainContext,
    ds: &NoisyDataset,
    cfg: &TrainConfig,
    opts: WarmupOptions,
) -> Result<EpochStats> {
    let p = opts.p_strong.unwrap_or(match cfg.strategy.warmup {
        WarmupVariant::Waw => 0.0,
        WarmupVariant::Saw => 1.0,
    });
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config("p_strong must lie in [0, 1]".into()));
    }
    let e = ctx.epoch;
    ctx.set_lr(cfg.schedule.lr_at(e));
    let base = base_policy(cfg.variant());
    let strong = Policy::Strong(cfg.rand_augment);
    let mut meter = Meter::default();
    for k in 0..ctx.nets.len() {
        let shape = ctx.nets[k].input_shape().to_vec();
        let order = batches(ds.len(), cfg.batch_size, e, derive_seed(cfg.seed, &[k as u64]));
        for (b, idx) in order.iter().enumerate() {
            let coin = rng_for(cfg.seed, &[tag::WARMUP_COIN, e as u64, k as u64, b as u64]).random_bool(p);
            let policy = if coin { strong } else { base };
            let keys = [tag::VIEW, WARMUP_PHASE, e as u64, k as u64];
            let batch = policy_batch(ds, idx, policy, ViewRole::Descent, &shape, cfg.seed, &keys)?;
            let targets = one_hots(idx.iter().map(|&i| ds.given_labels[i]), ds.num_classes);
            let v = ce_step(ctx, k, &batch, &targets, opts.penalty)?;
            meter.add(v, &[]);
        }
    }
    ctx.epoch += 1;
    ctx.check_finite()?;
    Ok(meter.finish(e))
}

/// `epochs` consecutive warm-up epochs starting at `ctx.epoch`.
pub fn warmup(
    ctx: &mut TrainContext,
    ds: &NoisyDataset,
    cfg: &TrainConfig,
    epochs: usize,
    opts: WarmupOptions,
) -> Result<Vec<EpochStats>> {
    (0..epochs).map(|_| warmup_epoch(ctx, ds, cfg, opts)).collect()
}

/// Plain cross-entropy training of every network under a fixed runtime `policy`.
pub fn ce_baseline_epoch(
    ctx: &mut TrainContext,
    ds: &NoisyDataset,
    cfg: &TrainConfig,
    policy: Policy,
) -> Result<EpochStats> {
    let e = ctx.epoch;
    ctx.set_lr(cfg.schedule.lr_at(e));
    let mut meter = Meter::default();
    for k in 0..ctx.nets.len() {
        let shape = ctx.nets[k].input_shape().to_vec();
        let order = batches(ds.len(), cfg.batch_size, e, derive_seed(cfg.seed, &[k as u64]));
        for idx in &order {
            let keys = [tag::VIEW, CE_PHASE, e as u64, k as u64];
            let batch = policy_batch(ds, idx, policy, ViewRole::Descent, &shape, cfg.seed, &keys)?;
            let targets = one_hots(idx.iter().map(|&i| ds.given_labels[i]), ds.num_classes);
            let v = ce_step(ctx, k, &batch, &targets, false)?;
            meter.add(v, &[]);
        }
    }
    ctx.epoch += 1;
    ctx.check_finite()?;
    Ok(meter.finish(e))
}
