use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::audit::{audited_forward, audited_trace, Purpose, ViewBatch, ViewRole};
use super::context::{fit_losses, strategy_batches, EpochStats, Meter, TrainConfig, TrainContext};
use super::dividemix::draw_lambda;
use super::labels::mix_rows;
use crate::data::{batches, NoisyDataset};
use crate::lossmodel::{bmm_posterior, fit_bmm2, normalize, CleanProbabilities};
use crate::nn::{argmax, prior_regularizer, sgd_step, softmax_xent, ProbVector, Tensor};
use crate::rng::{rng_for, tag};
use crate::{Error, Result};

const MDYRH_PHASE: u64 = 0x4d;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdyrhConfig {
    /// Mixup Beta(alpha, alpha) parameter.
    pub alpha: f64,
    pub lambda_r: f64,
}

impl Default for MdyrhConfig {
    fn default() -> Self {
        Self {
            alpha: 32.0,
            lambda_r: 1.0,
        }
    }
}

/// Per-sample quantities of one mixed M-DYR-H batch. Row `b` mixes sample `b` (weight
/// `lam`) with its partner (weight `1 - lam`).
#[derive(Debug, Clone, PartialEq)]
pub struct MdyrhTargets {
    pub y1: Vec<ProbVector>,
    pub y2: Vec<ProbVector>,
    pub z1: Vec<ProbVector>,
    pub z2: Vec<ProbVector>,
    /// Noisy-label posteriors: the weight given to the bootstrapped target.
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub lam: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdyrhTerms {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub lreg: f64,
    pub total: f64,
}

/// `lam (l1 + l2) + (1 - lam)(l3 + l4) + lambda_r Lreg` with
/// `l1 = mean (1 - w1) CE(y1)`, `l2 = mean w1 CE(z1)`, `l3 = mean (1 - w2) CE(y2)`,
/// `l4 = mean w2 CE(z2)`. Returns the terms and dL/dlogits.
pub fn mdyrh_objective(logits: &Tensor, t: &MdyrhTargets, lambda_r: f64) -> Result<(MdyrhTerms, Tensor)> {
    let n = logits.batch_size();
    if [t.y1.len(), t.y2.len(), t.z1.len(), t.z2.len(), t.w1.len(), t.w2.len()]
        .iter()
        .any(|&l| l != n)
    {
        return Err(Error::Config(format!("M-DYR-H targets do not match {n} rows")));
    }
    let weighted = |targets: &[ProbVector], w: &dyn Fn(usize) -> f64| -> Result<f64> {
        let per = softmax_xent(logits, targets)?.per_sample;
        Ok(per.iter().enumerate().map(|(b, l)| w(b) * l).sum::<f64>() / n as f64)
    };
    let l1 = weighted(&t.y1, &|b| 1.0 - t.w1[b])?;
    let l2 = weighted(&t.z1, &|b| t.w1[b])?;
    let l3 = weighted(&t.y2, &|b| 1.0 - t.w2[b])?;
    let l4 = weighted(&t.z2, &|b| t.w2[b])?;
    // Cross-entropy is linear in the target, so the four terms collapse into one soft target.
    let lam = t.lam;
    let combined = (0..n)
        .map(|b| {
            let c = t.y1[b].len();
            ProbVector::normalized(
                (0..c)
                    .map(|j| {
                        lam * ((1.0 - t.w1[b]) * t.y1[b].as_slice()[j] + t.w1[b] * t.z1[b].as_slice()[j])
                            + (1.0 - lam)
                                * ((1.0 - t.w2[b]) * t.y2[b].as_slice()[j] + t.w2[b] * t.z2[b].as_slice()[j])
                    })
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut grad = softmax_xent(logits, &combined)?.grad;
    let (lreg, reg_grad) = prior_regularizer(logits)?;
    grad.add_scaled(&reg_grad, lambda_r);
    let total = lam * (l1 + l2) + (1.0 - lam) * (l3 + l4) + lambda_r * lreg;
    Ok((
        MdyrhTerms {
            l1,
            l2,
            l3,
            l4,
            lreg,
            total,
        },
        grad,
    ))
}

/// Posterior of the high-loss (noisy) component of a two-component BMM fit on the
/// normalized per-sample losses of `ctx.nets[0]`. Stored in `ctx.clean[0]`.
pub fn bmm_noise_weights(ctx: &mut TrainContext, ds: &NoisyDataset, cfg: &TrainConfig) -> Result<()> {
    let losses = fit_losses(&ctx.nets[0], ds, cfg, ctx.epoch, &mut ctx.audit)?;
    let norm = normalize(&losses)?;
    let fit = fit_bmm2(&norm, cfg.fit)?;
    let clean = bmm_posterior(&fit, &norm);
    ctx.clean[0] = CleanProbabilities(clean.0.iter().map(|c| 1.0 - c).collect());
    Ok(())
}

/// One M-DYR-H epoch with hard bootstrapping: BMM weights from the current network,
/// then per batch bootstrapped labels from analysis views and a mixup step on descent
/// views.
pub fn mdyrh_epoch(ctx: &mut TrainContext, ds: &NoisyDataset, cfg: &TrainConfig, md: &MdyrhConfig) -> Result<EpochStats> {
    if !(md.alpha > 0.0) {
        return Err(Error::Config(format!("mixup alpha {} must be positive", md.alpha)));
    }
    let e = ctx.epoch;
    ctx.set_lr(cfg.schedule.lr_at(e));
    bmm_noise_weights(ctx, ds, cfg)?;
    let c = ds.num_classes;
    let shape = ctx.nets[0].input_shape().to_vec();
    let mut meter = Meter::default();
    for (b, idx) in batches(ds.len(), cfg.batch_size, e, cfg.seed).iter().enumerate() {
        let keys = [tag::VIEW, MDYRH_PHASE, e as u64, b as u64];
        let views = strategy_batches(ds, idx, 1, cfg, &shape, &keys)?;
        let logits = audited_forward(&ctx.nets[0], &views.analysis[0], Purpose::PseudoLabel, &mut ctx.audit)?;
        let z: Vec<ProbVector> = (0..idx.len()).map(|i| ProbVector::one_hot(argmax(logits.row(i)), c)).collect();
        let y: Vec<ProbVector> = idx.iter().map(|&i| ProbVector::one_hot(ds.given_labels[i], c)).collect();
        let w: Vec<f64> = idx.iter().map(|&i| ctx.clean[0].0[i]).collect();
        let mut rng = rng_for(cfg.seed, &[tag::MIX, MDYRH_PHASE, e as u64, b as u64]);
        let lam = draw_lambda(&mut rng, md.alpha)?;
        let mut perm: Vec<usize> = (0..idx.len()).collect();
        perm.shuffle(&mut rng);
        let x = &views.descent[0].inputs;
        let rows: Vec<Vec<f64>> = (0..idx.len()).map(|i| mix_rows(x.row(i), x.row(perm[i]), lam)).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let batch = ViewBatch::new(ViewRole::Descent, Tensor::stack(&shape, &refs)?);
        let targets = MdyrhTargets {
            y2: perm.iter().map(|&p| y[p].clone()).collect(),
            z2: perm.iter().map(|&p| z[p].clone()).collect(),
            w2: perm.iter().map(|&p| w[p]).collect(),
            y1: y,
            z1: z,
            w1: w,
            lam,
        };
        let trace = audited_trace(&ctx.nets[0], &batch, &mut ctx.audit)?;
        let (terms, grad) = mdyrh_objective(trace.logits(), &targets, md.lambda_r)?;
        let grads = ctx.nets[0].backward(&trace, &grad)?;
        sgd_step(&mut ctx.nets[0], &grads, &mut ctx.optimizers[0])?;
        meter.add(
            terms.total,
            &[("l1", terms.l1), ("l2", terms.l2), ("l3", terms.l3), ("l4", terms.l4), ("lreg", terms.lreg)],
        );
    }
    ctx.epoch += 1;
    ctx.check_finite()?;
    Ok(meter.finish(e))
}
