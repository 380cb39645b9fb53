use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Beta, Distribution};

use super::audit::{audited_forward, audited_trace, Purpose, ViewBatch, ViewRole};
use super::context::{fit_losses, strategy_batches, EpochStats, Meter, TrainConfig, TrainContext};
use super::labels::{average_probs, co_guess, mix_probs, mix_rows, refine_label, sharpen};
use crate::data::NoisyDataset;
use crate::lossmodel::{co_divide, fit_gmm2, gmm_posterior, normalize};
use crate::nn::{prior_regularizer, sgd_step, soft_mse, softmax, softmax_xent, ProbVector, Tensor};
use crate::rng::{rng_for, tag, LabRng};
use crate::{Error, Result};

const DIVIDEMIX_PHASE: u64 = 0xd1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivideMixConfig {
    /// Augmented views per sample for prediction averaging.
    pub m: usize,
    /// Sharpening temperature.
    pub t: f64,
    /// Clean-probability threshold.
    pub tau: f64,
    /// Mixup Beta(alpha, alpha) parameter.
    pub alpha: f64,
    pub lambda_u: f64,
    pub lambda_r: f64,
    /// Epochs after warm-up over which `lambda_u` ramps linearly from 0.
    pub rampup_epochs: usize,
    /// Mix with `max(lam, 1 - lam)` so each mixed sample stays closest to its own source.
    pub max_lambda: bool,
    /// Add the confidence penalty during warm-up.
    pub warmup_penalty: bool,
}

impl Default for DivideMixConfig {
    fn default() -> Self {
        Self {
            m: 2,
            t: 0.5,
            tau: 0.5,
            alpha: 4.0,
            lambda_u: 25.0,
            lambda_r: 1.0,
            rampup_epochs: 16,
            max_lambda: true,
            warmup_penalty: true,
        }
    }
}

impl DivideMixConfig {
    /// Noise-dependent defaults: alpha 4 and lambda_u 25 at 80% noise and above,
    /// alpha 0.5 and lambda_u 0 otherwise.
    pub fn for_noise(rate: f64) -> Self {
        if rate >= 0.8 {
            Self::default()
        } else {
            Self {
                alpha: 0.5,
                lambda_u: 0.0,
                ..Self::default()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || !(self.t > 0.0) || !(self.alpha > 0.0) || !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("invalid DivideMix settings {self:?}")));
        }
        Ok(())
    }

    /// `lambda_u` at fractional epoch `progress`, ramped linearly over the
    /// `rampup_epochs` following `warmup` epochs.
    pub fn lambda_u_at(&self, progress: f64, warmup: usize) -> f64 {
        if self.rampup_epochs == 0 {
            return if progress >= warmup as f64 { self.lambda_u } else { 0.0 };
        }
        let r = ((progress - warmup as f64) / self.rampup_epochs as f64).clamp(0.0, 1.0);
        self.lambda_u * r
    }
}

/// Loss components of one MixMatch step.
#[derive(Debug, Clone, PartialEq)]
pub struct MixMatchTerms {
    pub lx: f64,
    pub lu: f64,
    pub lreg: f64,
    pub total: f64,
}

/// `Lx + lambda_u * Lu + lambda_r * Lreg` on the logits of an already mixed batch whose
/// first `targets_x.len()` rows are labeled and the rest unlabeled. Returns the terms
/// and dL/dlogits.
pub fn mixmatch_objective(
    logits: &Tensor,
    targets_x: &[ProbVector],
    targets_u: &[ProbVector],
    lambda_u: f64,
    lambda_r: f64,
) -> Result<(MixMatchTerms, Tensor)> {
    let nx = targets_x.len();
    let nu = targets_u.len();
    let c = logits.row_len();
    if logits.batch_size() != nx + nu || nx == 0 {
        return Err(Error::Config(format!(
            "{} logit rows for {nx} labeled and {nu} unlabeled targets",
            logits.batch_size()
        )));
    }
    let rows = |r: core::ops::Range<usize>| -> Result<Tensor> {
        let data = logits.data()[r.start * c..r.end * c].to_vec();
        Tensor::new(alloc::vec![r.len(), c], data)
    };
    let mut grad = Tensor::zeros(logits.shape());
    let x = softmax_xent(&rows(0..nx)?, targets_x)?;
    grad.data_mut()[..nx * c].copy_from_slice(x.grad.data());
    let lu = if nu > 0 {
        let u = soft_mse(&rows(nx..nx + nu)?, targets_u)?;
        for (g, v) in grad.data_mut()[nx * c..].iter_mut().zip(u.grad.data()) {
            *g += lambda_u * v;
        }
        u.loss
    } else {
        0.0
    };
    let (lreg, reg_grad) = prior_regularizer(logits)?;
    grad.add_scaled(&reg_grad, lambda_r);
    let total = x.loss + lambda_u * lu + lambda_r * lreg;
    Ok((
        MixMatchTerms {
            lx: x.loss,
            lu,
            lreg,
            total,
        },
        grad,
    ))
}

/// Inputs and targets mixed as `lam * a + (1 - lam) * a[perm]` over the union of the
/// labeled and unlabeled descent rows (labeled first).
pub fn mixmatch_mix(
    x: &Tensor,
    targets_x: &[ProbVector],
    u: Option<(&Tensor, &[ProbVector])>,
    lam: f64,
    perm: &[usize],
) -> Result<(Tensor, Vec<ProbVector>, Vec<ProbVector>)> {
    let nx = x.batch_size();
    let nu = u.map_or(0, |(t, _)| t.batch_size());
    let n = nx + nu;
    if perm.len() != n {
        return Err(Error::Config(format!("permutation of {} for {n} rows", perm.len())));
    }
    let row = |i: usize| if i < nx { x.row(i) } else { u.unwrap().0.row(i - nx) };
    let target = |i: usize| if i < nx { &targets_x[i] } else { &u.unwrap().1[i - nx] };
    let mixed_rows: Vec<Vec<f64>> = (0..n).map(|i| mix_rows(row(i), row(perm[i]), lam)).collect();
    let mut mixed_targets = (0..n)
        .map(|i| mix_probs(target(i), target(perm[i]), lam))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = mixed_rows.iter().map(Vec::as_slice).collect();
    let inputs = Tensor::stack(&x.shape()[1..], &refs)?;
    let tu = mixed_targets.split_off(nx);
    Ok((inputs, mixed_targets, tu))
}

pub(crate) fn draw_lambda(rng: &mut LabRng, alpha: f64) -> Result<f64> {
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::Config(format!("Beta({alpha}): {e}")))?;
    Ok(beta.sample(rng))
}

fn concat(batches: &[ViewBatch], role: ViewRole) -> Result<ViewBatch> {
    let rows: Vec<&[f64]> = batches
        .iter()
        .flat_map(|b| (0..b.len()).map(move |i| b.inputs.row(i)))
        .collect();
    let shape = &batches[0].inputs.shape()[1..];
    Ok(ViewBatch::new(role, Tensor::stack(shape, &rows)?))
}

fn probs(ctx: &mut TrainContext, k: usize, batch: &ViewBatch) -> Result<Vec<ProbVector>> {
    softmax(&audited_forward(&ctx.nets[k], batch, Purpose::PseudoLabel, &mut ctx.audit)?)
}

/// Clean probabilities for both networks: each network's probabilities come from a
/// two-component GMM on the normalized losses of its peer.
pub fn co_clean_probabilities(ctx: &mut TrainContext, ds: &NoisyDataset, cfg: &TrainConfig) -> Result<()> {
    if ctx.nets.len() != 2 {
        return Err(Error::Config("co-divide needs exactly two networks".into()));
    }
    let mut fitted = Vec::with_capacity(2);
    for k in 0..2 {
        let losses = fit_losses(&ctx.nets[k], ds, cfg, ctx.epoch, &mut ctx.audit)?;
        let norm = normalize(&losses)?;
        let fit = fit_gmm2(&norm, cfg.fit)?;
        fitted.push(gmm_posterior(&fit, &norm));
    }
    // peer assignment: W(1) from net 2, W(2) from net 1
    fitted.swap(0, 1);
    ctx.clean = fitted;
    Ok(())
}

/// One DivideMix epoch under the configured augmentation strategy: co-divide from peer
/// GMMs, then for each network label refinement and co-guessing on analysis views and
/// a MixMatch step on descent views per mini-batch.
pub fn dividemix_epoch(
    ctx: &mut TrainContext,
    ds: &NoisyDataset,
    cfg: &TrainConfig,
    dm: &DivideMixConfig,
) -> Result<EpochStats> {
    dm.validate()?;
    let e = ctx.epoch;
    ctx.set_lr(cfg.schedule.lr_at(e));
    co_clean_probabilities(ctx, ds, cfg)?;
    let c = ds.num_classes;
    let bsz = cfg.batch_size;
    let mut meter = Meter::default();
    let mut labeled_sizes = Vec::with_capacity(2);
    let mut fallback = false;
    for k in 0..2 {
        let split = co_divide(&ctx.clean[k], dm.tau)?;
        fallback |= split.fallback;
        labeled_sizes.push(split.labeled.len());
        let shape = ctx.nets[k].input_shape().to_vec();
        let mut lab: Vec<(usize, f64)> = split.labeled.iter().copied().zip(split.labeled_w.iter().copied()).collect();
        lab.shuffle(&mut rng_for(cfg.seed, &[tag::BATCH, e as u64, k as u64, 0]));
        let mut unl = split.unlabeled.clone();
        unl.shuffle(&mut rng_for(cfg.seed, &[tag::BATCH, e as u64, k as u64, 1]));
        let num_iters = lab.len().div_ceil(bsz);
        let mut u_cursor = 0usize;
        for it in 0..num_iters {
            let chunk = &lab[it * bsz..((it + 1) * bsz).min(lab.len())];
            let xi: Vec<usize> = chunk.iter().map(|p| p.0).collect();
            let ui: Vec<usize> = if unl.is_empty() {
                Vec::new()
            } else {
                (0..bsz)
                    .map(|_| {
                        let v = unl[u_cursor % unl.len()];
                        u_cursor += 1;
                        v
                    })
                    .collect()
            };
            let keys = |set: u64| [tag::VIEW, DIVIDEMIX_PHASE, e as u64, k as u64, set, it as u64];
            let xv = strategy_batches(ds, &xi, dm.m, cfg, &shape, &keys(0))?;
            // label refinement with the network being trained
            let mut p_x: Vec<Vec<ProbVector>> = Vec::with_capacity(dm.m);
            for a in &xv.analysis {
                p_x.push(probs(ctx, k, a)?);
            }
            let mut targets_x = Vec::with_capacity(xi.len());
            for (b, &(i, w)) in chunk.iter().enumerate() {
                let p = average_probs(p_x.iter().map(|v| &v[b]))?;
                let y = ProbVector::one_hot(ds.given_labels[i], c);
                targets_x.push(sharpen(&refine_label(&y, &p, w.clamp(0.0, 1.0))?, dm.t)?);
            }
            // co-guessing with both networks
            let mut targets_u = Vec::with_capacity(ui.len());
            let uv = if ui.is_empty() {
                None
            } else {
                let uv = strategy_batches(ds, &ui, dm.m, cfg, &shape, &keys(1))?;
                let mut p1 = Vec::with_capacity(dm.m);
                let mut p2 = Vec::with_capacity(dm.m);
                for a in &uv.analysis {
                    p1.push(probs(ctx, 0, a)?);
                    p2.push(probs(ctx, 1, a)?);
                }
                for b in 0..ui.len() {
                    let a: Vec<ProbVector> = p1.iter().map(|v| v[b].clone()).collect();
                    let bb: Vec<ProbVector> = p2.iter().map(|v| v[b].clone()).collect();
                    targets_u.push(sharpen(&co_guess(&a, &bb)?, dm.t)?);
                }
                Some(uv)
            };
            // MixMatch on descent views only
            let x_desc = concat(&xv.descent, ViewRole::Descent)?;
            let tx: Vec<ProbVector> = (0..dm.m).flat_map(|_| targets_x.iter().cloned()).collect();
            let u_desc = uv.as_ref().map(|v| concat(&v.descent, ViewRole::Descent)).transpose()?;
            let tu: Vec<ProbVector> = (0..dm.m).flat_map(|_| targets_u.iter().cloned()).collect();
            let n = x_desc.len() + u_desc.as_ref().map_or(0, ViewBatch::len);
            let mut rng = rng_for(cfg.seed, &[tag::MIX, DIVIDEMIX_PHASE, e as u64, k as u64, it as u64]);
            let mut lam = draw_lambda(&mut rng, dm.alpha)?;
            if dm.max_lambda {
                lam = lam.max(1.0 - lam);
            }
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let (mixed, mtx, mtu) = mixmatch_mix(
                &x_desc.inputs,
                &tx,
                u_desc.as_ref().map(|u| (&u.inputs, tu.as_slice())),
                lam,
                &perm,
            )?;
            let batch = ViewBatch::new(ViewRole::Descent, mixed);
            let lambda_u = dm.lambda_u_at(e as f64 + it as f64 / num_iters as f64, cfg.warmup_epochs);
            let trace = audited_trace(&ctx.nets[k], &batch, &mut ctx.audit)?;
            let (terms, grad) = mixmatch_objective(trace.logits(), &mtx, &mtu, lambda_u, dm.lambda_r)?;
            let grads = ctx.nets[k].backward(&trace, &grad)?;
            sgd_step(&mut ctx.nets[k], &grads, &mut ctx.optimizers[k])?;
            meter.add(
                terms.total,
                &[("lx", terms.lx), ("lu", terms.lu), ("lreg", terms.lreg), ("lambda_u", lambda_u)],
            );
        }
    }
    ctx.epoch += 1;
    ctx.check_finite()?;
    let mut stats = meter.finish(e);
    stats.labeled = labeled_sizes;
    stats.fallback = fallback;
    Ok(stats)
}

