use alloc::format;
use alloc::vec::Vec;

use super::audit::{audited_forward, Audit, Purpose, ViewBatch, ViewRole};
use crate::augment::{analysis_view, strategy_views, AugStrategy, Policy, RandAugmentConfig, StrategyVariant, ViewSeeds};
use crate::data::{NoisyDataset, Normalized};
use crate::lossmodel::{CleanProbabilities, FitOptions};
use crate::nn::{softmax, softmax_xent, LrSchedule, Network, OptimizerState, ProbVector, SgdConfig, Tensor};
use crate::rng::{derive_seed, rng_for, tag};
use crate::{Error, Result};

/// Settings shared by every training procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub sgd: SgdConfig,
    pub schedule: LrSchedule,
    pub warmup_epochs: usize,
    pub epochs: usize,
    pub rand_augment: RandAugmentConfig,
    pub strategy: AugStrategy,
    pub seed: u64,
    /// Fit mixtures on analysis views instead of plain images.
    pub fit_on_augmented: bool,
    pub fit: FitOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            sgd: SgdConfig::default(),
            schedule: LrSchedule::new(0.02, 40),
            warmup_epochs: 10,
            epochs: 60,
            rand_augment: RandAugmentConfig::default(),
            strategy: AugStrategy::default(),
            seed: 0,
            fit_on_augmented: false,
            fit: FitOptions::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.warmup_epochs > self.epochs {
            return Err(Error::Config(format!(
                "{} warm-up epochs exceed {} total",
                self.warmup_epochs, self.epochs
            )));
        }
        Ok(())
    }

    pub fn variant(&self) -> StrategyVariant {
        self.strategy.variant
    }

    /// `(analysis, descent)` runtime policies of the configured strategy.
    pub fn policies(&self) -> (Policy, Policy) {
        self.variant().policies(self.rand_augment)
    }
}

/// Networks, optimizer states and per-network clean probabilities carried across epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainContext {
    pub nets: Vec<Network>,
    pub optimizers: Vec<OptimizerState>,
    /// `clean[k]` is the clean probability used to train network `k` (DivideMix), or
    /// the mixture posterior of the single network (M-DYR-H).
    pub clean: Vec<CleanProbabilities>,
    /// Index of the next epoch to run.
    pub epoch: usize,
    pub audit: Audit,
}

impl TrainContext {
    /// `count` networks built by `build` from independent init streams.
    pub fn new(
        count: usize,
        cfg: &TrainConfig,
        mut build: impl FnMut(&mut crate::rng::LabRng) -> Result<Network>,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("need at least one network".into()));
        }
        let mut nets = Vec::with_capacity(count);
        for k in 0..count {
            nets.push(build(&mut rng_for(cfg.seed, &[tag::INIT, k as u64]))?);
        }
        Self::from_nets(nets, cfg.sgd)
    }

    pub fn from_nets(nets: Vec<Network>, sgd: SgdConfig) -> Result<Self> {
        if let Some(first) = nets.first() {
            let shape = (first.input_shape().to_vec(), first.param_count());
            if nets.iter().any(|n| (n.input_shape().to_vec(), n.param_count()) != shape) {
                return Err(Error::Config("networks differ in architecture".into()));
            }
        }
        let optimizers = nets.iter().map(|n| OptimizerState::new(n, sgd)).collect();
        let clean = nets.iter().map(|_| CleanProbabilities::default()).collect();
        Ok(Self {
            nets,
            optimizers,
            clean,
            epoch: 0,
            audit: Audit::default(),
        })
    }

    pub(crate) fn set_lr(&mut self, lr: f64) {
        for o in &mut self.optimizers {
            o.lr = lr;
        }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if let Some(k) = self.nets.iter().position(|n| !n.is_finite()) {
            return Err(Error::Numeric(format!(
                "network {k} has non-finite parameters after epoch {}",
                self.epoch
            )));
        }
        Ok(())
    }
}

/// Aggregates reported by one training epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training objective over update steps.
    pub loss: f64,
    /// Named loss components, each averaged over update steps.
    pub terms: Vec<(&'static str, f64)>,
    /// Labeled-set size per network, for procedures that split the data.
    pub labeled: Vec<usize>,
    /// True if any split fell back to the top half by clean probability.
    pub fallback: bool,
}

/// Running means for `EpochStats`.
#[derive(Debug, Default)]
pub(crate) struct Meter {
    steps: usize,
    loss: f64,
    terms: Vec<(&'static str, f64)>,
}

impl Meter {
    pub fn add(&mut self, loss: f64, terms: &[(&'static str, f64)]) {
        self.steps += 1;
        self.loss += loss;
        for &(name, v) in terms {
            match self.terms.iter_mut().find(|(n, _)| *n == name) {
                Some(slot) => slot.1 += v,
                None => self.terms.push((name, v)),
            }
        }
    }

    pub fn finish(self, epoch: usize) -> EpochStats {
        let s = self.steps.max(1) as f64;
        EpochStats {
            epoch,
            loss: self.loss / s,
            terms: self.terms.into_iter().map(|(n, v)| (n, v / s)).collect(),
            labeled: Vec::new(),
            fallback: false,
        }
    }
}

pub(crate) fn stack(input_shape: &[usize], rows: &[Normalized]) -> Result<Tensor> {
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.values.as_slice()).collect();
    Tensor::stack(input_shape, &refs)
}

/// Plain normalized images of `idx`.
pub fn plain_batch(ds: &NoisyDataset, idx: &[usize], input_shape: &[usize]) -> Result<ViewBatch> {
    let rows: Vec<Normalized> = idx
        .iter()
        .map(|&i| ds.images[i].normalize(&ds.stats.mean, &ds.stats.std))
        .collect();
    Ok(ViewBatch::new(ViewRole::Plain, stack(input_shape, &rows)?))
}

/// One view per sample under `policy`, drawn from the descent stream of `keys + [i]`.
pub fn policy_batch(
    ds: &NoisyDataset,
    idx: &[usize],
    policy: Policy,
    role: ViewRole,
    input_shape: &[usize],
    seed: u64,
    keys: &[u64],
) -> Result<ViewBatch> {
    let base = derive_seed(seed, keys);
    let rows: Vec<Normalized> = idx
        .iter()
        .map(|&i| {
            let s = ViewSeeds::derive(base, &[i as u64]);
            let seed = match role {
                ViewRole::Analysis => s.analysis,
                _ => s.descent,
            };
            policy.apply(&ds.images[i], &mut rng_for(seed, &[]), &ds.stats)
        })
        .collect();
    Ok(ViewBatch::new(role, stack(input_shape, &rows)?))
}

/// `m` analysis and `m` descent batches of `idx` under the configured strategy.
/// Sample `i`, draw `j` uses the seeds derived from `keys + [i, j]`.
pub struct ViewSet {
    pub analysis: Vec<ViewBatch>,
    pub descent: Vec<ViewBatch>,
}

pub fn strategy_batches(
    ds: &NoisyDataset,
    idx: &[usize],
    m: usize,
    cfg: &TrainConfig,
    input_shape: &[usize],
    keys: &[u64],
) -> Result<ViewSet> {
    let base = derive_seed(cfg.seed, keys);
    let mut analysis = Vec::with_capacity(m);
    let mut descent = Vec::with_capacity(m);
    for j in 0..m {
        let mut a_rows = Vec::with_capacity(idx.len());
        let mut d_rows = Vec::with_capacity(idx.len());
        for &i in idx {
            let seeds = ViewSeeds::derive(base, &[i as u64, j as u64]);
            let v = strategy_views(&ds.images[i], cfg.variant(), cfg.rand_augment, &ds.stats, seeds);
            a_rows.push(v.analysis);
            d_rows.push(v.descent);
        }
        analysis.push(ViewBatch::new(ViewRole::Analysis, stack(input_shape, &a_rows)?));
        descent.push(ViewBatch::new(ViewRole::Descent, stack(input_shape, &d_rows)?));
    }
    Ok(ViewSet { analysis, descent })
}

/// Analysis views only (same draws as `strategy_batches(..).analysis[j]`).
pub fn analysis_batch(
    ds: &NoisyDataset,
    idx: &[usize],
    j: usize,
    cfg: &TrainConfig,
    input_shape: &[usize],
    keys: &[u64],
) -> Result<ViewBatch> {
    let base = derive_seed(cfg.seed, keys);
    let rows: Vec<Normalized> = idx
        .iter()
        .map(|&i| {
            let seeds = ViewSeeds::derive(base, &[i as u64, j as u64]);
            analysis_view(&ds.images[i], cfg.variant(), cfg.rand_augment, &ds.stats, seeds)
        })
        .collect();
    Ok(ViewBatch::new(ViewRole::Analysis, stack(input_shape, &rows)?))
}

pub(crate) fn one_hots(labels: impl IntoIterator<Item = usize>, classes: usize) -> Vec<ProbVector> {
    labels.into_iter().map(|l| ProbVector::one_hot(l, classes)).collect()
}

/// Per-sample cross-entropy of `net` against the given labels for every training sample,
/// in index order. Plain images by default; analysis views when `cfg.fit_on_augmented`.
pub fn fit_losses(
    net: &Network,
    ds: &NoisyDataset,
    cfg: &TrainConfig,
    epoch: usize,
    audit: &mut Audit,
) -> Result<Vec<f64>> {
    let shape = net.input_shape().to_vec();
    let mut out = Vec::with_capacity(ds.len());
    let all: Vec<usize> = (0..ds.len()).collect();
    for chunk in all.chunks(cfg.batch_size.max(64)) {
        let batch = if cfg.fit_on_augmented {
            analysis_batch(ds, chunk, 0, cfg, &shape, &[tag::VIEW, tag::UNLABELED, epoch as u64])?
        } else {
            plain_batch(ds, chunk, &shape)?
        };
        let logits = audited_forward(net, &batch, Purpose::LossFit, audit)?;
        let targets = one_hots(chunk.iter().map(|&i| ds.given_labels[i]), ds.num_classes);
        out.extend(softmax_xent(&logits, &targets)?.per_sample);
    }
    Ok(out)
}

/// Per-sample plain-image losses against the given labels, for diagnostics.
pub fn plain_losses(net: &Network, ds: &NoisyDataset, audit: &mut Audit) -> Result<Vec<f64>> {
    let shape = net.input_shape().to_vec();
    let mut out = Vec::with_capacity(ds.len());
    let all: Vec<usize> = (0..ds.len()).collect();
    for chunk in all.chunks(128) {
        let batch = plain_batch(ds, chunk, &shape)?;
        let logits = audited_forward(net, &batch, Purpose::Evaluation, audit)?;
        let targets = one_hots(chunk.iter().map(|&i| ds.given_labels[i]), ds.num_classes);
        out.extend(softmax_xent(&logits, &targets)?.per_sample);
    }
    Ok(out)
}

/// Percentage of `test` samples whose true label is the argmax of the networks'
/// mean softmax on plain images.
pub fn accuracy(nets: &[Network], test: &NoisyDataset, audit: &mut Audit) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let shape = nets[0].input_shape().to_vec();
    let all: Vec<usize> = (0..test.len()).collect();
    let mut correct = 0usize;
    for chunk in all.chunks(128) {
        let batch = plain_batch(test, chunk, &shape)?;
        let mut mean: Vec<Vec<f64>> = Vec::new();
        for net in nets {
            let probs = softmax(&audited_forward(net, &batch, Purpose::Evaluation, audit)?)?;
            if mean.is_empty() {
                mean = probs.into_iter().map(ProbVector::into_inner).collect();
            } else {
                for (acc, p) in mean.iter_mut().zip(probs) {
                    acc.iter_mut().zip(p.as_slice()).for_each(|(a, v)| *a += v);
                }
            }
        }
        for (row, &i) in mean.iter().zip(chunk) {
            if crate::nn::argmax(row) == test.true_labels[i] {
                correct += 1;
            }
        }
    }
    Ok(100.0 * correct as f64 / test.len() as f64)
}
