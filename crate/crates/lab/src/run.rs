//! Run orchestration: data, noise, strategy dispatch and per-epoch metrics.

use std::time::Instant;

use nlab_core::augment::expand;
use nlab_core::data::{
    generate_glyphs, inject_asymmetric, inject_symmetric_with, rotate_classes, GlyphSpec, NoisyDataset,
};
use nlab_core::lossmodel::{loss_histogram, normalize, separation_auc, HistogramBin};
use nlab_core::nn::Network;
use nlab_core::rng::{derive_seed, tag};
use nlab_core::strategies::{
    accuracy, ce_baseline_epoch, coteaching_plus_epoch, dividemix_epoch, mdyrh_epoch, plain_losses, warmup_epoch,
    Algorithm, Audit, EpochStats, TrainConfig, TrainContext, WarmupOptions,
};

use crate::config::{DataSource, ExperimentConfig, NoiseKind};
use crate::error::LabResult;
use crate::files::load_idx;

/// Number of final epochs averaged into the "last" accuracy.
pub const LAST_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub test_acc: f64,
    pub train_loss: f64,
    /// Clean/noisy separation of the plain-image training losses; NaN when one side is empty.
    pub auc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best: f64,
    pub last: f64,
    pub wall_time_s: f64,
    pub histograms: Vec<(usize, Vec<HistogramBin>)>,
    pub audit: Audit,
    pub nets: Vec<Network>,
    /// Size of the training set after any expansion.
    pub train_size: usize,
    pub noise_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub best_mean: f64,
    pub best_std: Option<f64>,
    pub last_mean: f64,
    pub last_std: Option<f64>,
}

/// Mean and sample standard deviation (`None` below two values).
pub fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

pub fn aggregate(results: &[RunResult]) -> Aggregate {
    let (best_mean, best_std) = mean_std(&results.iter().map(|r| r.best).collect::<Vec<_>>());
    let (last_mean, last_std) = mean_std(&results.iter().map(|r| r.last).collect::<Vec<_>>());
    Aggregate {
        best_mean,
        best_std,
        last_mean,
        last_std,
    }
}

/// Maximum over the per-epoch accuracies.
pub fn best_of(acc: &[f64]) -> f64 {
    acc.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Mean of the final `LAST_WINDOW` accuracies (all of them if fewer).
pub fn last_of(acc: &[f64]) -> f64 {
    let tail = &acc[acc.len().saturating_sub(LAST_WINDOW)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Clean train and test sets for `seed`; the test set carries the training statistics.
pub fn build_data(cfg: &ExperimentConfig, seed: u64) -> LabResult<(NoisyDataset, NoisyDataset)> {
    let data_seed = cfg.data.seed.unwrap_or(seed);
    let (train, test) = match &cfg.data.source {
        DataSource::Glyphs => {
            let train = generate_glyphs(&cfg.data.glyphs, data_seed)?;
            let test_spec = GlyphSpec {
                per_class: cfg.data.test_per_class,
                ..cfg.data.glyphs.clone()
            };
            let test = generate_glyphs(&test_spec, derive_seed(data_seed, &[tag::TEST]))?;
            (train, test)
        }
        DataSource::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => {
            let train = load_idx(train_images, train_labels, cfg.data.classes)?;
            let test = load_idx(test_images, test_labels, Some(train.num_classes))?;
            (train, test)
        }
    };
    let test = NoisyDataset::from_parts(
        test.images,
        test.given_labels,
        test.true_labels,
        test.num_classes,
        train.stats.clone(),
    )?;
    Ok((train, test))
}

pub fn inject_noise(cfg: &ExperimentConfig, clean: &NoisyDataset, seed: u64) -> LabResult<NoisyDataset> {
    let noise_seed = cfg.noise.seed.unwrap_or(seed);
    Ok(match cfg.noise.kind {
        NoiseKind::Symmetric => inject_symmetric_with(clean, cfg.noise.rate, cfg.noise.mode, noise_seed)?,
        NoiseKind::Asymmetric => {
            inject_asymmetric(clean, cfg.noise.rate, &rotate_classes(clean.num_classes), noise_seed)?
        }
    })
}

/// Noisy training set (expanded for expansion variants) and test set for `seed`.
pub fn prepare(cfg: &ExperimentConfig, seed: u64) -> LabResult<(NoisyDataset, NoisyDataset)> {
    let (clean, test) = build_data(cfg, seed)?;
    let mut train = inject_noise(cfg, &clean, seed)?;
    if let Some(policy) = cfg.strategy.strategy.variant.expansion_policy(cfg.augment) {
        train = expand(&train, policy, seed)?;
    }
    Ok((train, test))
}

pub fn new_context(cfg: &ExperimentConfig, tc: &TrainConfig, ds: &NoisyDataset, count: usize) -> LabResult<TrainContext> {
    let [c, h, w] = ds.sample_shape();
    let classes = ds.num_classes;
    Ok(TrainContext::new(count, tc, |rng| {
        Network::conv_arch(c, h, w, cfg.train.filters, cfg.train.hidden, classes, rng)
    })?)
}

/// Mean over networks of each sample's plain-image loss against its given label.
pub fn mean_plain_losses(ctx: &mut TrainContext, ds: &NoisyDataset) -> LabResult<Vec<f64>> {
    let mut sum = vec![0.0; ds.len()];
    for k in 0..ctx.nets.len() {
        let losses = plain_losses(&ctx.nets[k], ds, &mut ctx.audit)?;
        sum.iter_mut().zip(losses).for_each(|(s, l)| *s += l);
    }
    let k = ctx.nets.len() as f64;
    Ok(sum.into_iter().map(|s| s / k).collect())
}

fn auc_or_nan(losses: &[f64], flip_mask: &[bool]) -> f64 {
    separation_auc(losses, flip_mask).unwrap_or(f64::NAN)
}

pub fn histogram(losses: &[f64], flip_mask: &[bool], bins: usize) -> LabResult<Vec<HistogramBin>> {
    Ok(loss_histogram(&normalize(losses)?, flip_mask, bins)?)
}

fn warmup_options(cfg: &ExperimentConfig, dm_penalty: bool, p_strong: Option<f64>) -> WarmupOptions {
    WarmupOptions {
        penalty: cfg.strategy.algorithm == Algorithm::DivideMix && dm_penalty,
        p_strong,
    }
}

/// One training epoch of the configured procedure at `ctx.epoch`.
pub fn train_epoch(
    cfg: &ExperimentConfig,
    tc: &TrainConfig,
    ctx: &mut TrainContext,
    ds: &NoisyDataset,
) -> LabResult<EpochStats> {
    let dm = cfg.dividemix.resolve(cfg.noise.rate);
    let alg = cfg.strategy.algorithm;
    if alg.has_warmup() && ctx.epoch < tc.warmup_epochs {
        return Ok(warmup_epoch(ctx, ds, tc, warmup_options(cfg, dm.warmup_penalty, None))?);
    }
    Ok(match alg {
        Algorithm::CrossEntropy => ce_baseline_epoch(ctx, ds, tc, tc.policies().1)?,
        Algorithm::DivideMix => dividemix_epoch(ctx, ds, tc, &dm)?,
        Algorithm::CoTeachingPlus => coteaching_plus_epoch(ctx, ds, tc, &cfg.coteaching)?,
        Algorithm::Mdyrh => mdyrh_epoch(ctx, ds, tc, &cfg.mdyrh)?,
    })
}

/// Full training run for one seed.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> LabResult<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let tc = cfg.train_config(seed);
    let (train, test) = prepare(cfg, seed)?;
    let mut ctx = new_context(cfg, &tc, &train, cfg.strategy.algorithm.network_count())?;
    let mut epochs = Vec::with_capacity(tc.epochs);
    let mut histograms = Vec::new();
    for e in 0..tc.epochs {
        let stats = train_epoch(cfg, &tc, &mut ctx, &train)?;
        let test_acc = accuracy(&ctx.nets, &test, &mut ctx.audit)?;
        let losses = mean_plain_losses(&mut ctx, &train)?;
        if cfg.output.histogram_epochs.contains(&e) {
            histograms.push((e, histogram(&losses, &train.flip_mask, cfg.output.histogram_bins)?));
        }
        epochs.push(EpochRecord {
            epoch: e,
            test_acc,
            train_loss: stats.loss,
            auc: auc_or_nan(&losses, &train.flip_mask),
            lr: tc.schedule.lr_at(e),
        });
    }
    let acc: Vec<f64> = epochs.iter().map(|r| r.test_acc).collect();
    Ok(RunResult {
        seed,
        best: best_of(&acc),
        last: last_of(&acc),
        epochs,
        wall_time_s: start.elapsed().as_secs_f64(),
        histograms,
        audit: ctx.audit,
        nets: ctx.nets,
        train_size: train.len(),
        noise_fraction: train.noise_fraction(),
    })
}

/// Worker cap: `NLAB_THREADS` if set to a positive integer, otherwise the available
/// parallelism.
pub fn thread_cap() -> usize {
    std::env::var("NLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Applies `job` to every item on at most `thread_cap()` worker threads; results keep
/// the input order.
pub fn parallel_map<T, R, F>(items: &[T], job: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = thread_cap().min(items.len()).max(1);
    if workers == 1 {
        return items.iter().map(&job).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let done = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = job(&items[i]);
                done.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every item processed")).collect()
}

/// Every configured seed, in seed order.
pub fn run(cfg: &ExperimentConfig) -> LabResult<Vec<RunResult>> {
    cfg.validate()?;
    parallel_map(&cfg.seeds, |&s| run_seed(cfg, s)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_and_best_conventions() {
        let acc = [10.0, 50.0, 40.0, 30.0, 20.0, 10.0, 0.0];
        assert_eq!(best_of(&acc), 50.0);
        assert_eq!(last_of(&acc), 20.0);
        assert_eq!(last_of(&[30.0, 40.0]), 35.0);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, Some(1.0));
        assert_eq!(mean_std(&[4.0]), (4.0, None));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let xs: Vec<u64> = (0..17).collect();
        assert_eq!(parallel_map(&xs, |x| x * 2), xs.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn test_set_uses_train_statistics() {
        let mut cfg = ExperimentConfig::default();
        cfg.data.glyphs.per_class = 5;
        cfg.data.test_per_class = 3;
        let (train, test) = build_data(&cfg, 4).unwrap();
        assert_eq!(test.stats, train.stats);
        assert_eq!(test.len(), 12);
        assert_ne!(train.images[0], test.images[0]);
    }
}
