//! Tiny glyph datasets and contexts for fast end-to-end strategy runs.

use nlab_core::augment::{AugStrategy, RandAugmentConfig, StrategyVariant, WarmupVariant};
use nlab_core::data::{generate_glyphs, inject_symmetric, GlyphSpec, NoisyDataset};
use nlab_core::nn::{LrSchedule, Network};
use nlab_core::strategies::{TrainConfig, TrainContext};

pub const CLASSES: usize = 4;

pub fn glyphs(per_class: usize, noise: f64, seed: u64) -> NoisyDataset {
    let spec = GlyphSpec {
        num_classes: CLASSES,
        per_class,
        ..GlyphSpec::default()
    };
    let clean = generate_glyphs(&spec, seed).unwrap();
    inject_symmetric(&clean, noise, seed).unwrap()
}

pub fn config(variant: StrategyVariant, warmup: WarmupVariant, seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        schedule: LrSchedule::new(0.02, 40),
        warmup_epochs: 1,
        epochs: 3,
        rand_augment: RandAugmentConfig::default(),
        strategy: AugStrategy::new(variant, warmup),
        seed,
        ..TrainConfig::default()
    }
}

pub fn context(ds: &NoisyDataset, cfg: &TrainConfig, count: usize) -> TrainContext {
    let [c, h, w] = ds.sample_shape();
    TrainContext::new(count, cfg, |rng| Network::conv_arch(c, h, w, 4, 16, ds.num_classes, rng)).unwrap()
}
