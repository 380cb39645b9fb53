use alloc::vec::Vec;

use super::policy::{Policy, RandAugmentConfig};
use crate::data::{Image, NoisyDataset, NormStats, Normalized};
use crate::rng::{derive_seed, rng_for, tag};
use crate::Result;

/// How loss-analysis views and gradient-descent views are augmented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyVariant {
    /// No augmentation anywhere.
    Raw,
    /// Dataset doubled once with weak copies; no runtime augmentation.
    ExpansionW,
    /// Dataset doubled once with strong copies; no runtime augmentation.
    ExpansionS,
    /// One weak view per sample, used for both roles.
    RuntimeW,
    /// One strong view per sample, used for both roles.
    RuntimeS,
    AugDescWW,
    AugDescSS,
    /// Weak analysis view, strong descent view.
    AugDescWS,
}

impl StrategyVariant {
    pub const ALL: [StrategyVariant; 8] = [
        StrategyVariant::Raw,
        StrategyVariant::ExpansionW,
        StrategyVariant::ExpansionS,
        StrategyVariant::RuntimeW,
        StrategyVariant::RuntimeS,
        StrategyVariant::AugDescWW,
        StrategyVariant::AugDescSS,
        StrategyVariant::AugDescWS,
    ];

    /// `(analysis, descent)` runtime policies.
    pub fn policies(self, cfg: RandAugmentConfig) -> (Policy, Policy) {
        use StrategyVariant::*;
        let s = Policy::Strong(cfg);
        match self {
            Raw | ExpansionW | ExpansionS => (Policy::Raw, Policy::Raw),
            RuntimeW | AugDescWW => (Policy::Weak, Policy::Weak),
            RuntimeS | AugDescSS => (s, s),
            AugDescWS => (Policy::Weak, s),
        }
    }

    /// True when the analysis and descent roles consume the same view.
    pub fn shares_view(self) -> bool {
        !matches!(
            self,
            StrategyVariant::AugDescWW | StrategyVariant::AugDescSS | StrategyVariant::AugDescWS
        )
    }

    /// Policy used to build the expanded copy, for the expansion variants.
    pub fn expansion_policy(self, cfg: RandAugmentConfig) -> Option<Policy> {
        match self {
            StrategyVariant::ExpansionW => Some(Policy::Weak),
            StrategyVariant::ExpansionS => Some(Policy::Strong(cfg)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WarmupVariant {
    #[default]
    Waw,
    Saw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AugStrategy {
    pub variant: StrategyVariant,
    pub warmup: WarmupVariant,
}

impl AugStrategy {
    pub fn new(variant: StrategyVariant, warmup: WarmupVariant) -> Self {
        Self { variant, warmup }
    }
}

impl Default for AugStrategy {
    fn default() -> Self {
        Self::new(StrategyVariant::RuntimeW, WarmupVariant::Waw)
    }
}

/// Seeds for the two view streams of one sample draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewSeeds {
    pub analysis: u64,
    pub descent: u64,
}

impl ViewSeeds {
    /// Independent analysis and descent seeds keyed by `keys` (epoch, sample index, ...).
    pub fn derive(seed: u64, keys: &[u64]) -> Self {
        let base = derive_seed(seed, keys);
        Self {
            analysis: derive_seed(base, &[tag::ANALYSIS]),
            descent: derive_seed(base, &[tag::DESCENT]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyViews {
    pub analysis: Normalized,
    pub descent: Normalized,
}

/// Builds the analysis and descent views of `img`. Shared-view strategies draw their
/// single view from the analysis stream.
pub fn strategy_views(
    img: &Image,
    variant: StrategyVariant,
    cfg: RandAugmentConfig,
    stats: &NormStats,
    seeds: ViewSeeds,
) -> StrategyViews {
    let (a, d) = variant.policies(cfg);
    let analysis = a.apply(img, &mut rng_for(seeds.analysis, &[]), stats);
    let descent = if variant.shares_view() {
        analysis.clone()
    } else {
        d.apply(img, &mut rng_for(seeds.descent, &[]), stats)
    };
    StrategyViews { analysis, descent }
}

/// Analysis view only; equals `strategy_views(..).analysis`.
pub fn analysis_view(
    img: &Image,
    variant: StrategyVariant,
    cfg: RandAugmentConfig,
    stats: &NormStats,
    seeds: ViewSeeds,
) -> Normalized {
    variant.policies(cfg).0.apply(img, &mut rng_for(seeds.analysis, &[]), stats)
}

/// Descent view only; equals `strategy_views(..).descent`.
pub fn descent_view(
    img: &Image,
    variant: StrategyVariant,
    cfg: RandAugmentConfig,
    stats: &NormStats,
    seeds: ViewSeeds,
) -> Normalized {
    if variant.shares_view() {
        return analysis_view(img, variant, cfg, stats, seeds);
    }
    variant.policies(cfg).1.apply(img, &mut rng_for(seeds.descent, &[]), stats)
}

/// Original samples followed by one augmented copy of each, fixed for the run.
/// Labels are duplicated and the original normalization statistics are kept.
pub fn expand(ds: &NoisyDataset, policy: Policy, seed: u64) -> Result<NoisyDataset> {
    let n = ds.len();
    let mut images = Vec::with_capacity(2 * n);
    images.extend(ds.images.iter().cloned());
    for (i, img) in ds.images.iter().enumerate() {
        let mut rng = rng_for(seed, &[tag::EXPAND, i as u64]);
        images.push(policy.apply_image(img, &mut rng));
    }
    let dup = |v: &[usize]| v.iter().chain(v).copied().collect::<Vec<_>>();
    NoisyDataset::from_parts(
        images,
        dup(&ds.given_labels),
        dup(&ds.true_labels),
        ds.num_classes,
        ds.stats.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::policy::{strong, weak};
    use crate::data::{generate_glyphs, GlyphSpec};

    fn data(n: usize) -> NoisyDataset {
        generate_glyphs(
            &GlyphSpec {
                num_classes: 4,
                per_class: n / 4,
                ..GlyphSpec::default()
            },
            9,
        )
        .unwrap()
    }

    #[test]
    fn raw_views_are_plain() {
        let ds = data(8);
        let img = &ds.images[0];
        let v = strategy_views(img, StrategyVariant::Raw, Default::default(), &ds.stats, ViewSeeds::derive(1, &[0]));
        let plain = img.normalize(&ds.stats.mean, &ds.stats.std);
        assert_eq!(v.analysis, plain);
        assert_eq!(v.descent, plain);
    }

    #[test]
    fn runtime_views_coincide() {
        let ds = data(8);
        for variant in [StrategyVariant::RuntimeW, StrategyVariant::RuntimeS] {
            for s in 0..10 {
                let v = strategy_views(&ds.images[s % 8], variant, Default::default(), &ds.stats, ViewSeeds::derive(s as u64, &[]));
                assert_eq!(v.analysis, v.descent);
            }
        }
    }

    #[test]
    fn weak_strong_views_replay_their_pipelines() {
        let ds = data(8);
        let cfg = RandAugmentConfig::default();
        for s in 0..20u64 {
            let img = &ds.images[s as usize % 8];
            let seeds = ViewSeeds::derive(s, &[3, 4]);
            let v = strategy_views(img, StrategyVariant::AugDescWS, cfg, &ds.stats, seeds);
            assert_eq!(v.analysis, weak(img, &mut rng_for(seeds.analysis, &[]), &ds.stats));
            assert_eq!(v.descent, strong(img, &mut rng_for(seeds.descent, &[]), cfg, &ds.stats));
            assert_eq!(v.analysis, analysis_view(img, StrategyVariant::AugDescWS, cfg, &ds.stats, seeds));
            assert_eq!(v.descent, descent_view(img, StrategyVariant::AugDescWS, cfg, &ds.stats, seeds));
        }
    }

    #[test]
    fn descent_seed_moves_only_the_descent_view() {
        let ds = data(8);
        let img = &ds.images[2];
        let base = ViewSeeds::derive(5, &[]);
        let mut changed = 0;
        for k in 0..20u64 {
            let other = ViewSeeds {
                descent: derive_seed(k, &[99]),
                ..base
            };
            let a = strategy_views(img, StrategyVariant::AugDescWW, Default::default(), &ds.stats, base);
            let b = strategy_views(img, StrategyVariant::AugDescWW, Default::default(), &ds.stats, other);
            assert_eq!(a.analysis, b.analysis);
            if a.descent != b.descent {
                changed += 1;
            }
        }
        assert!(changed > 10);
    }

    #[test]
    fn expansion_doubles_and_keeps_originals() {
        let ds = data(100);
        let e = expand(&ds, Policy::Weak, 3).unwrap();
        assert_eq!(e.len(), 200);
        assert_eq!(&e.images[..100], &ds.images[..]);
        assert_eq!(&e.given_labels[..100], &ds.given_labels[..]);
        assert_eq!(&e.given_labels[100..], &ds.given_labels[..]);
        assert_eq!(e.stats, ds.stats);
        assert_eq!(e, expand(&ds, Policy::Weak, 3).unwrap());
    }
}
