use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use super::ops::{apply_op, flip_h, shift_reflect, AugOp, OpKind, MAX_MAGNITUDE, POOL};
use crate::data::{Image, NormStats, Normalized};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandAugmentConfig {
    /// Ops applied per call.
    pub n: usize,
    /// Global magnitude on the 0..=10 scale.
    pub m: f64,
}

impl RandAugmentConfig {
    pub fn new(n: usize, m: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("RandAugment N must be at least 1".into()));
        }
        if !(0.0..=MAX_MAGNITUDE).contains(&m) {
            return Err(Error::Config(format!("RandAugment M={m} outside [0, 10]")));
        }
        Ok(Self { n, m })
    }
}

impl Default for RandAugmentConfig {
    fn default() -> Self {
        Self { n: 1, m: 6.0 }
    }
}

/// Reflect-pad width used by the weak crop: 2 pixels at 16x16, 4 at 32x32.
pub fn weak_pad(img: &Image) -> i64 {
    (img.height().min(img.width()) / 8).max(1) as i64
}

/// The random part of weak augmentation: crop offset relative to centre, and flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WeakDraw {
    pub shift_x: i64,
    pub shift_y: i64,
    pub flip: bool,
}

impl WeakDraw {
    pub fn sample(rng: &mut impl Rng, pad: i64) -> Self {
        let shift_x = rng.random_range(-pad..=pad);
        let shift_y = rng.random_range(-pad..=pad);
        let flip = rng.random_bool(0.5);
        Self {
            shift_x,
            shift_y,
            flip,
        }
    }
}

/// Crop and flip without normalization.
pub fn weak_image(img: &Image, draw: WeakDraw) -> Image {
    let cropped = if draw.shift_x == 0 && draw.shift_y == 0 {
        img.clone()
    } else {
        shift_reflect(img, draw.shift_x, draw.shift_y)
    };
    if draw.flip {
        flip_h(&cropped)
    } else {
        cropped
    }
}

/// Random reflect-pad crop, horizontal flip with p = 0.5, then normalization.
pub fn weak(img: &Image, rng: &mut impl Rng, stats: &NormStats) -> Normalized {
    let draw = WeakDraw::sample(rng, weak_pad(img));
    weak_image(img, draw).normalize(&stats.mean, &stats.std)
}

/// Weak crop/flip followed by `cfg.n` ops drawn uniformly (with replacement) from `pool`
/// at magnitude `cfg.m`. Returns the unnormalized image and the ops applied.
pub fn strong_image_with_pool(
    img: &Image,
    rng: &mut impl Rng,
    cfg: RandAugmentConfig,
    pool: &[OpKind],
) -> (Image, Vec<AugOp>) {
    let draw = WeakDraw::sample(rng, weak_pad(img));
    let mut out = weak_image(img, draw);
    let mut applied = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let kind = pool[rng.random_range(0..pool.len())];
        let op = AugOp {
            kind,
            magnitude: cfg.m,
        };
        out = apply_op(&out, op, rng);
        applied.push(op);
    }
    (out, applied)
}

pub fn strong_image(img: &Image, rng: &mut impl Rng, cfg: RandAugmentConfig) -> (Image, Vec<AugOp>) {
    strong_image_with_pool(img, rng, cfg, &POOL)
}

/// Strong augmentation: weak crop/flip, RandAugment ops, normalization.
pub fn strong(img: &Image, rng: &mut impl Rng, cfg: RandAugmentConfig, stats: &NormStats) -> Normalized {
    strong_image(img, rng, cfg).0.normalize(&stats.mean, &stats.std)
}

/// A runtime augmentation policy. Descriptor strings: `raw`, `weak`, `strong`,
/// `strong:N=<n>,M=<m>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Raw,
    Weak,
    Strong(RandAugmentConfig),
}

impl Policy {
    /// Augmented image before normalization.
    pub fn apply_image(&self, img: &Image, rng: &mut impl Rng) -> Image {
        match self {
            Policy::Raw => img.clone(),
            Policy::Weak => weak_image(img, WeakDraw::sample(rng, weak_pad(img))),
            Policy::Strong(cfg) => strong_image(img, rng, *cfg).0,
        }
    }

    pub fn apply(&self, img: &Image, rng: &mut impl Rng, stats: &NormStats) -> Normalized {
        self.apply_image(img, rng).normalize(&stats.mean, &stats.std)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Raw => f.write_str("raw"),
            Policy::Weak => f.write_str("weak"),
            Policy::Strong(c) => write!(f, "strong:N={},M={}", c.n, c.m),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "raw" => return Ok(Policy::Raw),
            "weak" => return Ok(Policy::Weak),
            "strong" => return Ok(Policy::Strong(RandAugmentConfig::default())),
            _ => {}
        }
        let params = s
            .strip_prefix("strong:")
            .ok_or_else(|| Error::Config(format!("unknown policy descriptor {s:?}")))?;
        let mut cfg = RandAugmentConfig::default();
        for kv in params.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed policy parameter {kv:?}")))?;
            let bad = || Error::Config(format!("bad value in policy parameter {kv:?}"));
            match k.trim() {
                "N" | "n" => cfg.n = v.trim().parse().map_err(|_| bad())?,
                "M" | "m" => cfg.m = v.trim().parse().map_err(|_| bad())?,
                other => {
                    return Err(Error::Config(format!(
                        "unknown policy parameter {:?}",
                        String::from(other)
                    )))
                }
            }
        }
        RandAugmentConfig::new(cfg.n, cfg.m).map(Policy::Strong)
    }
}
