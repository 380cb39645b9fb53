//! Augmentation ops, weak and strong policies, and the analysis/descent view strategies.

mod ops;
mod policy;
mod strategy;

pub use ops::{
    apply_op, autocontrast, brightness, contrast, equalize, flip_h, posterize, rotate, sharpness,
    shear, shift_reflect, solarize, translate, AugOp, OpKind, MAGNITUDE_POOL, MAX_MAGNITUDE, POOL,
};
pub use policy::{
    strong, strong_image, strong_image_with_pool, weak, weak_image, weak_pad, Policy,
    RandAugmentConfig, WeakDraw,
};
pub use strategy::{
    analysis_view, descent_view, expand, strategy_views, AugStrategy, StrategyVariant,
    StrategyViews, ViewSeeds, WarmupVariant,
};
