//! Training procedures: warm-up, cross-entropy baseline, DivideMix, Co-teaching+ and
//! M-DYR-H, each driven by an augmentation strategy that separates analysis views
//! from descent views.

mod audit;
mod context;
mod coteaching;
mod dividemix;
mod labels;
mod mdyrh;
mod name;
mod warmup;

pub use audit::{allowed, audited_forward, audited_trace, Audit, Purpose, ViewBatch, ViewRole};
pub use context::{
    accuracy, analysis_batch, fit_losses, plain_batch, plain_losses, policy_batch, strategy_batches,
    EpochStats, TrainConfig, TrainContext, ViewSet,
};
pub use coteaching::{coteaching_plus_epoch, r_schedule, select_small_loss, CoTeachPlusConfig};
pub use dividemix::{
    co_clean_probabilities, dividemix_epoch, mixmatch_mix, mixmatch_objective, DivideMixConfig,
    MixMatchTerms,
};
pub use labels::{average_probs, co_guess, mix_probs, mix_rows, refine_label, sharpen};
pub use mdyrh::{bmm_noise_weights, mdyrh_epoch, mdyrh_objective, MdyrhConfig, MdyrhTargets, MdyrhTerms};
pub use name::{Algorithm, StrategySpec};
pub use warmup::{base_policy, ce_baseline_epoch, warmup, warmup_epoch, WarmupOptions};
