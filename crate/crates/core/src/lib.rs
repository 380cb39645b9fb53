//! Allocation-only core of the noisy-label augmentation lab.
//!
//! Everything here is a pure function of its inputs and explicit seeds: a small
//! feed-forward trainer with analytic gradients, synthetic glyph data and label-noise
//! injection, the weak/strong augmentation pools, two-component mixture models over
//! per-sample losses, and the training procedures built on top of them
//! (cross-entropy, warm-up, DivideMix, Co-teaching+ and M-DYR-H, each with
//! augmented-descent variants).
//!
//! File formats, configuration and the command-line harness live in the `nlab` crate.
#![no_std]

extern crate alloc;

pub mod augment;
pub mod data;
mod error;
pub mod lossmodel;
pub mod nn;
pub mod rng;
pub mod strategies;

pub use error::{Error, Result};
