//! Images, synthetic glyph datasets, label-noise injection and batching.

mod batch;
mod dataset;
mod glyphs;
pub mod idx;
mod image;

pub use batch::batches;
pub use dataset::{
    inject_asymmetric, inject_symmetric, inject_symmetric_with, rotate_classes, NoisyDataset, NormStats, SymmetricMode,
};
pub use glyphs::{generate_glyphs, GlyphSpec, GLYPH_TEMPLATES};
pub use image::{Image, Normalized};
