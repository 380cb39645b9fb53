//! Procedural shape classes, rendered with random rotation, scale, translation and
//! pixel noise. A desk-sized stand-in for a natural-image benchmark.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Image, NoisyDataset};
use crate::rng::{rng_for, tag};
use crate::{Error, Result};

pub const GLYPH_TEMPLATES: usize = 16;

const STROKE: f64 = 0.18;
const BACKGROUND: f64 = 0.1;
const FOREGROUND: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSpec {
    pub num_classes: usize,
    pub per_class: usize,
    pub size: usize,
    /// Rotation drawn from `[-rotation_deg, rotation_deg]`.
    pub rotation_deg: f64,
    /// Translation in pixels, per axis, from `[-translation_px, translation_px]`.
    pub translation_px: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Standard deviation of additive Gaussian pixel noise.
    pub pixel_noise: f64,
}

impl Default for GlyphSpec {
    fn default() -> Self {
        Self {
            num_classes: 4,
            per_class: 200,
            size: 16,
            rotation_deg: 20.0,
            translation_px: 2.0,
            scale_min: 0.9,
            scale_max: 1.1,
            pixel_noise: 0.05,
        }
    }
}

impl GlyphSpec {
    pub fn without_jitter(mut self) -> Self {
        self.rotation_deg = 0.0;
        self.translation_px = 0.0;
        self.scale_min = 1.0;
        self.scale_max = 1.0;
        self.pixel_noise = 0.0;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.num_classes < 2 || self.num_classes > GLYPH_TEMPLATES {
            return Err(Error::Config(format!(
                "{} classes requested, glyph templates support 2..={GLYPH_TEMPLATES}",
                self.num_classes
            )));
        }
        if self.size < 16 {
            return Err(Error::Config(format!("glyph size {} below 16", self.size)));
        }
        if self.per_class == 0 {
            return Err(Error::Config("zero samples per class".into()));
        }
        let ok = self.rotation_deg >= 0.0
            && self.translation_px >= 0.0
            && self.scale_min > 0.0
            && self.scale_min <= self.scale_max
            && self.pixel_noise >= 0.0
            && [self.rotation_deg, self.translation_px, self.scale_max, self.pixel_noise]
                .iter()
                .all(|v| v.is_finite());
        if !ok {
            return Err(Error::Config(format!("invalid jitter ranges in {self:?}")));
        }
        Ok(())
    }
}

/// Indicator of glyph `class` at canonical coordinates `(u, v)` in `[-1, 1]^2`,
/// `v` pointing down.
fn template(class: usize, u: f64, v: f64) -> bool {
    let (au, av) = (u.abs(), v.abs());
    let r = libm::sqrt(u * u + v * v);
    let s = STROKE;
    let dot = |cu: f64, cv: f64, rad: f64| (u - cu) * (u - cu) + (v - cv) * (v - cv) < rad * rad;
    match class {
        0 => av < s && au < 0.75,
        1 => au < s && av < 0.75,
        2 => (av < s && au < 0.75) || (au < s && av < 0.75),
        3 => (r - 0.55).abs() < s * 0.8,
        4 => ((u - v).abs() < s * 1.2 || (u + v).abs() < s * 1.2) && au < 0.7 && av < 0.7,
        5 => r < 0.55,
        6 => {
            let m = au.max(av);
            m > 0.5 && m < 0.75
        }
        7 => {
            if au >= 0.8 || av >= 0.8 {
                return false;
            }
            let cu = libm::floor((u + 0.8) / 0.4) as i64;
            let cv = libm::floor((v + 0.8) / 0.4) as i64;
            (cu + cv) % 2 == 0
        }
        8 => v > -0.7 && v < 0.6 && au <= 0.75 * (v + 0.7) / 1.3,
        9 => au < 0.75 && [-0.5, 0.0, 0.5].iter().any(|c| (v - c).abs() < s * 0.7),
        10 => av < 0.75 && [-0.5, 0.0, 0.5].iter().any(|c| (u - c).abs() < s * 0.7),
        11 => (au + av - 0.6).abs() < s * 0.8,
        12 => dot(-0.45, 0.0, 0.25) || dot(0.45, 0.0, 0.25),
        13 => ((u + 0.5).abs() < s || (u - 0.5).abs() < s) && av < 0.7 || (av < s && au < 0.5),
        14 => ((v + 0.55).abs() < s && au < 0.7) || (au < s && v > -0.55 && v < 0.7),
        15 => [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)]
            .iter()
            .any(|&(cu, cv)| dot(cu, cv, 0.22)),
        _ => false,
    }
}

fn render(class: usize, spec: &GlyphSpec, rng: &mut impl Rng) -> Image {
    let n = spec.size;
    let theta = rng.random_range(-spec.rotation_deg..=spec.rotation_deg).to_radians();
    let scale = rng.random_range(spec.scale_min..=spec.scale_max);
    let tx = rng.random_range(-spec.translation_px..=spec.translation_px);
    let ty = rng.random_range(-spec.translation_px..=spec.translation_px);
    let (sin, cos) = (libm::sin(-theta), libm::cos(-theta));
    let half = n as f64 / 2.0;
    let mut pixels = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let mut hits = 0;
            for (oy, ox) in [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)] {
                let px = (x as f64 + ox - half - tx) / half;
                let py = (y as f64 + oy - half - ty) / half;
                let u = (cos * px - sin * py) / scale;
                let v = (sin * px + cos * py) / scale;
                if template(class, u, v) {
                    hits += 1;
                }
            }
            pixels.push(BACKGROUND + (FOREGROUND - BACKGROUND) * hits as f64 / 4.0);
        }
    }
    if spec.pixel_noise > 0.0 {
        let noise = Normal::new(0.0, spec.pixel_noise).expect("validated noise level");
        for p in &mut pixels {
            *p += noise.sample(rng);
        }
    }
    Image::from_clamped(1, n, n, pixels)
}

/// Renders `num_classes * per_class` clean samples; sample `i` has class `i % num_classes`.
pub fn generate_glyphs(spec: &GlyphSpec, seed: u64) -> Result<NoisyDataset> {
    spec.validate()?;
    let total = spec.num_classes * spec.per_class;
    let mut images = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let class = i % spec.num_classes;
        let mut rng = rng_for(seed, &[tag::GLYPH, i as u64]);
        images.push(render(class, spec, &mut rng));
        labels.push(class);
    }
    NoisyDataset::clean(images, labels, spec.num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GlyphSpec {
        GlyphSpec {
            num_classes: 4,
            per_class: 10,
            ..GlyphSpec::default()
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_glyphs(&small(), 1).unwrap();
        let b = generate_glyphs(&small(), 1).unwrap();
        assert_eq!(a, b);
        let c = generate_glyphs(&small(), 2).unwrap();
        assert_ne!(a.images, c.images);
    }

    #[test]
    fn zero_jitter_gives_identical_class_members() {
        let d = generate_glyphs(&small().without_jitter(), 9).unwrap();
        for i in 0..d.len() {
            assert_eq!(d.images[i], d.images[i % 4]);
        }
        // distinct classes still differ
        for a in 0..4 {
            for b in a + 1..4 {
                assert_ne!(d.images[a], d.images[b]);
            }
        }
    }

    #[test]
    fn all_templates_are_distinct_and_non_empty() {
        let spec = GlyphSpec {
            num_classes: 16,
            per_class: 1,
            ..GlyphSpec::default()
        }
        .without_jitter();
        let d = generate_glyphs(&spec, 0).unwrap();
        for (i, img) in d.images.iter().enumerate() {
            let ink = img.pixels().iter().filter(|&&p| p > 0.5).count();
            assert!(ink > 10, "class {i} nearly empty");
            for other in &d.images[i + 1..] {
                assert_ne!(img, other);
            }
        }
    }

    #[test]
    fn balanced_and_in_range() {
        let d = generate_glyphs(&small(), 3).unwrap();
        for c in 0..4 {
            assert_eq!(d.true_labels.iter().filter(|&&l| l == c).count(), 10);
        }
        assert!(d.flip_mask.iter().all(|&f| !f));
        assert!(d.images.iter().all(|im| im.pixels().iter().all(|p| (0.0..=1.0).contains(p))));
    }

    #[test]
    fn too_many_classes_is_a_config_error() {
        let spec = GlyphSpec {
            num_classes: 17,
            ..small()
        };
        assert!(matches!(generate_glyphs(&spec, 0), Err(Error::Config(_))));
    }
}
