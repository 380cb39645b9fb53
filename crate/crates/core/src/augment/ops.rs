use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::Image;
use crate::{Error, Result};

pub const MAX_MAGNITUDE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Identity,
    FlipH,
    CropPad,
    Rotate,
    ShearX,
    ShearY,
    TranslateX,
    TranslateY,
    Invert,
    Solarize,
    Posterize,
    Contrast,
    Brightness,
    Sharpness,
    AutoContrast,
    Equalize,
}

/// The RandAugment-style pool strong augmentation draws from.
pub const POOL: [OpKind; 16] = [
    OpKind::Identity,
    OpKind::FlipH,
    OpKind::CropPad,
    OpKind::Rotate,
    OpKind::ShearX,
    OpKind::ShearY,
    OpKind::TranslateX,
    OpKind::TranslateY,
    OpKind::Invert,
    OpKind::Solarize,
    OpKind::Posterize,
    OpKind::Contrast,
    OpKind::Brightness,
    OpKind::Sharpness,
    OpKind::AutoContrast,
    OpKind::Equalize,
];

/// Pool ops that reduce to the identity at magnitude zero.
pub const MAGNITUDE_POOL: [OpKind; 10] = [
    OpKind::Identity,
    OpKind::CropPad,
    OpKind::Rotate,
    OpKind::ShearX,
    OpKind::ShearY,
    OpKind::TranslateX,
    OpKind::TranslateY,
    OpKind::Solarize,
    OpKind::Contrast,
    OpKind::Brightness,
];

impl OpKind {
    pub fn index(self) -> usize {
        POOL.iter().position(|&k| k == self).expect("every kind is in the pool")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugOp {
    pub kind: OpKind,
    /// On the 0..=10 RandAugment scale.
    pub magnitude: f64,
}

impl AugOp {
    pub fn new(kind: OpKind, magnitude: f64) -> Result<Self> {
        if !(0.0..=MAX_MAGNITUDE).contains(&magnitude) {
            return Err(Error::Config(format!(
                "magnitude {magnitude} outside [0, {MAX_MAGNITUDE}]"
            )));
        }
        Ok(Self { kind, magnitude })
    }

    fn level(&self) -> f64 {
        self.magnitude / MAX_MAGNITUDE
    }
}

/// Applies one op. Signed ops draw their sign from `rng`; `CropPad` draws its offsets.
pub fn apply_op(img: &Image, op: AugOp, rng: &mut impl Rng) -> Image {
    let level = op.level();
    let size = img.height().min(img.width()) as f64;
    match op.kind {
        OpKind::Identity => img.clone(),
        OpKind::FlipH => flip_h(img),
        OpKind::CropPad => {
            let pad = libm::round(level * size / 8.0) as i64;
            let dx = rng.random_range(-pad..=pad);
            let dy = rng.random_range(-pad..=pad);
            shift_reflect(img, dx, dy)
        }
        OpKind::Rotate => rotate(img, signed(rng, level * 30.0).to_radians()),
        OpKind::ShearX => shear(img, signed(rng, level * 0.3), true),
        OpKind::ShearY => shear(img, signed(rng, level * 0.3), false),
        OpKind::TranslateX => translate(img, libm::round(signed(rng, level * size / 3.0)) as i64, 0),
        OpKind::TranslateY => translate(img, 0, libm::round(signed(rng, level * size / 3.0)) as i64),
        OpKind::Invert => img.with_pixels(img.pixels().iter().map(|v| 1.0 - v).collect()),
        OpKind::Solarize => solarize(img, 1.0 - level),
        OpKind::Posterize => posterize(img, 8 - libm::floor(level * 4.0) as u32),
        OpKind::Contrast => contrast(img, 1.0 + signed(rng, level * 0.9)),
        OpKind::Brightness => brightness(img, 1.0 + signed(rng, level * 0.9)),
        OpKind::Sharpness => sharpness(img, 1.0 + signed(rng, level * 0.9)),
        OpKind::AutoContrast => autocontrast(img),
        OpKind::Equalize => equalize(img),
    }
}

fn signed(rng: &mut impl Rng, v: f64) -> f64 {
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

/// 8-bit bin of a `[0, 1]` value.
#[inline]
pub(crate) fn bin(v: f64) -> usize {
    (libm::floor(v * 256.0) as i64).clamp(0, 255) as usize
}

pub fn flip_h(img: &Image) -> Image {
    let w = img.width();
    img.map_coords(|c, y, x| img.get(c, y, w - 1 - x))
}

fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

fn clamp_index(i: i64, n: usize) -> usize {
    i.clamp(0, n as i64 - 1) as usize
}

/// Output pixel `(y, x)` reads input `(y + dy, x + dx)`, reflecting at the borders.
/// Equivalent to reflect-padding then cropping at offset `(pad + dy, pad + dx)`.
pub fn shift_reflect(img: &Image, dx: i64, dy: i64) -> Image {
    let (h, w) = (img.height(), img.width());
    img.map_coords(|c, y, x| {
        img.get(c, reflect(y as i64 + dy, h), reflect(x as i64 + dx, w))
    })
}

/// Integer translation with edge padding.
pub fn translate(img: &Image, dx: i64, dy: i64) -> Image {
    let (h, w) = (img.height(), img.width());
    img.map_coords(|c, y, x| {
        img.get(c, clamp_index(y as i64 - dy, h), clamp_index(x as i64 - dx, w))
    })
}

/// Nearest-neighbour inverse mapping with edge padding. `map(x, y)` gives source coords.
fn resample(img: &Image, map: impl Fn(f64, f64) -> (f64, f64)) -> Image {
    let (h, w) = (img.height(), img.width());
    img.map_coords(|c, y, x| {
        let (sx, sy) = map(x as f64, y as f64);
        let sx = clamp_index(libm::round(sx) as i64, w);
        let sy = clamp_index(libm::round(sy) as i64, h);
        img.get(c, sy, sx)
    })
}

pub fn rotate(img: &Image, radians: f64) -> Image {
    if radians == 0.0 {
        return img.clone();
    }
    let cx = (img.width() as f64 - 1.0) / 2.0;
    let cy = (img.height() as f64 - 1.0) / 2.0;
    let (s, c) = (libm::sin(radians), libm::cos(radians));
    resample(img, |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        (c * dx + s * dy + cx, -s * dx + c * dy + cy)
    })
}

pub fn shear(img: &Image, factor: f64, horizontal: bool) -> Image {
    if factor == 0.0 {
        return img.clone();
    }
    let cx = (img.width() as f64 - 1.0) / 2.0;
    let cy = (img.height() as f64 - 1.0) / 2.0;
    resample(img, |x, y| {
        if horizontal {
            (x + factor * (y - cy), y)
        } else {
            (x, y + factor * (x - cx))
        }
    })
}

/// Inverts pixels whose 8-bit bin is at or above `threshold * 256`; `1.0` is the identity
/// and `0.0` inverts everything.
pub fn solarize(img: &Image, threshold: f64) -> Image {
    let cut = libm::floor(threshold * 256.0) as i64;
    img.with_pixels(
        img.pixels()
            .iter()
            .map(|&v| if bin(v) as i64 >= cut { 1.0 - v } else { v })
            .collect(),
    )
}

/// Keeps the top `bits` bits of the 8-bit value.
pub fn posterize(img: &Image, bits: u32) -> Image {
    let bits = bits.clamp(1, 8);
    let mask: u32 = (0xffu32 << (8 - bits)) & 0xff;
    img.with_pixels(
        img.pixels()
            .iter()
            .map(|&v| ((libm::round(v * 255.0) as u32 & mask) as f64) / 255.0)
            .collect(),
    )
}

pub fn contrast(img: &Image, factor: f64) -> Image {
    if factor == 1.0 {
        return img.clone();
    }
    let mean = img.pixels().iter().sum::<f64>() / img.pixels().len() as f64;
    img.with_pixels(img.pixels().iter().map(|v| mean + factor * (v - mean)).collect())
}

pub fn brightness(img: &Image, factor: f64) -> Image {
    img.with_pixels(img.pixels().iter().map(|v| v * factor).collect())
}

/// Blends with a 3x3 smoothed copy (centre weight 5, neighbours 1); borders are kept.
pub fn sharpness(img: &Image, factor: f64) -> Image {
    if factor == 1.0 {
        return img.clone();
    }
    let (h, w) = (img.height(), img.width());
    img.map_coords(|c, y, x| {
        let v = img.get(c, y, x);
        if y == 0 || x == 0 || y + 1 == h || x + 1 == w {
            return v;
        }
        let mut acc = 4.0 * v;
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                acc += img.get(c, yy, xx);
            }
        }
        let smooth = acc / 13.0;
        smooth + factor * (v - smooth)
    })
}

fn histogram(plane: &[f64]) -> [usize; 256] {
    let mut h = [0usize; 256];
    for &v in plane {
        h[bin(v)] += 1;
    }
    h
}

/// Per channel, stretches the occupied 8-bit range to `[0, 1]`.
pub fn autocontrast(img: &Image) -> Image {
    let n = img.height() * img.width();
    let mut out = Vec::with_capacity(img.pixels().len());
    for c in 0..img.channels() {
        let plane = img.plane(c);
        let h = histogram(plane);
        let lo = h.iter().position(|&k| k > 0).unwrap_or(0);
        let hi = h.iter().rposition(|&k| k > 0).unwrap_or(255);
        if hi <= lo {
            out.extend_from_slice(plane);
            continue;
        }
        let (lo, hi) = (lo as f64 / 255.0, hi as f64 / 255.0);
        out.extend(plane.iter().map(|v| (v - lo) / (hi - lo)));
        debug_assert_eq!(out.len(), (c + 1) * n);
    }
    img.with_pixels(out)
}

/// Per-channel histogram equalization over 256 bins: each bin maps to its
/// cumulative share above the lowest occupied bin.
pub fn equalize(img: &Image) -> Image {
    let mut out = Vec::with_capacity(img.pixels().len());
    for c in 0..img.channels() {
        let plane = img.plane(c);
        let h = histogram(plane);
        let first = h.iter().position(|&k| k > 0).map_or(0, |i| h[i]);
        let denom = plane.len() - first;
        if denom == 0 {
            out.extend_from_slice(plane);
            continue;
        }
        let mut lut = [0.0f64; 256];
        let mut cdf = 0usize;
        for (i, slot) in lut.iter_mut().enumerate() {
            cdf += h[i];
            *slot = libm::round(cdf.saturating_sub(first) as f64 * 255.0 / denom as f64) / 255.0;
        }
        out.extend(plane.iter().map(|&v| lut[bin(v)]));
    }
    img.with_pixels(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use alloc::vec;

    fn ramp() -> Image {
        Image::new(1, 8, 8, (0..64).map(|i| i as f64 / 63.0).collect()).unwrap()
    }

    #[test]
    fn identity_and_invert() {
        let img = ramp();
        let mut rng = rng_for(0, &[]);
        assert_eq!(apply_op(&img, AugOp::new(OpKind::Identity, 7.0).unwrap(), &mut rng), img);
        let p = Image::filled(1, 8, 8, 0.2);
        let inv = apply_op(&p, AugOp::new(OpKind::Invert, 0.0).unwrap(), &mut rng);
        assert!(inv.pixels().iter().all(|&v| (v - 0.8).abs() < 1e-15));
    }

    #[test]
    fn flip_is_an_involution() {
        let img = ramp();
        assert_ne!(flip_h(&img), img);
        assert_eq!(flip_h(&flip_h(&img)), img);
    }

    #[test]
    fn solarize_endpoints() {
        let img = ramp();
        assert_eq!(solarize(&img, 1.0), img);
        let mut rng = rng_for(0, &[]);
        assert_eq!(
            solarize(&img, 0.0),
            apply_op(&img, AugOp::new(OpKind::Invert, 0.0).unwrap(), &mut rng)
        );
    }

    #[test]
    fn posterize_limits_levels() {
        let img = Image::new(1, 16, 16, (0..256).map(|i| i as f64 / 255.0).collect()).unwrap();
        for bits in 1..=8u32 {
            let out = posterize(&img, bits);
            let mut levels: Vec<u64> = out.pixels().iter().map(|v| v.to_bits()).collect();
            levels.sort_unstable();
            levels.dedup();
            assert!(levels.len() <= 1 << bits);
        }
    }

    #[test]
    fn equalize_spreads_a_narrow_histogram() {
        let img = Image::new(1, 8, 8, (0..64).map(|i| 0.4 + 0.1 * (i % 4) as f64 / 3.0).collect()).unwrap();
        let eq = equalize(&img);
        let max = eq.pixels().iter().copied().fold(0.0, f64::max);
        let min = eq.pixels().iter().copied().fold(1.0, f64::min);
        assert!(max - min > 0.5);
        let ac = autocontrast(&img);
        assert!(ac.pixels().iter().any(|&v| v == 0.0));
    }

    #[test]
    fn constant_images_survive_histogram_ops() {
        let img = Image::filled(1, 8, 8, 0.3);
        assert_eq!(equalize(&img), img);
        assert_eq!(autocontrast(&img), img);
    }

    #[test]
    fn zero_magnitude_geometric_ops_are_identities() {
        let img = ramp();
        let mut rng = rng_for(1, &[]);
        for kind in MAGNITUDE_POOL {
            let out = apply_op(&img, AugOp::new(kind, 0.0).unwrap(), &mut rng);
            assert_eq!(out, img, "{kind:?}");
        }
    }

    #[test]
    fn shift_reflect_matches_explicit_padding() {
        let img = ramp();
        let pad = 2usize;
        let (h, w) = (8usize, 8usize);
        // explicit reflect-padded image
        let mut padded = vec![0.0; (h + 2 * pad) * (w + 2 * pad)];
        let refl = |i: i64, n: i64| -> usize {
            let j = if i < 0 { -i } else if i >= n { 2 * (n - 1) - i } else { i };
            j as usize
        };
        for y in 0..h + 2 * pad {
            for x in 0..w + 2 * pad {
                let sy = refl(y as i64 - pad as i64, h as i64);
                let sx = refl(x as i64 - pad as i64, w as i64);
                padded[y * (w + 2 * pad) + x] = img.get(0, sy, sx);
            }
        }
        for oy in 0..=2 * pad {
            for ox in 0..=2 * pad {
                let out = shift_reflect(&img, ox as i64 - pad as i64, oy as i64 - pad as i64);
                for y in 0..h {
                    for x in 0..w {
                        assert_eq!(out.get(0, y, x), padded[(y + oy) * (w + 2 * pad) + x + ox]);
                    }
                }
            }
        }
    }

    #[test]
    fn magnitude_validated() {
        assert!(AugOp::new(OpKind::Rotate, 10.5).is_err());
        assert!(AugOp::new(OpKind::Rotate, -1.0).is_err());
    }
}
