use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Channel-major (`[c][y][x]`) pixel grid with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: usize,
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(channels: usize, height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Config(format!("degenerate image {channels}x{height}x{width}")));
        }
        if pixels.len() != channels * height * width {
            return Err(Error::Config(format!(
                "{} pixels for a {channels}x{height}x{width} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Numeric("pixel outside [0, 1]".into()));
        }
        Ok(Self {
            channels,
            height,
            width,
            pixels,
        })
    }

    /// Clamps every pixel into `[0, 1]`; NaN becomes 0.
    pub fn from_clamped(channels: usize, height: usize, width: usize, mut pixels: Vec<f64>) -> Self {
        assert_eq!(pixels.len(), channels * height * width);
        for v in &mut pixels {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self {
            channels,
            height,
            width,
            pixels,
        }
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        Self::from_clamped(channels, height, width, vec![value; channels * height * width])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.pixels[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.pixels[(c * self.height + y) * self.width + x]
    }

    /// Same dimensions, new pixel values (clamped).
    pub fn with_pixels(&self, pixels: Vec<f64>) -> Self {
        Self::from_clamped(self.channels, self.height, self.width, pixels)
    }

    /// Builds an image of the same shape by evaluating `f(c, y, x)` for every pixel.
    pub fn map_coords(&self, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut out = Vec::with_capacity(self.pixels.len());
        for c in 0..self.channels {
            for y in 0..self.height {
                for x in 0..self.width {
                    out.push(f(c, y, x));
                }
            }
        }
        self.with_pixels(out)
    }

    pub fn normalize(&self, mean: &[f64], std: &[f64]) -> Normalized {
        let n = self.height * self.width;
        let mut values = Vec::with_capacity(self.pixels.len());
        for c in 0..self.channels {
            let (m, s) = (mean[c], std[c]);
            values.extend(self.pixels[c * n..(c + 1) * n].iter().map(|v| (v - m) / s));
        }
        Normalized {
            channels: self.channels,
            height: self.height,
            width: self.width,
            values,
        }
    }
}

/// A normalized network input. Values are no longer confined to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl Normalized {
    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }
}
