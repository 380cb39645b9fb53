use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Per-sample losses of one epoch, raw and min-max normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl LossRecord {
    pub fn new(epoch: usize, raw: Vec<f64>) -> Result<Self> {
        let normalized = normalize(&raw)?;
        Ok(Self {
            epoch,
            raw,
            normalized,
        })
    }
}

/// Min-max scaling to `[0, 1]`; a constant input maps to all 0.5.
pub fn normalize(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("loss {i} is {}", raw[i])));
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Ok(vec![0.5; raw.len()]);
    }
    let span = hi - lo;
    Ok(raw.iter().map(|v| ((v - lo) / span).clamp(0.0, 1.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub clean_count: usize,
    pub noisy_count: usize,
}

/// Equal-width histogram of `[0, 1]` values split by the flip mask. Values of
/// exactly 1.0 fall into the last bin.
pub fn loss_histogram(normalized: &[f64], flip_mask: &[bool], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    if normalized.len() != flip_mask.len() {
        return Err(Error::Config(format!(
            "{} losses but {} mask entries",
            normalized.len(),
            flip_mask.len()
        )));
    }
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            bin_left: b as f64 / bins as f64,
            clean_count: 0,
            noisy_count: 0,
        })
        .collect();
    for (&v, &noisy) in normalized.iter().zip(flip_mask) {
        let b = (libm::floor(v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        if noisy {
            out[b].noisy_count += 1;
        } else {
            out[b].clean_count += 1;
        }
    }
    Ok(out)
}
