//! Per-sample loss records, two-component mixture fits, clean probabilities and
//! clean/noisy separation diagnostics.

mod bmm;
mod gmm;
mod record;
mod split;

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

pub use bmm::{beta_ln_pdf, bmm_posterior, clip_unit, fit_bmm2, BmmFit2, BMM_CLIP};
pub use gmm::{fit_gmm2, gmm_posterior, GmmFit2, GMM_VARIANCE_FLOOR};
pub use record::{loss_histogram, normalize, HistogramBin, LossRecord};
pub use split::{co_divide, separation_auc, SplitResult};

pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop once the mean log-likelihood gains less than this per iteration.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 10,
            tol: 1e-4,
        }
    }
}

/// Per-sample probability that the given label is clean.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CleanProbabilities(pub Vec<f64>);

impl CleanProbabilities {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Sorted copy; fitting on sorted values makes the result independent of input order.
fn sorted_values(values: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("value {i} is {}", values[i])));
    }
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}
