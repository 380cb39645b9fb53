use alloc::format;
use alloc::vec::Vec;

use super::CleanProbabilities;
use crate::{Error, Result};

/// Labeled (probably clean) and unlabeled indices, in increasing index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub labeled: Vec<usize>,
    /// Clean probability of each labeled index, aligned with `labeled`.
    pub labeled_w: Vec<f64>,
    pub unlabeled: Vec<usize>,
    /// True when no sample reached the threshold and the top half by `w` was used.
    pub fallback: bool,
}

impl SplitResult {
    pub fn len(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `labeled = {i : w_i >= tau}`. If that set is empty (and `w` is not), the
/// `ceil(n/2)` samples with the largest `w` are labeled instead; ties go to the
/// lower index.
pub fn co_divide(w: &CleanProbabilities, tau: f64) -> Result<SplitResult> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Config(format!("clean threshold {tau} outside (0, 1)")));
    }
    let w = &w.0;
    let mut mask: Vec<bool> = w.iter().map(|&v| v >= tau).collect();
    let mut fallback = false;
    if !w.is_empty() && !mask.iter().any(|&m| m) {
        fallback = true;
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        for &i in &order[..w.len().div_ceil(2)] {
            mask[i] = true;
        }
    }
    let mut out = SplitResult {
        labeled: Vec::new(),
        labeled_w: Vec::new(),
        unlabeled: Vec::new(),
        fallback,
    };
    for (i, &m) in mask.iter().enumerate() {
        if m {
            out.labeled.push(i);
            out.labeled_w.push(w[i]);
        } else {
            out.unlabeled.push(i);
        }
    }
    Ok(out)
}

/// Probability that a random noisy sample has a higher loss than a random clean one,
/// ties counting one half. Computed from mid-ranks.
pub fn separation_auc(losses: &[f64], flip_mask: &[bool]) -> Result<f64> {
    if losses.len() != flip_mask.len() {
        return Err(Error::Config(format!(
            "{} losses but {} mask entries",
            losses.len(),
            flip_mask.len()
        )));
    }
    let n_noisy = flip_mask.iter().filter(|&&m| m).count();
    let n_clean = losses.len() - n_noisy;
    if n_noisy == 0 || n_clean == 0 {
        return Err(Error::Diagnostic(format!(
            "separation AUC needs both classes ({n_clean} clean, {n_noisy} noisy)"
        )));
    }
    if let Some(i) = losses.iter().position(|v| v.is_nan()) {
        return Err(Error::Numeric(format!("loss {i} is NaN")));
    }
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]));
    let mut noisy_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && losses[order[end]] == losses[order[start]] {
            end += 1;
        }
        // 1-based mid-rank of the tie group
        let rank = (start + end + 1) as f64 / 2.0;
        noisy_rank_sum += rank * order[start..end].iter().filter(|&&i| flip_mask[i]).count() as f64;
        start = end;
    }
    let nn = n_noisy as f64;
    Ok((noisy_rank_sum - nn * (nn + 1.0) / 2.0) / (nn * n_clean as f64))
}
