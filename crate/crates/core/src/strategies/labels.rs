use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::nn::ProbVector;
use crate::{Error, Result};

/// `p_c^(1/T) / sum_j p_j^(1/T)`. Zero entries stay zero.
pub fn sharpen(p: &ProbVector, t: f64) -> Result<ProbVector> {
    if !(t > 0.0) {
        return Err(Error::Config(format!("sharpening temperature {t} must be positive")));
    }
    if t == 1.0 {
        return Ok(p.clone());
    }
    let inv = 1.0 / t;
    // Scale by the max first so tiny temperatures cannot underflow every entry.
    let m = p.as_slice().iter().copied().fold(0.0, f64::max);
    let raised: Vec<f64> = p
        .as_slice()
        .iter()
        .map(|&v| if v > 0.0 { libm::pow(v / m, inv) } else { 0.0 })
        .collect();
    ProbVector::normalized(raised)
}

/// `w * y + (1 - w) * p`.
pub fn refine_label(y: &ProbVector, p: &ProbVector, w: f64) -> Result<ProbVector> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Config(format!("clean probability {w} outside [0, 1]")));
    }
    mix_probs(y, p, w)
}

/// Convex combination `lam * a + (1 - lam) * b`.
pub fn mix_probs(a: &ProbVector, b: &ProbVector, lam: f64) -> Result<ProbVector> {
    if a.len() != b.len() {
        return Err(Error::Config(format!("{} vs {} classes", a.len(), b.len())));
    }
    if lam == 1.0 {
        return Ok(a.clone());
    }
    if lam == 0.0 {
        return Ok(b.clone());
    }
    ProbVector::normalized(
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| lam * x + (1.0 - lam) * y)
            .collect(),
    )
}

/// `lam * a + (1 - lam) * b`, element-wise.
pub fn mix_rows(a: &[f64], b: &[f64], lam: f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    if lam == 1.0 {
        return a.to_vec();
    }
    a.iter().zip(b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect()
}

/// Arithmetic mean of probability vectors of equal length.
pub fn average_probs<'a>(ps: impl IntoIterator<Item = &'a ProbVector>) -> Result<ProbVector> {
    let mut acc: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for p in ps {
        if acc.is_empty() {
            acc = vec![0.0; p.len()];
        } else if acc.len() != p.len() {
            return Err(Error::Config("averaging vectors of different lengths".into()));
        }
        for (a, v) in acc.iter_mut().zip(p.as_slice()) {
            *a += v;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Config("nothing to average".into()));
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    ProbVector::normalized(acc)
}

/// Co-guessed label: the mean of both networks' predictions over all views,
/// `(1/2M) sum_m [p1(u_m) + p2(u_m)]`, before sharpening.
pub fn co_guess(preds_1: &[ProbVector], preds_2: &[ProbVector]) -> Result<ProbVector> {
    if preds_1.is_empty() || preds_1.len() != preds_2.len() {
        return Err(Error::Config(format!(
            "co-guessing needs matching non-empty view sets, got {} and {}",
            preds_1.len(),
            preds_2.len()
        )));
    }
    average_probs(preds_1.iter().chain(preds_2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sharpen_examples() {
        let p = pv(&[0.8, 0.2]);
        assert_eq!(sharpen(&p, 1.0).unwrap(), p);
        let s = sharpen(&p, 0.5).unwrap();
        assert!((s.as_slice()[0] - 0.941176).abs() < 1e-6);
        assert!((s.as_slice()[1] - 0.058824).abs() < 1e-6);
        let u = ProbVector::uniform(5);
        for &t in &[0.1, 0.5, 2.0] {
            for v in sharpen(&u, t).unwrap().as_slice() {
                assert!((v - 0.2).abs() < 1e-15);
            }
        }
        assert!(sharpen(&p, 0.0).is_err());
    }

    #[test]
    fn refine_examples() {
        let y = ProbVector::one_hot(0, 2);
        let p = pv(&[0.5, 0.5]);
        assert_eq!(refine_label(&y, &p, 1.0).unwrap(), y);
        assert_eq!(refine_label(&y, &p, 0.0).unwrap(), p);
        let r = refine_label(&y, &p, 0.3).unwrap();
        assert!((r.as_slice()[0] - 0.65).abs() < 1e-15);
        assert!((r.as_slice()[1] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn co_guess_examples() {
        let a = [pv(&[0.6, 0.4]), pv(&[0.8, 0.2])];
        let b = [pv(&[0.5, 0.5]), pv(&[0.7, 0.3])];
        let q = co_guess(&a, &b).unwrap();
        assert!((q.as_slice()[0] - 0.65).abs() < 1e-15);
        let same = [pv(&[0.3, 0.7])];
        assert_eq!(co_guess(&same, &same).unwrap(), same[0]);
    }
}
