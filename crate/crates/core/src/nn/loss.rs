use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Tensor;
use crate::{Error, Result};

/// Probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// A per-class probability vector: non-negative entries summing to one within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Numeric("empty probability vector".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Numeric(format!("invalid probabilities {values:?}")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Numeric(format!("probabilities sum to {sum}")));
        }
        Ok(Self(values))
    }

    pub fn one_hot(class: usize, classes: usize) -> Self {
        let mut v = vec![0.0; classes];
        v[class] = 1.0;
        Self(v)
    }

    pub fn uniform(classes: usize) -> Self {
        Self(vec![1.0 / classes as f64; classes])
    }

    /// Renormalizes a non-negative vector.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        let sum: f64 = values.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::Numeric(format!("cannot normalize vector with sum {sum}")));
        }
        values.iter_mut().for_each(|v| *v /= sum);
        Self::new(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * libm::log(p))
            .sum::<f64>()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Index of the first maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    /// Mean over the batch.
    pub loss: f64,
    pub per_sample: Vec<f64>,
    /// dL/dlogits for the batch-mean loss.
    pub grad: Tensor,
}

fn check_logits(logits: &Tensor) -> Result<()> {
    if logits.shape().len() != 2 {
        return Err(Error::Config(format!(
            "logits must be [batch, classes], got {:?}",
            logits.shape()
        )));
    }
    if !logits.is_finite() {
        return Err(Error::Numeric("non-finite logits".into()));
    }
    Ok(())
}

pub fn log_softmax_row(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + libm::log(z.iter().map(|&v| libm::exp(v - m)).sum::<f64>());
    z.iter().map(|&v| v - lse).collect()
}

pub fn softmax_row(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| libm::exp(v - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Row-wise softmax of `[batch, classes]` logits.
pub fn softmax(logits: &Tensor) -> Result<Vec<ProbVector>> {
    check_logits(logits)?;
    (0..logits.batch_size())
        .map(|i| ProbVector::normalized(softmax_row(logits.row(i))))
        .collect()
}

/// Soft-target cross-entropy, `-sum_c t_c log softmax(z)_c`, averaged over the batch.
pub fn softmax_xent(logits: &Tensor, targets: &[ProbVector]) -> Result<LossOutput> {
    check_logits(logits)?;
    let b = logits.batch_size();
    let c = logits.row_len();
    if targets.len() != b || targets.iter().any(|t| t.len() != c) {
        return Err(Error::Config(format!(
            "{} targets for a [{b}, {c}] logit batch",
            targets.len()
        )));
    }
    let floor = libm::log(PROB_FLOOR);
    let mut per_sample = Vec::with_capacity(b);
    let mut grad = Tensor::zeros(logits.shape());
    let inv_b = 1.0 / b as f64;
    for i in 0..b {
        let z = logits.row(i);
        let logp = log_softmax_row(z);
        let t = targets[i].as_slice();
        let l: f64 = -t.iter().zip(&logp).map(|(tc, lp)| tc * lp.max(floor)).sum::<f64>();
        per_sample.push(l);
        let g = grad.row_mut(i);
        for k in 0..c {
            g[k] = (libm::exp(logp[k]) - t[k]) * inv_b;
        }
    }
    let loss = per_sample.iter().sum::<f64>() * inv_b;
    Ok(LossOutput {
        loss,
        per_sample,
        grad,
    })
}

/// Negative entropy `sum_c p_c log p_c` of softmax(logits), averaged over the batch.
/// Adding it to a loss penalizes confident predictions.
pub fn confidence_penalty(logits: &Tensor) -> Result<LossOutput> {
    check_logits(logits)?;
    let b = logits.batch_size();
    let c = logits.row_len();
    let inv_b = 1.0 / b as f64;
    let mut per_sample = Vec::with_capacity(b);
    let mut grad = Tensor::zeros(logits.shape());
    for i in 0..b {
        let logp = log_softmax_row(logits.row(i));
        let p: Vec<f64> = logp.iter().map(|&l| libm::exp(l)).collect();
        let neg_ent: f64 = p.iter().zip(&logp).map(|(pc, lc)| pc * lc).sum();
        per_sample.push(neg_ent);
        let g = grad.row_mut(i);
        for k in 0..c {
            g[k] = p[k] * (logp[k] - neg_ent) * inv_b;
        }
    }
    let loss = per_sample.iter().sum::<f64>() * inv_b;
    Ok(LossOutput {
        loss,
        per_sample,
        grad,
    })
}

/// Squared error between softmax outputs and soft targets, divided by both batch size
/// and class count.
pub fn soft_mse(logits: &Tensor, targets: &[ProbVector]) -> Result<LossOutput> {
    check_logits(logits)?;
    let b = logits.batch_size();
    let c = logits.row_len();
    if targets.len() != b || targets.iter().any(|t| t.len() != c) {
        return Err(Error::Config(format!(
            "{} targets for a [{b}, {c}] logit batch",
            targets.len()
        )));
    }
    let scale = 1.0 / (b * c) as f64;
    let mut per_sample = Vec::with_capacity(b);
    let mut grad = Tensor::zeros(logits.shape());
    for i in 0..b {
        let p = softmax_row(logits.row(i));
        let t = targets[i].as_slice();
        let d: Vec<f64> = p.iter().zip(t).map(|(pc, tc)| pc - tc).collect();
        per_sample.push(d.iter().map(|v| v * v).sum::<f64>() / c as f64);
        let dp: f64 = d.iter().zip(&p).map(|(dc, pc)| dc * pc).sum();
        let g = grad.row_mut(i);
        for k in 0..c {
            g[k] = 2.0 * p[k] * (d[k] - dp) * scale;
        }
    }
    let loss = per_sample.iter().sum::<f64>() / b as f64;
    Ok(LossOutput {
        loss,
        per_sample,
        grad,
    })
}

/// `sum_c pi_c log(pi_c / pbar_c)` with a uniform prior `pi` and `pbar` the batch-mean
/// softmax prediction. Returns `(value, dL/dlogits)`.
pub fn prior_regularizer(logits: &Tensor) -> Result<(f64, Tensor)> {
    check_logits(logits)?;
    let b = logits.batch_size();
    let c = logits.row_len();
    let prior = 1.0 / c as f64;
    let probs: Vec<Vec<f64>> = (0..b).map(|i| softmax_row(logits.row(i))).collect();
    let mut mean = vec![0.0; c];
    for p in &probs {
        for k in 0..c {
            mean[k] += p[k];
        }
    }
    mean.iter_mut().for_each(|m| *m /= b as f64);
    let value: f64 = mean
        .iter()
        .map(|&m| prior * libm::log(prior / m.max(PROB_FLOOR)))
        .sum();
    let ratio: Vec<f64> = mean.iter().map(|&m| prior / m.max(PROB_FLOOR)).collect();
    let mut grad = Tensor::zeros(logits.shape());
    for (i, p) in probs.iter().enumerate() {
        let s: f64 = p.iter().zip(&ratio).map(|(pc, rc)| pc * rc).sum();
        let g = grad.row_mut(i);
        for k in 0..c {
            g[k] = p[k] * (s - ratio[k]) / b as f64;
        }
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::central_difference;

    fn logits(b: usize, c: usize, seed: u64) -> Tensor {
        let data = (0..b * c)
            .map(|i| libm::sin((i as f64 + 1.0) * 1.37 + seed as f64) * 2.0)
            .collect();
        Tensor::new(vec![b, c], data).unwrap()
    }

    fn targets(b: usize, c: usize) -> Vec<ProbVector> {
        (0..b)
            .map(|i| {
                let v: Vec<f64> = (0..c).map(|k| 1.0 + ((i * 7 + k * 3) % 5) as f64).collect();
                ProbVector::normalized(v).unwrap()
            })
            .collect()
    }

    fn assert_grad_matches(z: &Tensor, f: impl Fn(&Tensor) -> f64, g: &Tensor) {
        let numeric = central_difference(z.data(), 1e-5, |v| {
            f(&Tensor::new(z.shape().to_vec(), v.to_vec()).unwrap())
        });
        for (a, n) in g.data().iter().zip(&numeric) {
            let err = (a - n).abs();
            assert!(err <= 1e-6 || err / a.abs().max(n.abs()) < 1e-4, "{a} vs {n}");
        }
    }

    #[test]
    fn uniform_logits_give_ln_c() {
        let z = Tensor::zeros(&[1, 10]);
        let out = softmax_xent(&z, &[ProbVector::one_hot(3, 10)]).unwrap();
        assert!((out.per_sample[0] - 2.302585).abs() < 1e-6);
    }

    #[test]
    fn target_equal_to_softmax_is_stationary() {
        let z = logits(3, 5, 1);
        let t = softmax(&z).unwrap();
        let out = softmax_xent(&z, &t).unwrap();
        assert!(out.grad.data().iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn xent_gradient_matches_finite_differences() {
        let z = logits(4, 6, 2);
        let t = targets(4, 6);
        let out = softmax_xent(&z, &t).unwrap();
        assert_grad_matches(&z, |zz| softmax_xent(zz, &t).unwrap().loss, &out.grad);
    }

    #[test]
    fn non_finite_logits_rejected() {
        let z = Tensor::new(vec![1, 2], vec![f64::NAN, 0.0]).unwrap();
        assert!(matches!(
            softmax_xent(&z, &[ProbVector::uniform(2)]),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn penalty_values_and_gradient() {
        let u = confidence_penalty(&Tensor::zeros(&[2, 10])).unwrap();
        assert!((u.loss + libm::log(10.0)).abs() < 1e-12);
        let sharp = Tensor::new(vec![1, 3], vec![40.0, 0.0, 0.0]).unwrap();
        let s = confidence_penalty(&sharp).unwrap();
        assert!(s.loss <= 0.0 && s.loss > -1e-12);
        let z = logits(3, 4, 3);
        let out = confidence_penalty(&z).unwrap();
        assert_grad_matches(&z, |zz| confidence_penalty(zz).unwrap().loss, &out.grad);
    }

    #[test]
    fn mse_and_prior_gradients() {
        let z = logits(5, 3, 4);
        let t = targets(5, 3);
        let out = soft_mse(&z, &t).unwrap();
        assert_grad_matches(&z, |zz| soft_mse(zz, &t).unwrap().loss, &out.grad);
        let (_, g) = prior_regularizer(&z).unwrap();
        assert_grad_matches(&z, |zz| prior_regularizer(zz).unwrap().0, &g);
    }

    #[test]
    fn prior_regularizer_is_zero_for_balanced_predictions() {
        let (v, _) = prior_regularizer(&Tensor::zeros(&[4, 5])).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn probvector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.4]).is_err());
        assert!(ProbVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbVector::new(vec![0.25; 4]).is_ok());
    }
}
