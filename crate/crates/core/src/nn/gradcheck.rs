use alloc::vec::Vec;

use super::{Gradients, Network, Tensor};
use crate::Result;

/// Entries whose absolute difference is within this floor count as exact.
pub const ABS_FLOOR: f64 = 1e-6;

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn central_difference(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let plus = f(&probe);
            probe[i] = orig - eps;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// Largest `|a - n| / max(|a|, |n|)` over entries whose absolute gap exceeds `abs_floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], abs_floor: f64) -> (f64, usize) {
    let mut worst = (0.0, 0);
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let gap = (a - n).abs();
        if gap <= abs_floor {
            continue;
        }
        let rel = gap / a.abs().max(n.abs());
        if rel > worst.0 {
            worst = (rel, i);
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat parameter index of the worst entry.
    pub worst_index: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

fn with_flat_params(net: &Network, flat: &[f64]) -> Network {
    let mut probe = net.clone();
    let mut offset = 0;
    for p in probe.params_mut() {
        let n = p.len();
        p.data_mut().copy_from_slice(&flat[offset..offset + n]);
        offset += n;
    }
    probe
}

/// Compares the back-propagated gradient of `objective(logits)` against central
/// differences over every parameter. `objective` returns the loss and dL/dlogits.
pub fn grad_check<F>(net: &Network, batch: &Tensor, eps: f64, objective: F) -> Result<GradCheckReport>
where
    F: Fn(&Tensor) -> Result<(f64, Tensor)>,
{
    let trace = net.forward_trace(batch)?;
    let (_, grad_logits) = objective(trace.logits())?;
    let analytic = net.backward(&trace, &grad_logits)?.flat();
    let flat: Vec<f64> = net.params().flat_map(|t| t.data().iter().copied()).collect();
    let mut failure = None;
    let numeric = central_difference(&flat, eps, |theta| {
        let probe = with_flat_params(net, theta);
        match probe.forward(batch).and_then(|z| objective(&z)) {
            Ok((loss, _)) => loss,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (max_rel_error, worst_index) = max_relative_error(&analytic, &numeric, ABS_FLOOR);
    Ok(GradCheckReport {
        max_rel_error,
        worst_index,
        analytic,
        numeric,
    })
}

impl Gradients {
    /// Rebuilds gradients shaped like `net`'s parameters from a flat vector.
    pub fn from_flat(net: &Network, flat: &[f64]) -> Self {
        let mut offset = 0;
        let tensors = net
            .params()
            .map(|p| {
                let n = p.len();
                let t = Tensor::new(p.shape().to_vec(), flat[offset..offset + n].to_vec())
                    .expect("flat gradient matches parameter sizes");
                offset += n;
                t
            })
            .collect();
        Self { tensors }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{softmax_xent, Layer, ProbVector};
    use crate::rng::rng_for;
    use alloc::vec;

    fn squared_loss(target: Vec<f64>) -> impl Fn(&Tensor) -> Result<(f64, Tensor)> {
        move |z: &Tensor| {
            let b = z.batch_size() as f64;
            let mut g = Tensor::zeros(z.shape());
            let mut loss = 0.0;
            for (i, (zv, tv)) in z.data().iter().zip(target.iter()).enumerate() {
                loss += 0.5 * (zv - tv) * (zv - tv) / b;
                g.data_mut()[i] = (zv - tv) / b;
            }
            Ok((loss, g))
        }
    }

    #[test]
    fn linear_net_with_squared_loss_is_exact() {
        let mut rng = rng_for(10, &[]);
        let net = Network::new(vec![4], vec![Layer::dense(4, 3, &mut rng)]).unwrap();
        let x = Tensor::new(vec![2, 4], (0..8).map(|i| 0.3 * i as f64 - 1.0).collect()).unwrap();
        let target: Vec<f64> = (0..6).map(|i| (i as f64).sqrt()).collect();
        let report = grad_check(&net, &x, 1e-4, squared_loss(target)).unwrap();
        assert!(report.max_rel_error < 1e-8, "{}", report.max_rel_error);
    }

    #[test]
    fn relu_net_with_cross_entropy() {
        let mut rng = rng_for(11, &[]);
        let net = Network::mlp(&[5, 8, 3], &mut rng).unwrap();
        let x = Tensor::new(vec![4, 5], (0..20).map(|i| libm::sin(i as f64)).collect()).unwrap();
        let t: Vec<ProbVector> = (0..4).map(|i| ProbVector::one_hot(i % 3, 3)).collect();
        let report = grad_check(&net, &x, 1e-4, |z| {
            softmax_xent(z, &t).map(|o| (o.loss, o.grad))
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "{}", report.max_rel_error);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut rng = rng_for(12, &[]);
        let net = Network::mlp(&[5, 8, 3], &mut rng).unwrap();
        let x = Tensor::new(vec![4, 5], (0..20).map(|i| libm::cos(i as f64)).collect()).unwrap();
        let t: Vec<ProbVector> = (0..4).map(|i| ProbVector::one_hot(i % 3, 3)).collect();
        let report = grad_check(&net, &x, 1e-4, |z| {
            softmax_xent(z, &t).map(|o| (o.loss, o.grad))
        })
        .unwrap();
        let mut corrupted = report.analytic.clone();
        let biggest = (0..corrupted.len())
            .max_by(|&a, &b| corrupted[a].abs().total_cmp(&corrupted[b].abs()))
            .unwrap();
        corrupted[biggest] *= 2.0;
        let (err, idx) = max_relative_error(&corrupted, &report.numeric, ABS_FLOOR);
        assert!(err > 0.1);
        assert_eq!(idx, biggest);
    }
}
