use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{sorted_values, CleanProbabilities, FitOptions, MIN_FIT_SAMPLES};
use crate::{Error, Result};

pub const GMM_VARIANCE_FLOOR: f64 = 1e-4;
/// Mixing weights stay inside `[WEIGHT_EPS, 1 - WEIGHT_EPS]`.
pub(crate) const WEIGHT_EPS: f64 = 1e-6;

/// Two-component 1D Gaussian mixture; component 0 has the smaller mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit2 {
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub weights: [f64; 2],
    pub iterations: usize,
    pub converged: bool,
    /// Mean per-sample log-likelihood at the initial parameters and after each M-step.
    pub log_likelihoods: Vec<f64>,
}

impl GmmFit2 {
    pub fn log_density(&self, k: usize, x: f64) -> f64 {
        normal_ln_pdf(x, self.means[k], self.variances[k])
    }

    /// Mean log-likelihood of `values` under the mixture.
    pub fn mean_log_likelihood(&self, values: &[f64]) -> f64 {
        let lw = [libm::log(self.weights[0]), libm::log(self.weights[1])];
        let total: f64 = values
            .iter()
            .map(|&x| log_add(lw[0] + self.log_density(0, x), lw[1] + self.log_density(1, x)))
            .sum();
        total / values.len() as f64
    }
}

pub(crate) fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (libm::log(2.0 * PI * var) + d * d / var)
}

pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(libm::exp(a - m) + libm::exp(b - m))
}

/// Posterior of component 0 given log joint densities of both components.
pub(crate) fn posterior0(l0: f64, l1: f64) -> f64 {
    let d = l1 - l0;
    if d > 0.0 {
        let e = libm::exp(-d);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(d))
    }
}

fn weighted_moments(values: &[f64], resp: impl Fn(usize) -> f64) -> (f64, f64, f64) {
    let (mut n, mut s) = (0.0, 0.0);
    for (i, &x) in values.iter().enumerate() {
        let r = resp(i);
        n += r;
        s += r * x;
    }
    if n <= 0.0 {
        return (0.0, f64::NAN, f64::NAN);
    }
    let mean = s / n;
    let ss: f64 = values
        .iter()
        .enumerate()
        .map(|(i, &x)| resp(i) * (x - mean) * (x - mean))
        .sum();
    (n, mean, ss / n)
}

/// EM for a two-component Gaussian mixture on (normalized) per-sample losses.
/// Initialized by splitting at the median; variances are floored at
/// [`GMM_VARIANCE_FLOOR`].
pub fn fit_gmm2(values: &[f64], opts: FitOptions) -> Result<GmmFit2> {
    if values.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            got: values.len(),
        });
    }
    let xs = sorted_values(values)?;
    let n = xs.len();
    let half = n / 2;
    let (_, m0, v0) = weighted_moments(&xs[..half], |_| 1.0);
    let (_, m1, v1) = weighted_moments(&xs[half..], |_| 1.0);
    let mut fit = GmmFit2 {
        means: [m0, m1],
        variances: [v0.max(GMM_VARIANCE_FLOOR), v1.max(GMM_VARIANCE_FLOOR)],
        weights: [0.5, 0.5],
        iterations: 0,
        converged: false,
        log_likelihoods: Vec::new(),
    };
    let mut ll = fit.mean_log_likelihood(&xs);
    fit.log_likelihoods.push(ll);
    let mut resp = Vec::with_capacity(n);
    while fit.iterations < opts.max_iter {
        let lw = [libm::log(fit.weights[0]), libm::log(fit.weights[1])];
        resp.clear();
        resp.extend(
            xs.iter()
                .map(|&x| posterior0(lw[0] + fit.log_density(0, x), lw[1] + fit.log_density(1, x))),
        );
        let (n0, mu0, var0) = weighted_moments(&xs, |i| resp[i]);
        let (n1, mu1, var1) = weighted_moments(&xs, |i| 1.0 - resp[i]);
        if n0 > 0.0 {
            fit.means[0] = mu0;
            fit.variances[0] = var0.max(GMM_VARIANCE_FLOOR);
        }
        if n1 > 0.0 {
            fit.means[1] = mu1;
            fit.variances[1] = var1.max(GMM_VARIANCE_FLOOR);
        }
        let p0 = (n0 / n as f64).clamp(WEIGHT_EPS, 1.0 - WEIGHT_EPS);
        fit.weights = [p0, 1.0 - p0];
        fit.iterations += 1;
        let next = fit.mean_log_likelihood(&xs);
        if !next.is_finite() {
            return Err(Error::Numeric("GMM log-likelihood is not finite".into()));
        }
        fit.log_likelihoods.push(next);
        let gain = next - ll;
        ll = next;
        if gain < opts.tol {
            fit.converged = true;
            break;
        }
    }
    if fit.means[0] > fit.means[1] {
        fit.means.swap(0, 1);
        fit.variances.swap(0, 1);
        fit.weights.swap(0, 1);
    }
    Ok(fit)
}

/// Posterior probability of the low-mean (clean) component for each value.
pub fn gmm_posterior(fit: &GmmFit2, values: &[f64]) -> CleanProbabilities {
    let lw = [libm::log(fit.weights[0]), libm::log(fit.weights[1])];
    CleanProbabilities(
        values
            .iter()
            .map(|&x| posterior0(lw[0] + fit.log_density(0, x), lw[1] + fit.log_density(1, x)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use alloc::vec;
    use rand_distr::{Distribution, Normal};

    fn bimodal(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = rng_for(seed, &[]);
        let a = Normal::new(0.1, 0.03).unwrap();
        let b = Normal::new(0.8, 0.05).unwrap();
        (0..n)
            .map(|i| {
                let v: f64 = if i % 2 == 0 { a.sample(&mut rng) } else { b.sample(&mut rng) };
                v.clamp(0.0, 1.0)
            })
            .collect()
    }

    #[test]
    fn recovers_separated_modes() {
        let xs = bimodal(1, 500);
        let fit = fit_gmm2(&xs, FitOptions::default()).unwrap();
        assert!((fit.means[0] - 0.1).abs() < 0.03, "{:?}", fit.means);
        assert!((fit.means[1] - 0.8).abs() < 0.03, "{:?}", fit.means);
        assert!((fit.weights[0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn constant_data_hits_the_floor() {
        let fit = fit_gmm2(&[0.3; 40], FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.variances, [GMM_VARIANCE_FLOOR; 2]);
        assert!(fit.means.iter().all(|m| (m - 0.3).abs() < 1e-12));
        assert!(fit.log_likelihoods.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn log_likelihood_never_drops() {
        for seed in 0..5 {
            let fit = fit_gmm2(
                &bimodal(seed, 300),
                FitOptions {
                    max_iter: 50,
                    tol: 0.0,
                },
            )
            .unwrap();
            for w in fit.log_likelihoods.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "{w:?}");
            }
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_gmm2(&[0.1; 9], FitOptions::default()),
            Err(Error::InsufficientData { needed: 10, got: 9 })
        ));
    }

    #[test]
    fn posterior_examples() {
        let fit = GmmFit2 {
            means: [0.1, 0.8],
            variances: [0.03f64.powi(2), 0.05f64.powi(2)],
            weights: [0.5, 0.5],
            iterations: 0,
            converged: true,
            log_likelihoods: vec![],
        };
        assert!(gmm_posterior(&fit, &[0.1]).0[0] > 0.99);
        let sym = GmmFit2 {
            means: [0.4, 0.4],
            variances: [0.01, 0.01],
            ..fit.clone()
        };
        assert!(gmm_posterior(&sym, &[0.0, 0.4, 0.9]).0.iter().all(|&w| w == 0.5));
        let eq = GmmFit2 {
            variances: [0.02, 0.02],
            ..fit
        };
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let w = gmm_posterior(&eq, &grid).0;
        for p in w.windows(2) {
            assert!(p[1] <= p[0]);
        }
    }
}
