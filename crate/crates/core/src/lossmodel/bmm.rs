use alloc::vec::Vec;

use super::gmm::{log_add, posterior0, WEIGHT_EPS};
use super::{sorted_values, CleanProbabilities, FitOptions, MIN_FIT_SAMPLES};
use crate::{Error, Result};

pub const BMM_CLIP: f64 = 1e-4;
/// Smallest variance accepted by the method-of-moments step.
const MOM_VAR_FLOOR: f64 = 1e-8;

/// Two-component Beta mixture; component 0 has the smaller mean `a / (a + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BmmFit2 {
    pub alphas: [f64; 2],
    pub betas: [f64; 2],
    pub weights: [f64; 2],
    pub iterations: usize,
    pub converged: bool,
    /// Mean per-sample log-likelihood at the initial parameters and after each M-step.
    pub log_likelihoods: Vec<f64>,
}

pub fn clip_unit(x: f64) -> f64 {
    x.clamp(BMM_CLIP, 1.0 - BMM_CLIP)
}

pub(crate) fn ln_beta_fn(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

pub fn beta_ln_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * libm::log(x) + (b - 1.0) * libm::log1p(-x) - ln_beta_fn(a, b)
}

impl BmmFit2 {
    pub fn mean(&self, k: usize) -> f64 {
        self.alphas[k] / (self.alphas[k] + self.betas[k])
    }

    pub fn log_density(&self, k: usize, x: f64) -> f64 {
        beta_ln_pdf(clip_unit(x), self.alphas[k], self.betas[k])
    }

    fn log_joint(&self, x: f64) -> [f64; 2] {
        [
            libm::log(self.weights[0]) + self.log_density(0, x),
            libm::log(self.weights[1]) + self.log_density(1, x),
        ]
    }

    /// `[r0, r1]` responsibilities of one value.
    pub fn responsibilities(&self, x: f64) -> [f64; 2] {
        let [l0, l1] = self.log_joint(x);
        let r0 = posterior0(l0, l1);
        [r0, 1.0 - r0]
    }

    pub fn mean_log_likelihood(&self, values: &[f64]) -> f64 {
        let total: f64 = values
            .iter()
            .map(|&x| {
                let [l0, l1] = self.log_joint(x);
                log_add(l0, l1)
            })
            .sum();
        total / values.len() as f64
    }
}

/// Weighted method-of-moments Beta parameters, or `None` for degenerate weights.
fn moments_to_beta(xs: &[f64], resp: &impl Fn(usize) -> f64) -> Option<(f64, f64)> {
    let (mut n, mut s) = (0.0, 0.0);
    for (i, &x) in xs.iter().enumerate() {
        n += resp(i);
        s += resp(i) * x;
    }
    if n <= 0.0 {
        return None;
    }
    let m = s / n;
    let var = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| resp(i) * (x - m) * (x - m))
        .sum::<f64>()
        / n;
    // A Beta distribution needs var < m(1 - m).
    let var = var.clamp(MOM_VAR_FLOOR, 0.999 * m * (1.0 - m));
    let common = m * (1.0 - m) / var - 1.0;
    let (a, b) = (m * common, (1.0 - m) * common);
    (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).then_some((a, b))
}

/// Expected complete-data log-likelihood of component parameters under fixed responsibilities.
fn component_q(xs: &[f64], resp: &impl Fn(usize) -> f64, a: f64, b: f64) -> f64 {
    xs.iter()
        .enumerate()
        .map(|(i, &x)| resp(i) * beta_ln_pdf(x, a, b))
        .sum()
}

fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + libm::log(x) - 0.5 / x - x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 / 252.0))
}

fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + 0.5 * x2 + x2 / x * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

const NEWTON_STEPS: usize = 30;

/// Newton ascent on the weighted Beta log-likelihood from `(a, b)`; `s1`, `s2` are the
/// weighted means of `ln x` and `ln(1 - x)`. Every accepted step raises the objective.
fn beta_newton(s1: f64, s2: f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let f = |a: f64, b: f64| (a - 1.0) * s1 + (b - 1.0) * s2 - ln_beta_fn(a, b);
    let mut cur = f(a, b);
    for _ in 0..NEWTON_STEPS {
        let dab = digamma(a + b);
        let (ga, gb) = (s1 - digamma(a) + dab, s2 - digamma(b) + dab);
        let tab = trigamma(a + b);
        let (haa, hbb, hab) = (tab - trigamma(a), tab - trigamma(b), tab);
        let det = haa * hbb - hab * hab;
        if !(det > 0.0) {
            break;
        }
        // Newton step -H^{-1} g
        let da = -(hbb * ga - hab * gb) / det;
        let db = -(haa * gb - hab * ga) / det;
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-6 {
            let (na, nb) = (a + t * da, b + t * db);
            if na > 0.0 && nb > 0.0 {
                let next = f(na, nb);
                if next.is_finite() && next >= cur {
                    moved = next > cur;
                    (a, b, cur) = (na, nb, next);
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved || (t * da).abs() + (t * db).abs() < 1e-10 * (a + b) {
            break;
        }
    }
    (a, b)
}

/// Weighted Beta M-step: the better of the current parameters and the method-of-moments
/// estimate, refined by Newton ascent. Never lowers the component's expected
/// complete-data log-likelihood.
fn beta_m_step(xs: &[f64], resp: impl Fn(usize) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (mut n, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (i, &x) in xs.iter().enumerate() {
        let r = resp(i);
        n += r;
        s1 += r * libm::log(x);
        s2 += r * libm::log1p(-x);
    }
    if !(n > 0.0) {
        return (a, b);
    }
    let (mut a0, mut b0) = (a, b);
    if let Some((ma, mb)) = moments_to_beta(xs, &resp) {
        if component_q(xs, &resp, ma, mb) >= component_q(xs, &resp, a, b) {
            (a0, b0) = (ma, mb);
        }
    }
    beta_newton(s1 / n, s2 / n, a0, b0)
}

/// EM for a two-component Beta mixture. Values are clipped to `[1e-4, 1 - 1e-4]`. The
/// M-step starts from the method-of-moments estimate and polishes it with Newton steps
/// on the weighted likelihood, so the observed log-likelihood never decreases.
pub fn fit_bmm2(values: &[f64], opts: FitOptions) -> Result<BmmFit2> {
    if values.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            got: values.len(),
        });
    }
    let mut xs = sorted_values(values)?;
    for x in &mut xs {
        *x = clip_unit(*x);
    }
    let n = xs.len();
    let half = n / 2;
    let init = |part: &[f64]| moments_to_beta(part, &|_| 1.0).unwrap_or((1.0, 1.0));
    let (a0, b0) = init(&xs[..half]);
    let (a1, b1) = init(&xs[half..]);
    let mut fit = BmmFit2 {
        alphas: [a0, a1],
        betas: [b0, b1],
        weights: [0.5, 0.5],
        iterations: 0,
        converged: false,
        log_likelihoods: Vec::new(),
    };
    let mut ll = fit.mean_log_likelihood(&xs);
    if !ll.is_finite() {
        return Err(Error::Numeric("BMM initial log-likelihood is not finite".into()));
    }
    fit.log_likelihoods.push(ll);
    let mut resp = Vec::with_capacity(n);
    while fit.iterations < opts.max_iter {
        resp.clear();
        resp.extend(xs.iter().map(|&x| fit.responsibilities(x)[0]));
        for k in 0..2 {
            let r = |i: usize| if k == 0 { resp[i] } else { 1.0 - resp[i] };
            (fit.alphas[k], fit.betas[k]) = beta_m_step(&xs, r, fit.alphas[k], fit.betas[k]);
        }
        let p0 = (resp.iter().sum::<f64>() / n as f64).clamp(WEIGHT_EPS, 1.0 - WEIGHT_EPS);
        fit.weights = [p0, 1.0 - p0];
        fit.iterations += 1;
        let next = fit.mean_log_likelihood(&xs);
        if !next.is_finite() {
            return Err(Error::Numeric("BMM log-likelihood is not finite".into()));
        }
        fit.log_likelihoods.push(next);
        let gain = next - ll;
        ll = next;
        if gain < opts.tol {
            fit.converged = true;
            break;
        }
    }
    if fit.mean(0) > fit.mean(1) {
        fit.alphas.swap(0, 1);
        fit.betas.swap(0, 1);
        fit.weights.swap(0, 1);
    }
    Ok(fit)
}

/// Posterior of the low-mean (clean) component for each value.
pub fn bmm_posterior(fit: &BmmFit2, values: &[f64]) -> CleanProbabilities {
    CleanProbabilities(values.iter().map(|&x| fit.responsibilities(x)[0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use rand_distr::{Beta, Distribution};

    #[test]
    fn polygamma_reference_values() {
        let pi2 = core::f64::consts::PI * core::f64::consts::PI;
        assert!((digamma(1.0) + 0.577_215_664_901_532_9).abs() < 1e-10);
        assert!((digamma(0.5) + 1.963_510_026_021_423).abs() < 1e-10);
        assert!((trigamma(1.0) - pi2 / 6.0).abs() < 1e-10);
        assert!((trigamma(0.5) - pi2 / 2.0).abs() < 1e-10);
    }

    #[test]
    fn recovers_two_betas() {
        let mut rng = rng_for(4, &[]);
        let lo = Beta::new(2.0, 10.0).unwrap();
        let hi = Beta::new(10.0, 2.0).unwrap();
        let xs: Vec<f64> = (0..500)
            .map(|i| if i % 2 == 0 { lo.sample(&mut rng) } else { hi.sample(&mut rng) })
            .collect();
        let fit = fit_bmm2(
            &xs,
            FitOptions {
                max_iter: 100,
                tol: 1e-6,
            },
        )
        .unwrap();
        assert!((fit.mean(0) - 1.0 / 6.0).abs() < 0.05, "{}", fit.mean(0));
        assert!((fit.mean(1) - 5.0 / 6.0).abs() < 0.05, "{}", fit.mean(1));
        for w in fit.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn responsibilities_are_normalized() {
        let fit = BmmFit2 {
            alphas: [2.0, 10.0],
            betas: [10.0, 2.0],
            weights: [0.3, 0.7],
            iterations: 0,
            converged: true,
            log_likelihoods: Vec::new(),
        };
        for i in 0..=100 {
            let r = fit.responsibilities(i as f64 / 100.0);
            assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((r[0] + r[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ln_beta_matches_closed_form() {
        // B(2, 3) = 1/12
        assert!((ln_beta_fn(2.0, 3.0) - libm::log(1.0 / 12.0)).abs() < 1e-12);
    }
}
