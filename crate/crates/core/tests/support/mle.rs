//! Brute-force maximum-likelihood oracles for two-component 1D mixtures: a coarse
//! grid followed by compass search in an unconstrained parameterization. Shares no
//! code with the EM fitters.

#![allow(dead_code)]

use std::f64::consts::PI;

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn lse(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn compass(mut x: Vec<f64>, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut best = f(&x);
    let mut step = 0.25;
    while step > 1e-6 {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += dir * step;
                let v = f(&y);
                if v > best {
                    best = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    x
}

/// `(means, sigmas, pi0)` maximizing the Gaussian-mixture likelihood; means sorted.
pub fn gmm_mle(xs: &[f64]) -> ([f64; 2], [f64; 2], f64) {
    let ll = |m0: f64, m1: f64, s0: f64, s1: f64, p: f64| -> f64 {
        xs.iter()
            .map(|&x| {
                let a = p.ln() - 0.5 * (2.0 * PI * s0 * s0).ln() - (x - m0).powi(2) / (2.0 * s0 * s0);
                let b = (1.0 - p).ln() - 0.5 * (2.0 * PI * s1 * s1).ln() - (x - m1).powi(2) / (2.0 * s1 * s1);
                lse(a, b)
            })
            .sum()
    };
    let mut start = (f64::NEG_INFINITY, vec![]);
    for i in 0..10 {
        for j in 0..10 {
            for &s in &[0.02, 0.05, 0.1, 0.2] {
                for &p in &[0.3, 0.5, 0.7] {
                    let (m0, m1) = (0.025 + 0.05 * i as f64, 0.525 + 0.05 * j as f64);
                    let v = ll(m0, m1, s, s, p);
                    if v > start.0 {
                        start = (v, vec![m0, m1, s.ln(), s.ln(), logit(p)]);
                    }
                }
            }
        }
    }
    let x = compass(start.1, |v| ll(v[0], v[1], v[2].exp().max(1e-2), v[3].exp().max(1e-2), sigmoid(v[4])));
    let (mut m, mut s, mut p) = ([x[0], x[1]], [x[2].exp().max(1e-2), x[3].exp().max(1e-2)], sigmoid(x[4]));
    if m[0] > m[1] {
        m.swap(0, 1);
        s.swap(0, 1);
        p = 1.0 - p;
    }
    (m, s, p)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Component means maximizing the Beta-mixture likelihood on values clipped to
/// `[1e-4, 1 - 1e-4]`; sorted.
pub fn bmm_mle_means(values: &[f64]) -> [f64; 2] {
    let xs: Vec<f64> = values.iter().map(|v| v.clamp(1e-4, 1.0 - 1e-4)).collect();
    let lx: Vec<(f64, f64)> = xs.iter().map(|&x| (x.ln(), (1.0 - x).ln())).collect();
    // parameters: component means and concentrations a + b
    let ll = |m0: f64, m1: f64, c0: f64, c1: f64, p: f64| -> f64 {
        let (a0, b0, a1, b1) = (m0 * c0, (1.0 - m0) * c0, m1 * c1, (1.0 - m1) * c1);
        let (z0, z1) = (ln_beta(a0, b0), ln_beta(a1, b1));
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        lx.iter()
            .map(|&(l, l1)| {
                lse(
                    lp + (a0 - 1.0) * l + (b0 - 1.0) * l1 - z0,
                    lq + (a1 - 1.0) * l + (b1 - 1.0) * l1 - z1,
                )
            })
            .sum()
    };
    let mut start = (f64::NEG_INFINITY, vec![]);
    for i in 0..10 {
        for j in 0..10 {
            for &c0 in &[3.0, 6.0, 12.0, 24.0, 48.0] {
                for &c1 in &[3.0, 6.0, 12.0, 24.0, 48.0] {
                    for &p in &[0.3, 0.5, 0.7] {
                        let (m0, m1) = (0.025 + 0.05 * i as f64, 0.525 + 0.05 * j as f64);
                        let v = ll(m0, m1, c0, c1, p);
                        if v > start.0 {
                            start = (v, vec![logit(m0), logit(m1), f64::ln(c0), f64::ln(c1), logit(p)]);
                        }
                    }
                }
            }
        }
    }
    let x = compass(start.1, |v| ll(sigmoid(v[0]), sigmoid(v[1]), v[2].exp(), v[3].exp(), sigmoid(v[4])));
    let mut m = [sigmoid(x[0]), sigmoid(x[1])];
    m.sort_by(f64::total_cmp);
    m
}
