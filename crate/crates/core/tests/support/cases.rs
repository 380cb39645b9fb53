//! Random small networks, batches and targets for the gradient oracles.

use nlab_core::nn::{confidence_penalty, softmax_xent, Network, ProbVector, Tensor};
use nlab_core::rng::rng_for;
use nlab_core::strategies::{mdyrh_objective, mixmatch_objective, MdyrhTargets};
use rand::Rng;

pub const EPS: f64 = 1e-6;
pub const REL_TOL: f64 = 1e-4;

/// Even seeds give a tiny conv net on 1x5x5 inputs, odd seeds a two-hidden-layer MLP.
/// Every parameter, biases included, is redrawn so no pre-activation sits exactly on a
/// ReLU kink.
pub fn random_net(seed: u64) -> Network {
    let mut rng = rng_for(seed, &[0x6e]);
    let classes = rng.random_range(2..=4);
    let mut net = if seed % 2 == 0 {
        let filters = rng.random_range(1..=3);
        let hidden = rng.random_range(3..=6);
        Network::conv_arch(1, 5, 5, filters, hidden, classes, &mut rng).unwrap()
    } else {
        let w = [rng.random_range(3..=7), rng.random_range(3..=6), rng.random_range(2..=5), classes];
        Network::mlp(&w, &mut rng).unwrap()
    };
    for p in net.params_mut() {
        p.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.8..0.8));
    }
    net
}

pub fn random_batch(net: &Network, rows: usize, seed: u64) -> Tensor {
    let mut rng = rng_for(seed, &[0x62]);
    let mut shape = vec![rows];
    shape.extend_from_slice(net.input_shape());
    let n: usize = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_probs(rows: usize, classes: usize, rng: &mut impl Rng) -> Vec<ProbVector> {
    (0..rows)
        .map(|_| ProbVector::normalized((0..classes).map(|_| rng.random_range(0.01..1.0)).collect()).unwrap())
        .collect()
}

pub type Objective = Box<dyn Fn(&Tensor) -> nlab_core::Result<(f64, Tensor)>>;

/// CE on soft targets plus the confidence penalty.
pub fn ce_penalty(targets: Vec<ProbVector>) -> Objective {
    Box::new(move |z: &Tensor| {
        let ce = softmax_xent(z, &targets)?;
        let p = confidence_penalty(z)?;
        let mut g = ce.grad;
        g.add_scaled(&p.grad, 1.0);
        Ok((ce.loss + p.loss, g))
    })
}

/// `Lx + lambda_u Lu + lambda_r Lreg` with the first `nx` rows labeled.
pub fn mixmatch(tx: Vec<ProbVector>, tu: Vec<ProbVector>, lambda_u: f64, lambda_r: f64) -> Objective {
    Box::new(move |z: &Tensor| {
        let (terms, g) = mixmatch_objective(z, &tx, &tu, lambda_u, lambda_r)?;
        Ok((terms.total, g))
    })
}

pub fn mdyrh(t: MdyrhTargets, lambda_r: f64) -> Objective {
    Box::new(move |z: &Tensor| {
        let (terms, g) = mdyrh_objective(z, &t, lambda_r)?;
        Ok((terms.total, g))
    })
}

/// The three composite objectives for network `seed` on a random batch.
pub fn composite_cases(seed: u64) -> (Network, Tensor, Vec<(&'static str, Objective)>) {
    let net = random_net(seed);
    let c = net.num_classes();
    let rows = 6;
    let batch = random_batch(&net, rows, seed);
    let mut rng = rng_for(seed, &[0x74]);
    let nx = rng.random_range(1..rows);
    let all = random_probs(rows, c, &mut rng);
    let (tx, tu) = (all[..nx].to_vec(), all[nx..].to_vec());
    let lambda_u = rng.random_range(0.0..30.0);
    let w: Vec<f64> = (0..2 * rows).map(|_| rng.random::<f64>()).collect();
    let targets = MdyrhTargets {
        y1: random_probs(rows, c, &mut rng),
        y2: random_probs(rows, c, &mut rng),
        z1: random_probs(rows, c, &mut rng),
        z2: random_probs(rows, c, &mut rng),
        w1: w[..rows].to_vec(),
        w2: w[rows..].to_vec(),
        lam: rng.random::<f64>(),
    };
    let cases = vec![
        ("CE + confidence penalty", ce_penalty(random_probs(rows, c, &mut rng))),
        ("MixMatch Lx + lu Lu + lr Lreg", mixmatch(tx, tu, lambda_u, 1.0)),
        ("M-DYR-H four-term loss", mdyrh(targets, 1.0)),
    ];
    (net, batch, cases)
}
