use alloc::format;
use alloc::vec::Vec;

use super::{Gradients, Network, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            lr: 0.02,
            momentum: 0.9,
            weight_decay: 5e-4,
        }
    }
}

/// Momentum buffers plus the hyperparameters of the current step.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub buffers: Vec<Tensor>,
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr: f64,
}

impl OptimizerState {
    pub fn new(net: &Network, cfg: SgdConfig) -> Self {
        Self {
            buffers: net.params().map(Tensor::zeros_like).collect(),
            momentum: cfg.momentum,
            weight_decay: cfg.weight_decay,
            lr: cfg.lr,
        }
    }
}

/// `v <- mu*v + g + wd*theta; theta <- theta - lr*v`, for every parameter tensor.
pub fn sgd_step(net: &mut Network, grads: &Gradients, state: &mut OptimizerState) -> Result<()> {
    if grads.tensors.len() != state.buffers.len() {
        return Err(Error::Config(format!(
            "{} gradient tensors for {} parameters",
            grads.tensors.len(),
            state.buffers.len()
        )));
    }
    let (mu, wd, lr) = (state.momentum, state.weight_decay, state.lr);
    for ((param, g), v) in net
        .params_mut()
        .zip(&grads.tensors)
        .zip(state.buffers.iter_mut())
    {
        if param.shape() != g.shape() || param.shape() != v.shape() {
            return Err(Error::Config(format!(
                "gradient shape {:?} does not match parameter {:?}",
                g.shape(),
                param.shape()
            )));
        }
        for ((p, gv), vv) in param
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(v.data_mut().iter_mut())
        {
            *vv = mu * *vv + gv + wd * *p;
            *p -= lr * *vv;
        }
    }
    Ok(())
}

/// Step schedule: `base` before `drop_epoch`, `base / factor` from it on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub base: f64,
    pub drop_epoch: usize,
    pub factor: f64,
}

impl LrSchedule {
    pub fn new(base: f64, drop_epoch: usize) -> Self {
        Self {
            base,
            drop_epoch,
            factor: 10.0,
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        if epoch >= self.drop_epoch {
            self.base / self.factor
        } else {
            self.base
        }
    }
}
