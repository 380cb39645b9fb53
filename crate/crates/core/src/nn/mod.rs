//! Minimal feed-forward trainer: dense and valid-padding conv layers, softmax losses
//! with analytic logit gradients, momentum SGD and a finite-difference checker.

mod checkpoint;
mod gradcheck;
mod loss;
mod network;
mod optim;
mod tensor;

pub use checkpoint::{decode_network, encode_network, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{central_difference, grad_check, max_relative_error, GradCheckReport};
pub use loss::{
    argmax, confidence_penalty, log_softmax_row, prior_regularizer, soft_mse, softmax, softmax_row,
    softmax_xent, LossOutput, ProbVector, PROB_FLOOR,
};
pub use network::{Gradients, Layer, LayerKind, Network, Trace};
pub use optim::{sgd_step, LrSchedule, OptimizerState, SgdConfig};
pub use tensor::Tensor;
