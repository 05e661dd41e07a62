//! Dense-network substrate: tensors, layers, losses, optimizers, and
//! reverse-mode gradients.

pub mod layer;
pub mod loss;
pub mod network;
pub mod optim;
pub mod tensor;

pub use layer::{sigmoid, Layer};
pub use loss::{
    huber_grad, huber_loss, softmax_ce_batch, softmax_cross_entropy, softmax_cross_entropy_grad,
    weighted_mean_loss,
};
pub use network::Network;
pub use optim::{Optimizer, OptimizerKind};
pub use tensor::Tensor;
