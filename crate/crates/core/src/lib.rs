//! Curriculum-style training engine: a main network whose per-sample losses
//! are weighted by a jointly trained screener network, prioritized experience
//! replay with annealed importance sampling, a DDQN cart-pole harness, and a
//! supervised classification harness with weight-tracking analysis.
//!
//! All numeric code is generic over the [`Scalar`] type; the `*32`/`*64`
//! aliases below pick concrete precisions. Experiments typically run in
//! `f32`, exactness and gradient-oracle tests in `f64`.

pub mod error;
pub mod mode;
pub mod nn;
pub mod replay;
pub mod rl;
pub mod scalar;
pub mod screener;
pub mod seed;
pub mod supervised;

pub use error::{Error, Result};
pub use mode::Mode;
pub use scalar::Scalar;

pub type Tensor32 = nn::Tensor<f32>;
pub type Tensor64 = nn::Tensor<f64>;
pub type Network32 = nn::Network<f32>;
pub type Network64 = nn::Network<f64>;
pub type Optimizer32 = nn::Optimizer<f32>;
pub type Optimizer64 = nn::Optimizer<f64>;
pub type SumTree32 = replay::SumTree<f32>;
pub type SumTree64 = replay::SumTree<f64>;
