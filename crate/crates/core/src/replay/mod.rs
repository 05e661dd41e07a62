//! Prioritized experience replay: sum-tree indexed sliding window,
//! proportional priorities, and annealed importance-sampling weights.

pub mod buffer;
pub mod sum_tree;

pub use buffer::{
    priority_from_error, priority_from_screener, BetaSchedule, PrioritizedBatch,
    PrioritizedBuffer, ReplayConfig, RingBuffer,
};
pub use sum_tree::SumTree;
