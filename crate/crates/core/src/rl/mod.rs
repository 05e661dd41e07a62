//! Reinforcement-learning harness: cart-pole environment and the DDQN agent.

pub mod agent;
pub mod cartpole;

pub use agent::{
    argmax, ddqn_td_target, evaluate_greedy, select_action, train_agent, AgentConfig,
    RlMetricsRow, RlOutput, Transition,
};
pub use cartpole::{CartPole, CartPoleConfig, CartPoleState, ACTION_LEFT, ACTION_RIGHT, NUM_ACTIONS};
