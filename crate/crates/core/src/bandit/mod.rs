//! Environments and agents.
//!
//! Thompson Sampling here follows the Gaussian-prior rule: every round each
//! arm `i` gets a fresh sample from `Normal(û_i, v_i)` where
//! `û_i = reward_sum_i / (k_i + 1)` and `v_i = 1 / (k_i + 1)`, and the arm
//! with the largest sample is played. The privacy-tuned agent only inflates
//! the variance to `(ln T)^2 / (ε (k_i + 1))`; the mean is untouched.
//! A UCB1 agent is included as a non-randomized baseline.

mod agent;
mod env;
mod posterior;

pub(crate) use agent::log_horizon_squared;
pub use agent::{
    posterior_variance, select_action, step, tuned_variance, ucb1_select, AgentKind, AgentSpec,
    AgentState, Step,
};
pub use env::{BanditInstance, Environment};
pub use posterior::ArmPosterior;
