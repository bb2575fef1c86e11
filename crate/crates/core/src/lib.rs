//! Gaussian-prior Thompson Sampling under differential privacy.
//!
//! The crate bundles four pieces that are meant to be used together:
//!
//! - [`bandit`]: Bernoulli bandits, Thompson Sampling with the standard
//!   `1/(k+1)` posterior variance or the privacy-tuned
//!   `(ln T)^2 / (ε (k+1))` variance, and a UCB1 baseline.
//! - [`accountant`]: per-sample Gaussian-mechanism budgets and their
//!   advanced composition over a run.
//! - [`harness`]: seeded, parallel regret experiments.
//! - [`audit`]: empirical lower bounds on ε from neighboring reward tapes.
//!
//! The [`cli`] module implements the `dpbandit` binary (`simulate`,
//! `account`, `audit`). Runnable walkthroughs live in `examples/`.
//!
//! ```
//! use dpbandit::accountant::{account_run, default_trajectory, DeltaAllocation};
//!
//! let horizon = 1024;
//! let alloc = DeltaAllocation::for_horizon(horizon).unwrap();
//! let budget = account_run(&default_trajectory(horizon), alloc.delta_step, alloc.slack).unwrap();
//! assert!(budget.delta <= (horizon as f64).powi(-4));
//! ```

pub mod accountant;
pub mod audit;
pub mod bandit;
pub mod cli;
pub mod error;
pub mod harness;
pub mod output;
pub mod rng;

pub use error::{Error, Result};
