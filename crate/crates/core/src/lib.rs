//! Information-theoretic task selection for meta-reinforcement learning.
//!
//! The crate covers the whole experiment loop at desk scale:
//!
//! - [`mdp`]: episodic tabular MDPs, softmax policies, rollouts, exact solves.
//! - [`envs`]: seeded task families (grid mazes, discretized cart-pole) and task pools.
//! - [`learner`]: tabular REINFORCE and Boltzmann Q-learning, fine-tuning, policy execution.
//! - [`select`]: policy entropy and KL, task difference, relevance evaluation and
//!   the selection loop itself.
//! - [`meta`]: a first-order meta-learner over policy logits and its adaptation protocol.
//! - [`harness`]: config-driven pipelines, epsilon sweeps, ablations, reports and plot data.

pub mod envs;
pub mod error;
pub mod harness;
pub mod learner;
pub mod mdp;
pub mod meta;
pub mod seed;
pub mod select;
pub mod stats;

pub use error::{Error, Result};
