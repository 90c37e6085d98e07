//! Episodic tabular MDPs, softmax policies, rollouts and exact solves.

mod policy;
mod rollout;
mod sample;
mod schema;
mod solve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use policy::SoftmaxPolicy;
pub use rollout::{rollout, rollout_with_rng, Step, Trajectory};
pub use sample::sample_states;
pub use schema::{MdpDocument, PolicyDocument, MDP_SCHEMA, POLICY_SCHEMA};
pub use solve::{
    evaluate_policy, expected_return, on_policy_distribution, visitation_counts,
    VisitationProfile,
};

/// Tolerance used when checking that probability vectors sum to one.
pub const PROB_TOL: f64 = 1e-9;

/// One outcome of taking an action: next state, reward and its probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub next_state: usize,
    pub reward: f64,
    pub probability: f64,
}

impl Transition {
    pub fn new(next_state: usize, reward: f64, probability: f64) -> Self {
        Self {
            next_state,
            reward,
            probability,
        }
    }
}

/// A finite episodic MDP with an explicit dynamics table.
///
/// `dynamics[s * num_actions + a]` lists the possible outcomes of taking `a`
/// in `s`. Absorbing states loop onto themselves with zero reward and never
/// carry initial probability mass.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    dynamics: Vec<Vec<Transition>>,
    discount: f64,
    initial_dist: Vec<f64>,
    absorbing: Vec<bool>,
    max_episode_steps: usize,
}

impl TabularMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        dynamics: Vec<Vec<Transition>>,
        discount: f64,
        initial_dist: Vec<f64>,
        absorbing_states: &[usize],
        max_episode_steps: usize,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::config("MDP needs at least one state and one action"));
        }
        if max_episode_steps == 0 {
            return Err(Error::config("max_episode_steps must be positive"));
        }
        if !(0.0..=1.0).contains(&discount) {
            return Err(Error::config(format!("discount {discount} outside [0, 1]")));
        }
        if dynamics.len() != num_states * num_actions {
            return Err(Error::config(format!(
                "dynamics has {} rows, expected {}",
                dynamics.len(),
                num_states * num_actions
            )));
        }
        if initial_dist.len() != num_states {
            return Err(Error::config("initial distribution length mismatch"));
        }
        let mut absorbing = vec![false; num_states];
        for &s in absorbing_states {
            if s >= num_states {
                return Err(Error::config(format!("absorbing state {s} out of range")));
            }
            absorbing[s] = true;
        }

        for (row_idx, row) in dynamics.iter().enumerate() {
            let (s, a) = (row_idx / num_actions, row_idx % num_actions);
            if row.is_empty() {
                return Err(Error::config(format!("no transitions for ({s}, {a})")));
            }
            let mut total = 0.0;
            for t in row {
                if t.next_state >= num_states {
                    return Err(Error::config(format!(
                        "transition ({s}, {a}) -> {} out of range",
                        t.next_state
                    )));
                }
                if !(0.0..=1.0).contains(&t.probability) || !t.reward.is_finite() {
                    return Err(Error::config(format!("invalid transition at ({s}, {a})")));
                }
                if absorbing[s] && t.probability > 0.0 && (t.next_state != s || t.reward != 0.0)
                {
                    return Err(Error::config(format!(
                        "absorbing state {s} must loop onto itself with zero reward"
                    )));
                }
                total += t.probability;
            }
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::config(format!(
                    "transition probabilities for ({s}, {a}) sum to {total}"
                )));
            }
        }

        let mut mass = 0.0;
        for (s, &p) in initial_dist.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config("initial distribution entry outside [0, 1]"));
            }
            if absorbing[s] && p > 0.0 {
                return Err(Error::config(format!(
                    "initial distribution puts mass on absorbing state {s}"
                )));
            }
            mass += p;
        }
        if (mass - 1.0).abs() > PROB_TOL {
            return Err(Error::config(format!("initial distribution sums to {mass}")));
        }

        Ok(Self {
            num_states,
            num_actions,
            dynamics,
            discount,
            initial_dist,
            absorbing,
            max_episode_steps,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn max_episode_steps(&self) -> usize {
        self.max_episode_steps
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    #[inline]
    pub fn transitions(&self, state: usize, action: usize) -> &[Transition] {
        &self.dynamics[state * self.num_actions + action]
    }

    /// Full dynamics table, row-major over `(state, action)`.
    pub fn dynamics(&self) -> &[Vec<Transition>] {
        &self.dynamics
    }

    #[inline]
    pub fn is_absorbing(&self, state: usize) -> bool {
        self.absorbing[state]
    }

    pub fn absorbing_states(&self) -> Vec<usize> {
        (0..self.num_states).filter(|&s| self.absorbing[s]).collect()
    }

    /// States reachable from the support of the initial distribution under
    /// some sequence of actions, in increasing index order.
    pub fn reachable_states(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_states];
        let mut stack: Vec<usize> = (0..self.num_states)
            .filter(|&s| self.initial_dist[s] > 0.0)
            .collect();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(s) = stack.pop() {
            for a in 0..self.num_actions {
                for t in self.transitions(s, a) {
                    if t.probability > 0.0 && !seen[t.next_state] {
                        seen[t.next_state] = true;
                        stack.push(t.next_state);
                    }
                }
            }
        }
        (0..self.num_states).filter(|&s| seen[s]).collect()
    }

    /// Reachable states that are not absorbing.
    pub fn reachable_transient_states(&self) -> Vec<usize> {
        self.reachable_states()
            .into_iter()
            .filter(|&s| !self.absorbing[s])
            .collect()
    }

    /// Checks that `policy` is defined over this MDP's state and action sets.
    pub fn check_policy(&self, policy: &SoftmaxPolicy) -> Result<()> {
        if policy.num_states() != self.num_states || policy.num_actions() != self.num_actions {
            return Err(Error::config(format!(
                "policy is {}x{}, MDP is {}x{}",
                policy.num_states(),
                policy.num_actions(),
                self.num_states,
                self.num_actions
            )));
        }
        Ok(())
    }

    /// Two MDPs share an encoding when their state and action counts agree.
    pub fn same_shape(&self, other: &TabularMdp) -> bool {
        self.num_states == other.num_states && self.num_actions == other.num_actions
    }

    /// Samples an outcome of `(state, action)` from a uniform draw in `[0, 1)`.
    #[inline]
    pub(crate) fn sample_transition(&self, state: usize, action: usize, u: f64) -> Transition {
        let row = self.transitions(state, action);
        let mut acc = 0.0;
        for t in row {
            acc += t.probability;
            if u < acc {
                return *t;
            }
        }
        *row.iter().rev().find(|t| t.probability > 0.0).unwrap_or(&row[0])
    }

    /// Samples a start state from a uniform draw in `[0, 1)`.
    pub(crate) fn sample_initial(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (s, &p) in self.initial_dist.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = s;
                if u < acc {
                    return s;
                }
            }
        }
        last
    }
}
