use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SoftmaxPolicy, TabularMdp};
use crate::error::Result;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// One sampled episode and its discounted return `Σ γ^i r_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start_state: usize,
    pub steps: Vec<Step>,
    pub return_value: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Discounted return-to-go at every step.
    pub fn returns_to_go(&self, discount: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.steps.len()];
        let mut acc = 0.0;
        for (i, step) in self.steps.iter().enumerate().rev() {
            acc = step.reward + discount * acc;
            out[i] = acc;
        }
        out
    }
}

/// Samples one episode with a seeded generator.
pub fn rollout(mdp: &TabularMdp, policy: &SoftmaxPolicy, rng_seed: u64) -> Result<Trajectory> {
    mdp.check_policy(policy)?;
    let mut rng = seed::rng(rng_seed);
    Ok(rollout_with_rng(mdp, policy, &mut rng))
}

/// Samples one episode from a caller-owned generator. Dimensions are not checked.
pub fn rollout_with_rng<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &SoftmaxPolicy,
    rng: &mut R,
) -> Trajectory {
    let start = mdp.sample_initial(rng.gen());
    let mut state = start;
    let mut steps = Vec::new();
    let mut ret = 0.0;
    let mut weight = 1.0;
    while !mdp.is_absorbing(state) && steps.len() < mdp.max_episode_steps() {
        let action = policy.sample_action(state, rng);
        let t = mdp.sample_transition(state, action, rng.gen());
        ret += weight * t.reward;
        weight *= mdp.discount();
        steps.push(Step {
            state,
            action,
            reward: t.reward,
            next_state: t.next_state,
        });
        state = t.next_state;
    }
    Trajectory {
        start_state: start,
        steps,
        return_value: ret,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{evaluate_policy, fixtures, Transition};

    #[test]
    fn start_state_absorbing_yields_empty_episode() {
        // The constructor forbids initial mass on absorbing states, so build
        // the degenerate single-state task directly.
        let mdp = TabularMdp {
            num_states: 1,
            num_actions: 3,
            dynamics: vec![vec![Transition::new(0, 0.0, 1.0)]; 3],
            discount: 1.0,
            initial_dist: vec![1.0],
            absorbing: vec![true],
            max_episode_steps: 10,
        };
        let t = rollout(&mdp, &SoftmaxPolicy::uniform(1, 3), 4).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.return_value, 0.0);
    }

    #[test]
    fn chain_returns_its_length() {
        let mdp = fixtures::chain(2, 2, 1.0);
        let t = rollout(&mdp, &SoftmaxPolicy::uniform(3, 2), 11).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.return_value, 2.0);
        assert!(mdp.is_absorbing(t.steps.last().unwrap().next_state));
    }

    #[test]
    fn same_seed_same_trajectory() {
        let mdp = fixtures::two_state(0.9);
        let p = SoftmaxPolicy::uniform(3, 2);
        assert_eq!(rollout(&mdp, &p, 5).unwrap(), rollout(&mdp, &p, 5).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let mdp = fixtures::two_state(0.9);
        assert!(rollout(&mdp, &SoftmaxPolicy::uniform(2, 2), 0).unwrap_err().is_config());
    }

    #[test]
    fn return_value_is_discounted_sum() {
        let mdp = fixtures::two_state(0.9);
        let p = SoftmaxPolicy::uniform(3, 2);
        for seed in 0..20 {
            let t = rollout(&mdp, &p, seed).unwrap();
            let direct: f64 = t
                .steps
                .iter()
                .enumerate()
                .map(|(i, s)| 0.9f64.powi(i as i32) * s.reward)
                .sum();
            assert!((direct - t.return_value).abs() < 1e-9);
            assert!(t.len() <= mdp.max_episode_steps());
        }
    }

    #[test]
    fn mean_rollout_return_matches_exact_value() {
        let mdp = fixtures::two_state(0.95);
        let p = SoftmaxPolicy::from_logits(3, 2, vec![0.4, -0.2, -0.7, 0.3, 0.0, 0.0], 1.0)
            .unwrap();
        let v = evaluate_policy(&mdp, &p).unwrap();
        let exact: f64 = mdp.initial_dist().iter().zip(&v).map(|(m, v)| m * v).sum();

        let mut rng = seed::rng(2024);
        let n = 10_000;
        let returns: Vec<f64> = (0..n)
            .map(|_| rollout_with_rng(&mdp, &p, &mut rng).return_value)
            .collect();
        let mean = returns.iter().sum::<f64>() / n as f64;
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * se,
            "mean {mean} exact {exact} se {se}"
        );
    }
}
