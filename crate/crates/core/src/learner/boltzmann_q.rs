use rand::Rng as _;

use super::{Agent, LearnerConfig};
use crate::error::{Error, Result};
use crate::mdp::{SoftmaxPolicy, TabularMdp};
use crate::seed::Rng;

/// Q-learning with Boltzmann exploration at a fixed temperature. The policy
/// is `softmax(Q / temperature)`, so it stays strictly positive.
pub(super) struct BoltzmannQ {
    start: SoftmaxPolicy,
    updated: bool,
    q: Vec<f64>,
    num_actions: usize,
    temperature: f64,
    step_size: f64,
}

impl BoltzmannQ {
    pub(super) fn new(start: SoftmaxPolicy, config: &LearnerConfig) -> Self {
        // Rescale so that the extracted policy initially equals `start`.
        let scale = config.q_temperature / start.temperature();
        Self {
            q: start.logits().iter().map(|l| l * scale).collect(),
            num_actions: start.num_actions(),
            start,
            updated: false,
            temperature: config.q_temperature,
            step_size: config.step_size,
        }
    }

    fn sample_action(&self, state: usize, rng: &mut Rng) -> usize {
        let na = self.num_actions;
        let row = &self.q[state * na..(state + 1) * na];
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let weights: Vec<f64> = row.iter().map(|q| ((q - max) / self.temperature).exp()).collect();
        let total: f64 = weights.iter().sum();
        let u = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        for (a, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return a;
            }
        }
        na - 1
    }
}

impl Agent for BoltzmannQ {
    fn episode(&mut self, mdp: &TabularMdp, rng: &mut Rng) -> Result<f64> {
        let mut state = mdp.sample_initial(rng.gen());
        let na = self.num_actions;
        let mut ret = 0.0;
        let mut weight = 1.0;
        let mut steps = 0;
        while !mdp.is_absorbing(state) && steps < mdp.max_episode_steps() {
            let action = self.sample_action(state, rng);
            let t = mdp.sample_transition(state, action, rng.gen());
            if self.step_size != 0.0 {
                let bootstrap = if mdp.is_absorbing(t.next_state) {
                    0.0
                } else {
                    let row = &self.q[t.next_state * na..(t.next_state + 1) * na];
                    row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
                };
                let target = t.reward + mdp.discount() * bootstrap;
                let q = &mut self.q[state * na + action];
                *q += self.step_size * (target - *q);
                if !q.is_finite() {
                    return Err(Error::numerical("Q-learning produced a non-finite value"));
                }
                self.updated = true;
            }
            ret += weight * t.reward;
            weight *= mdp.discount();
            state = t.next_state;
            steps += 1;
        }
        Ok(ret)
    }

    fn policy(&self) -> SoftmaxPolicy {
        if !self.updated {
            return self.start.clone();
        }
        SoftmaxPolicy::from_logits(
            self.start.num_states(),
            self.num_actions,
            self.q.clone(),
            self.temperature,
        )
        .expect("Q table stays finite")
    }
}
