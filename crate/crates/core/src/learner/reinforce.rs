use super::{Agent, LearnerConfig};
use crate::error::{Error, Result};
use crate::mdp::{rollout_with_rng, SoftmaxPolicy, TabularMdp};
use crate::seed::Rng;

/// REINFORCE on softmax logits with a tabular state-value baseline and an
/// entropy bonus.
pub(super) struct Reinforce {
    policy: SoftmaxPolicy,
    baseline: Vec<f64>,
    step_size: f64,
    baseline_step_size: f64,
    entropy_regularizer: f64,
}

impl Reinforce {
    pub(super) fn new(policy: SoftmaxPolicy, config: &LearnerConfig) -> Self {
        let baseline = vec![0.0; policy.num_states()];
        Self {
            policy,
            baseline,
            step_size: config.step_size,
            baseline_step_size: config.baseline_step_size,
            entropy_regularizer: config.entropy_regularizer,
        }
    }
}

impl Agent for Reinforce {
    fn episode(&mut self, mdp: &TabularMdp, rng: &mut Rng) -> Result<f64> {
        let trajectory = rollout_with_rng(mdp, &self.policy, rng);
        if self.step_size == 0.0 {
            return Ok(trajectory.return_value);
        }
        let na = self.policy.num_actions();
        let tau = self.policy.temperature();
        let gamma = mdp.discount();
        let returns = trajectory.returns_to_go(gamma);

        // Gradients are taken at the policy that generated the episode.
        let mut updates: Vec<(usize, Vec<f64>)> = Vec::with_capacity(trajectory.len());
        let mut probs = vec![0.0; na];
        let mut discount_pow = 1.0;
        for (step, &g) in trajectory.steps.iter().zip(&returns) {
            let s = step.state;
            self.policy.probs_into(s, &mut probs);
            let advantage = g - self.baseline[s];
            let entropy = -probs.iter().map(|p| p * p.ln()).sum::<f64>();
            let delta: Vec<f64> = (0..na)
                .map(|b| {
                    let indicator = if b == step.action { 1.0 } else { 0.0 };
                    let score = (indicator - probs[b]) / tau;
                    let entropy_grad = -probs[b] * (probs[b].ln() + entropy) / tau;
                    self.step_size
                        * (discount_pow * advantage * score + self.entropy_regularizer * entropy_grad)
                })
                .collect();
            updates.push((s, delta));
            discount_pow *= gamma;
        }
        for (step, &g) in trajectory.steps.iter().zip(&returns) {
            let s = step.state;
            self.baseline[s] += self.baseline_step_size * (g - self.baseline[s]);
        }
        for (s, delta) in updates {
            for (l, d) in self.policy.logit_row_mut(s).iter_mut().zip(delta) {
                *l += d;
            }
        }
        if self.policy.logits().iter().any(|l| !l.is_finite()) {
            return Err(Error::numerical("REINFORCE produced a non-finite logit"));
        }
        Ok(trajectory.return_value)
    }

    fn policy(&self) -> SoftmaxPolicy {
        self.policy.clone()
    }
}
