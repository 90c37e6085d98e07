use crate::error::Result;
use crate::mdp::{evaluate_policy, visitation_counts, SoftmaxPolicy, TabularMdp, Trajectory};

/// Exact gradient of the expected initial-state return with respect to the
/// policy logits:
/// `∇J = Σ_s ζ_γ(s) Σ_a π(a|s) Q(s,a) ∇ log π(a|s)`,
/// where `ζ_γ` is the discounted occupancy from the initial distribution.
///
/// Returned row-major over `(state, action)`.
pub fn exact_policy_gradient(mdp: &TabularMdp, policy: &SoftmaxPolicy) -> Result<Vec<f64>> {
    let values = evaluate_policy(mdp, policy)?;
    let occupancy = visitation_counts(mdp, policy, mdp.discount())?;
    let na = mdp.num_actions();
    let tau = policy.temperature();
    let mut grad = vec![0.0; mdp.num_states() * na];
    for s in 0..mdp.num_states() {
        if mdp.is_absorbing(s) || occupancy[s] == 0.0 {
            continue;
        }
        let probs = policy.probs(s);
        let q: Vec<f64> = (0..na)
            .map(|a| {
                mdp.transitions(s, a)
                    .iter()
                    .map(|t| t.probability * (t.reward + mdp.discount() * values[t.next_state]))
                    .sum()
            })
            .collect();
        let v: f64 = probs.iter().zip(&q).map(|(p, q)| p * q).sum();
        // Σ_a π_a Q_a (1[a=b] - π_b) / τ = π_b (Q_b - v) / τ
        for b in 0..na {
            grad[s * na + b] = occupancy[s] * probs[b] * (q[b] - v) / tau;
        }
    }
    Ok(grad)
}

/// Single-episode REINFORCE estimate `Σ_t γ^t G_t ∇ log π(a_t|s_t)` (no baseline).
/// Its expectation equals [`exact_policy_gradient`].
pub fn reinforce_gradient_estimate(
    trajectory: &Trajectory,
    policy: &SoftmaxPolicy,
    discount: f64,
) -> Vec<f64> {
    let na = policy.num_actions();
    let tau = policy.temperature();
    let mut grad = vec![0.0; policy.num_states() * na];
    let returns = trajectory.returns_to_go(discount);
    let mut weight = 1.0;
    for (step, g) in trajectory.steps.iter().zip(returns) {
        let probs = policy.probs(step.state);
        for b in 0..na {
            let indicator = if b == step.action { 1.0 } else { 0.0 };
            grad[step.state * na + b] += weight * g * (indicator - probs[b]) / tau;
        }
        weight *= discount;
    }
    grad
}
