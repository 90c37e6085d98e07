use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{SoftmaxPolicy, TabularMdp};
use crate::error::{Error, Result};

/// Expected per-episode visit counts `ζ` and the on-policy distribution `d = ζ / Σζ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitationProfile {
    pub visit_counts: Vec<f64>,
    pub on_policy_dist: Vec<f64>,
}

fn probability_table(policy: &SoftmaxPolicy) -> Vec<f64> {
    let a = policy.num_actions();
    let mut table = vec![0.0; policy.num_states() * a];
    for (s, row) in table.chunks_mut(a).enumerate() {
        policy.probs_into(s, row);
    }
    table
}

/// Exact state values `v_π` from the Bellman linear system `(I - γ P_π) v = r_π`.
///
/// Absorbing states have value zero. The system is solved densely over all
/// transient states.
pub fn evaluate_policy(mdp: &TabularMdp, policy: &SoftmaxPolicy) -> Result<Vec<f64>> {
    mdp.check_policy(policy)?;
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let gamma = mdp.discount();
    let pi = probability_table(policy);

    let transient: Vec<usize> = (0..n).filter(|&s| !mdp.is_absorbing(s)).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &s) in transient.iter().enumerate() {
        index[s] = i;
    }
    let m = transient.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &s) in transient.iter().enumerate() {
        for act in 0..na {
            let p_a = pi[s * na + act];
            for t in mdp.transitions(s, act) {
                let w = p_a * t.probability;
                b[i] += w * t.reward;
                let j = index[t.next_state];
                if j != usize::MAX {
                    a[(i, j)] -= gamma * w;
                }
            }
        }
    }

    let v = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::numerical("singular Bellman system: policy never terminates (γ = 1?)"))?;
    let residual = (&a * &v - &b).amax();
    let scale = v.amax().max(1.0);
    if !residual.is_finite() || residual > 1e-8 * scale {
        return Err(Error::numerical(format!(
            "Bellman system residual {residual:e} too large; task is not episodic under this policy"
        )));
    }

    let mut values = vec![0.0; n];
    for (i, &s) in transient.iter().enumerate() {
        values[s] = v[i];
    }
    Ok(values)
}

/// Solves `ζ(s) = μ(s) + w Σ_{s̄} ζ(s̄) Σ_a π(a|s̄) p(s|s̄,a)` over reachable
/// transient states. `w = 1` gives undiscounted visit counts; `w = γ` gives
/// the discounted occupancy used by the policy-gradient theorem.
pub fn visitation_counts(
    mdp: &TabularMdp,
    policy: &SoftmaxPolicy,
    weight: f64,
) -> Result<Vec<f64>> {
    mdp.check_policy(policy)?;
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let pi = probability_table(policy);

    let transient = mdp.reachable_transient_states();
    let mut index = vec![usize::MAX; n];
    for (i, &s) in transient.iter().enumerate() {
        index[s] = i;
    }
    let m = transient.len();
    // Row i: ζ(s_i) - w Σ_j ζ(s_j) P(s_j -> s_i) = μ(s_i)
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (j, &src) in transient.iter().enumerate() {
        b[j] = mdp.initial_dist()[src];
        for act in 0..na {
            let p_a = pi[src * na + act];
            for t in mdp.transitions(src, act) {
                let i = index[t.next_state];
                if i != usize::MAX {
                    a[(i, j)] -= weight * p_a * t.probability;
                }
            }
        }
    }
    let zeta = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::numerical("singular visitation system: task is not episodic"))?;
    let residual = (&a * &zeta - &b).amax();
    let max = zeta.amax();
    if !residual.is_finite()
        || residual > 1e-8 * max.max(1.0)
        || max > 1e12
        || zeta.iter().any(|&z| z < -1e-9)
    {
        return Err(Error::numerical(
            "visitation system has no finite non-negative solution: task is not episodic",
        ));
    }
    let mut counts = vec![0.0; n];
    for (i, &s) in transient.iter().enumerate() {
        counts[s] = zeta[i].max(0.0);
    }
    Ok(counts)
}

/// Exact on-policy state distribution: the expected fraction of an episode's
/// time steps spent in each state.
pub fn on_policy_distribution(
    mdp: &TabularMdp,
    policy: &SoftmaxPolicy,
) -> Result<VisitationProfile> {
    let visit_counts = visitation_counts(mdp, policy, 1.0)?;
    let total: f64 = visit_counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::numerical("no transient state is ever visited"));
    }
    let on_policy_dist = visit_counts.iter().map(|z| z / total).collect();
    Ok(VisitationProfile {
        visit_counts,
        on_policy_dist,
    })
}

/// Expected discounted return of an episode truncated at `max_episode_steps`,
/// starting from the initial distribution. This is exactly the mean of
/// [`rollout`](super::rollout) returns.
pub fn expected_return(mdp: &TabularMdp, policy: &SoftmaxPolicy) -> Result<f64> {
    mdp.check_policy(policy)?;
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let gamma = mdp.discount();
    let pi = probability_table(policy);
    let states = mdp.reachable_transient_states();

    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..mdp.max_episode_steps() {
        for &s in &states {
            let mut acc = 0.0;
            for act in 0..na {
                let p_a = pi[s * na + act];
                let mut q = 0.0;
                for t in mdp.transitions(s, act) {
                    q += t.probability * (t.reward + gamma * v[t.next_state]);
                }
                acc += p_a * q;
            }
            next[s] = acc;
        }
        std::mem::swap(&mut v, &mut next);
    }
    let value = states.iter().map(|&s| mdp.initial_dist()[s] * v[s]).sum::<f64>();
    if !value.is_finite() {
        return Err(Error::numerical("non-finite expected return"));
    }
    Ok(value)
}
