use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::TrainedTask;
use crate::mdp::{SoftmaxPolicy, TabularMdp};
use crate::seed;

/// States drawn from the validation tasks, tagged with the task they came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationStateSample {
    pub entries: Vec<(usize, usize)>,
}

impl ValidationStateSample {
    /// `n` draws: a validation task uniformly, then one of its reachable
    /// transient states uniformly (with replacement).
    pub fn sample(validation: &[TabularMdp], n: usize, rng_seed: u64) -> Result<Self> {
        if validation.is_empty() {
            return Err(Error::config("validation set is empty"));
        }
        if n == 0 {
            return Err(Error::config("validation state count must be at least 1"));
        }
        let candidates = reachable_per_task(validation)?;
        let mut rng = seed::rng(rng_seed);
        let entries = (0..n)
            .map(|_| {
                let f = rng.gen_range(0..validation.len());
                let states = &candidates[f];
                (f, states[rng.gen_range(0..states.len())])
            })
            .collect();
        Ok(Self { entries })
    }

    /// Every reachable transient state of every validation task, replicated so
    /// that each task carries equal total weight. Averaging over the entries
    /// is then exactly the per-task average of per-state terms.
    pub fn exhaustive(validation: &[TabularMdp]) -> Result<Self> {
        if validation.is_empty() {
            return Err(Error::config("validation set is empty"));
        }
        let candidates = reachable_per_task(validation)?;
        let lcm = candidates.iter().fold(1usize, |acc, c| lcm(acc, c.len()));
        let mut entries = Vec::with_capacity(lcm * validation.len());
        for (f, states) in candidates.iter().enumerate() {
            let copies = lcm / states.len();
            for _ in 0..copies {
                entries.extend(states.iter().map(|&s| (f, s)));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn states(&self) -> Vec<usize> {
        self.entries.iter().map(|&(_, s)| s).collect()
    }
}

fn reachable_per_task(validation: &[TabularMdp]) -> Result<Vec<Vec<usize>>> {
    validation
        .iter()
        .enumerate()
        .map(|(f, mdp)| {
            let states = mdp.reachable_transient_states();
            if states.is_empty() {
                Err(Error::config(format!("validation task {f} has no transient states")))
            } else {
                Ok(states)
            }
        })
        .collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Entropy `H_π(s) = -Σ_a π(a|s) ln π(a|s)` of one state, in nats.
pub fn state_entropy(policy: &SoftmaxPolicy, state: usize) -> f64 {
    let mut log_p = vec![0.0; policy.num_actions()];
    policy.log_probs_into(state, &mut log_p);
    let h = -log_p.iter().map(|lp| lp.exp() * lp).sum::<f64>();
    h.clamp(0.0, (policy.num_actions() as f64).ln())
}

/// Mean per-state entropy over `states` (repeats count repeatedly).
pub fn policy_entropy(policy: &SoftmaxPolicy, states: &[usize]) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::config("entropy needs at least one state"));
    }
    Ok(states.iter().map(|&s| state_entropy(policy, s)).sum::<f64>() / states.len() as f64)
}

/// `KL(p(·|s) ‖ q(·|s))` in nats for one state.
pub fn state_kl(p: &SoftmaxPolicy, q: &SoftmaxPolicy, state: usize) -> f64 {
    let na = p.num_actions();
    let mut lp = vec![0.0; na];
    let mut lq = vec![0.0; na];
    p.log_probs_into(state, &mut lp);
    q.log_probs_into(state, &mut lq);
    let kl: f64 = lp.iter().zip(&lq).map(|(a, b)| a.exp() * (a - b)).sum();
    // Rounding can push a true zero slightly negative.
    kl.max(0.0)
}

/// Mean KL divergence of `p` from `q` over the sampled validation states.
pub fn policy_kl(
    p: &SoftmaxPolicy,
    q: &SoftmaxPolicy,
    sample: &ValidationStateSample,
) -> Result<f64> {
    if p.num_states() != q.num_states() || p.num_actions() != q.num_actions() {
        return Err(Error::config("KL between policies of different shapes"));
    }
    if sample.is_empty() {
        return Err(Error::config("KL needs at least one sampled state"));
    }
    if let Some(&(_, s)) = sample.entries.iter().find(|&&(_, s)| s >= p.num_states()) {
        return Err(Error::config(format!("sampled state {s} outside policy")));
    }
    Ok(sample.entries.iter().map(|&(_, s)| state_kl(p, q, s)).sum::<f64>() / sample.len() as f64)
}

/// Sampled estimate of the difference `δ(t1, t2)` between two trained tasks:
/// the mean KL of `π*_{t1}` from `π*_{t2}` over validation states.
pub fn task_difference(
    t1: &TrainedTask,
    t2: &TrainedTask,
    sample: &ValidationStateSample,
) -> Result<f64> {
    policy_kl(&t1.optimal_policy, &t2.optimal_policy, sample)
}
