use serde::{Deserialize, Serialize};

use super::info::policy_entropy;
use super::SelectionConfig;
use crate::error::Result;
use crate::learner::{execute_policy, fine_tune, LearnerConfig, TrainedTask};
use crate::mdp::TabularMdp;
use crate::seed;

/// Entropy change of one training task's policy transferred to one validation task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelevanceTrace {
    /// Position of the candidate in the training list.
    pub candidate: usize,
    /// Position of the task in the validation list.
    pub validation: usize,
    /// Summed mean entropy of `π*_t` on `S_e` over the repeats.
    pub eta_before: f64,
    /// Summed mean entropy of the fine-tuned policy on `S_e` over the repeats.
    pub eta_after: f64,
    /// `(eta_after - eta_before) / repeats`.
    pub rho_hat: f64,
    pub relevant: bool,
}

/// Decides whether `task` is relevant to at least one validation task.
///
/// For each validation task in order, the transferred policy is executed to
/// collect `n` states, fine-tuned for `l` episodes, and the mean entropy on
/// those states is compared before and after; this repeats `i` times with
/// fresh states. The first validation task with a non-positive averaged
/// entropy change makes the task relevant and stops the evaluation.
pub fn relevance_evaluation(
    candidate: usize,
    task: &TrainedTask,
    validation: &[TabularMdp],
    config: &SelectionConfig,
    learner: &LearnerConfig,
) -> Result<(bool, Vec<RelevanceTrace>)> {
    config.validate()?;
    let start = &task.optimal_policy;
    let mut traces = Vec::new();
    for (f, mdp) in validation.iter().enumerate() {
        let mut eta_before = 0.0;
        let mut eta_after = 0.0;
        for rep in 0..config.relevance_repeats {
            let base = seed::derive(
                config.rng_seed,
                &[seed::tag("relevance"), candidate as u64, f as u64, rep as u64],
            );
            let visited = execute_policy(start, mdp, config.validation_state_count, seed::derive(base, &[0]))?;
            let tuned = fine_tune(
                start,
                mdp,
                config.learning_episodes,
                &learner.with_seed(seed::derive(base, &[1])),
            )?;
            eta_before += policy_entropy(start, &visited)?;
            eta_after += policy_entropy(&tuned, &visited)?;
        }
        let rho_hat = (eta_after - eta_before) / config.relevance_repeats as f64;
        let relevant = rho_hat <= 0.0;
        traces.push(RelevanceTrace {
            candidate,
            validation: f,
            eta_before,
            eta_after,
            rho_hat,
            relevant,
        });
        if relevant {
            return Ok((true, traces));
        }
    }
    Ok((false, traces))
}
