//! Task difference, task relevance, and the sequential selection loop.

mod info;
mod relevance;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::TaskSpec;
use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, TrainedTask};
use crate::mdp::TabularMdp;
use crate::seed;

pub use info::{
    policy_entropy, policy_kl, state_entropy, state_kl, task_difference, ValidationStateSample,
};
pub use relevance::{relevance_evaluation, RelevanceTrace};

pub const SELECTION_SCHEMA: &str = "itts.selection/1";

/// Which of the two filters are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Difference and relevance, as in the full algorithm.
    Itts,
    /// Relevance test forced true.
    DifferenceOnly,
    /// Difference threshold treated as zero.
    RelevanceOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateOrder {
    /// Candidates in the order they were given.
    Manifest,
    /// Seeded shuffle of the given order.
    Shuffled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    /// Difference threshold `ε` (nats).
    pub epsilon: f64,
    /// Repetitions `i` of the execute / fine-tune / measure cycle.
    pub relevance_repeats: usize,
    /// Fine-tuning episodes `l`.
    pub learning_episodes: usize,
    /// Number of states `n` in the validation sample and in each executed sample.
    pub validation_state_count: usize,
    pub mode: SelectionMode,
    pub order: CandidateOrder,
    pub rng_seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.025,
            relevance_repeats: 5,
            learning_episodes: 10,
            validation_state_count: 100,
            mode: SelectionMode::Itts,
            order: CandidateOrder::Manifest,
            rng_seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::config("epsilon must be non-negative"));
        }
        if self.relevance_repeats == 0 || self.learning_episodes == 0 || self.validation_state_count == 0 {
            return Err(Error::config("relevance_repeats, learning_episodes and validation_state_count must be at least 1"));
        }
        Ok(())
    }

    /// Threshold actually applied, after the mode is taken into account.
    pub fn effective_epsilon(&self) -> f64 {
        match self.mode {
            SelectionMode::RelevanceOnly => 0.0,
            _ => self.epsilon,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    NotDifferent,
    NotRelevant,
}

/// Estimated `δ(candidate, member)` against a task already selected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDelta {
    pub member: usize,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub candidate: usize,
    /// Differences to every member of the selection at evaluation time.
    pub deltas: Vec<PairDelta>,
    pub different: bool,
    pub relevant: bool,
    /// Empty when the relevance test is disabled.
    pub relevance: Vec<RelevanceTrace>,
    pub decision: Decision,
}

impl CandidateRecord {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accepted
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub schema_version: String,
    pub config: SelectionConfig,
    /// Candidate indices in processing order.
    pub candidate_order: Vec<usize>,
    /// Selected candidate indices, in the order they were admitted.
    pub selected: Vec<usize>,
    /// Specs of the selected tasks, where known.
    pub selected_specs: Vec<TaskSpec>,
    pub candidates: Vec<CandidateRecord>,
}

impl SelectionResult {
    pub fn record(&self, candidate: usize) -> Option<&CandidateRecord> {
        self.candidates.iter().find(|r| r.candidate == candidate)
    }

    /// Every admitted task is at least `ε` away from each earlier member.
    pub fn difference_certificate_holds(&self) -> bool {
        let eps = self.config.effective_epsilon();
        self.selected.iter().enumerate().all(|(k, &t)| {
            let Some(rec) = self.record(t) else { return false };
            self.selected[..k].iter().all(|&c| {
                rec.deltas.iter().any(|d| d.member == c && d.delta >= eps)
            })
        })
    }

    /// Every admitted task has a validation task with a non-positive entropy change.
    pub fn relevance_certificate_holds(&self) -> bool {
        self.selected.iter().all(|&t| {
            self.record(t)
                .is_some_and(|r| r.relevance.iter().any(|tr| tr.relevant && tr.rho_hat <= 0.0))
        })
    }
}

/// Relevance verdicts for every candidate, evaluated in parallel.
pub fn evaluate_relevance(
    trained: &[TrainedTask],
    validation: &[TabularMdp],
    config: &SelectionConfig,
    learner: &LearnerConfig,
) -> Result<Vec<(bool, Vec<RelevanceTrace>)>> {
    trained
        .par_iter()
        .enumerate()
        .map(|(idx, task)| relevance_evaluation(idx, task, validation, config, learner))
        .collect()
}

/// Greedy selection of training tasks that are pairwise different and
/// relevant to the validation tasks.
///
/// Relevance is evaluated for every candidate (concurrently); the admission
/// loop then walks the candidates in order, computing the difference to every
/// task admitted so far.
pub fn select_tasks(
    trained: &[TrainedTask],
    validation: &[TabularMdp],
    sample: &ValidationStateSample,
    config: &SelectionConfig,
    learner: &LearnerConfig,
) -> Result<SelectionResult> {
    config.validate()?;
    let relevance = match config.mode {
        SelectionMode::DifferenceOnly => vec![(true, Vec::new()); trained.len()],
        _ => evaluate_relevance(trained, validation, config, learner)?,
    };
    select_with_relevance(trained, sample, config, relevance)
}

/// The admission loop, given precomputed relevance verdicts (one per candidate).
pub fn select_with_relevance(
    trained: &[TrainedTask],
    sample: &ValidationStateSample,
    config: &SelectionConfig,
    relevance: Vec<(bool, Vec<RelevanceTrace>)>,
) -> Result<SelectionResult> {
    config.validate()?;
    if relevance.len() != trained.len() {
        return Err(Error::config("one relevance verdict per candidate is required"));
    }
    let mut order: Vec<usize> = (0..trained.len()).collect();
    if config.order == CandidateOrder::Shuffled {
        order.shuffle(&mut seed::rng(seed::derive(config.rng_seed, &[seed::tag("order")])));
    }
    let eps = config.effective_epsilon();

    let mut slots: Vec<Option<(bool, Vec<RelevanceTrace>)>> = relevance.into_iter().map(Some).collect();
    let mut selected: Vec<usize> = Vec::new();
    let mut records = Vec::with_capacity(trained.len());
    for &t in &order {
        let mut deltas = Vec::with_capacity(selected.len());
        let mut different = true;
        for &c in &selected {
            let delta = task_difference(&trained[t], &trained[c], sample)?;
            different &= delta >= eps;
            deltas.push(PairDelta { member: c, delta });
        }
        let (relevant, traces) = slots[t].take().expect("each candidate visited once");
        let decision = match (different, relevant) {
            (true, true) => Decision::Accepted,
            (false, _) => Decision::NotDifferent,
            (true, false) => Decision::NotRelevant,
        };
        if decision == Decision::Accepted {
            selected.push(t);
        }
        records.push(CandidateRecord {
            candidate: t,
            deltas,
            different,
            relevant,
            relevance: traces,
            decision,
        });
    }
    let selected_specs = selected.iter().filter_map(|&i| trained[i].spec.clone()).collect();
    Ok(SelectionResult {
        schema_version: SELECTION_SCHEMA.to_string(),
        config: config.clone(),
        candidate_order: order,
        selected,
        selected_specs,
        candidates: records,
    })
}
