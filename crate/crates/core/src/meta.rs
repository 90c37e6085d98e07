//! First-order meta-learning over softmax logits and the few-episode
//! adaptation protocol used to score a meta-learned initialization.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::learner::{fine_tune, fine_tune_with_returns, LearnerConfig};
use crate::mdp::{expected_return, SoftmaxPolicy, TabularMdp};
use crate::seed;
use crate::stats::Summary;

pub const META_POLICY_SCHEMA: &str = "itts.meta_policy/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetaConfig {
    pub meta_iterations: usize,
    pub tasks_per_meta_batch: usize,
    pub inner_episodes: usize,
    pub inner_step_size: f64,
    /// Interpolation factor towards the mean adapted logits, in `[0, 1]`.
    pub meta_step_size: f64,
    pub rng_seed: u64,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            meta_iterations: 100,
            tasks_per_meta_batch: 4,
            inner_episodes: 10,
            inner_step_size: 0.5,
            meta_step_size: 0.1,
            rng_seed: 0,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self, task_count: usize) -> Result<()> {
        if self.meta_iterations == 0 || self.tasks_per_meta_batch == 0 || self.inner_episodes == 0 {
            return Err(Error::config("meta_iterations, tasks_per_meta_batch and inner_episodes must be positive"));
        }
        if self.tasks_per_meta_batch > task_count {
            return Err(Error::config(format!(
                "meta batch of {} exceeds the {task_count} available tasks",
                self.tasks_per_meta_batch
            )));
        }
        if !(self.inner_step_size >= 0.0 && self.inner_step_size.is_finite()) {
            return Err(Error::config("inner_step_size must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.meta_step_size) {
            return Err(Error::config("meta_step_size must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Copy with the batch size clamped to the task count.
    pub fn clamped_to(&self, task_count: usize) -> Self {
        Self {
            tasks_per_meta_batch: self.tasks_per_meta_batch.min(task_count.max(1)),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 over the serialized task set.
    pub task_set_digest: String,
    pub task_labels: Vec<String>,
    pub config: MetaConfig,
    pub learner: LearnerConfig,
}

/// A meta-learned policy initialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaPolicy {
    pub schema_version: String,
    pub init: SoftmaxPolicy,
    pub provenance: Provenance,
}

pub fn task_set_digest(task_set: &[TabularMdp]) -> Result<String> {
    let mut hasher = Sha256::new();
    for mdp in task_set {
        hasher.update(serde_json::to_vec(mdp)?);
        hasher.update(b"\n");
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Meta-trains an initialization on `task_set`.
///
/// Each iteration samples a batch of tasks with replacement, fine-tunes the
/// current initialization on each for `inner_episodes`, and moves the
/// initialization towards the mean of the adapted logits by `meta_step_size`.
pub fn meta_train(
    task_set: &[TabularMdp],
    config: &MetaConfig,
    learner: &LearnerConfig,
) -> Result<MetaPolicy> {
    meta_train_labeled(task_set, &[], config, learner)
}

/// [`meta_train`] with human-readable task labels recorded in the provenance.
pub fn meta_train_labeled(
    task_set: &[TabularMdp],
    labels: &[String],
    config: &MetaConfig,
    learner: &LearnerConfig,
) -> Result<MetaPolicy> {
    let Some(first) = task_set.first() else {
        return Err(Error::config("meta-training needs at least one task"));
    };
    if task_set.iter().any(|m| !m.same_shape(first)) {
        return Err(Error::config("meta-training tasks must share dimensions"));
    }
    config.validate(task_set.len())?;
    learner.validate()?;

    let inner = learner.with_step_size(config.inner_step_size);
    let mut init = SoftmaxPolicy::uniform(first.num_states(), first.num_actions());
    let beta = config.meta_step_size;
    for it in 0..config.meta_iterations {
        let mut batch_rng = seed::rng(seed::derive(config.rng_seed, &[seed::tag("batch"), it as u64]));
        let batch: Vec<usize> = (0..config.tasks_per_meta_batch)
            .map(|_| batch_rng.gen_range(0..task_set.len()))
            .collect();
        let adapted: Vec<SoftmaxPolicy> = batch
            .par_iter()
            .enumerate()
            .map(|(k, &task)| {
                let cfg = inner.with_seed(seed::derive(
                    config.rng_seed,
                    &[seed::tag("inner"), it as u64, k as u64],
                ));
                fine_tune(&init, &task_set[task], config.inner_episodes, &cfg)
            })
            .collect::<Result<_>>()?;

        let count = adapted.len() as f64;
        let logits = init.logits_mut();
        for (i, l) in logits.iter_mut().enumerate() {
            let mean = adapted.iter().map(|p| p.logits()[i]).sum::<f64>() / count;
            *l = (1.0 - beta) * *l + beta * mean;
        }
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::numerical("meta-update produced a non-finite logit"));
        }
    }

    Ok(MetaPolicy {
        schema_version: META_POLICY_SCHEMA.to_string(),
        init,
        provenance: Provenance {
            task_set_digest: task_set_digest(task_set)?,
            task_labels: labels.to_vec(),
            config: config.clone(),
            learner: learner.clone(),
        },
    })
}

/// Returns recorded while adapting to one test task, over evaluation seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptationCurve {
    pub test_task: usize,
    /// Mean sampled return of each adaptation episode across seeds.
    pub mean_returns: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// `per_seed_returns[seed][episode]`.
    pub per_seed_returns: Vec<Vec<f64>>,
    /// Exact expected return of the adapted policy, per seed.
    pub per_seed_final: Vec<f64>,
    /// Mean of `per_seed_final`.
    pub final_return: f64,
    pub final_summary: Summary,
}

/// Adapts copies of the meta-learned initialization to each test task and
/// records the learning curves. Seeds derive from `learner.rng_seed`.
pub fn evaluate_meta_policy(
    meta: &MetaPolicy,
    test_tasks: &[TabularMdp],
    adaptation_episodes: usize,
    eval_seeds: usize,
    learner: &LearnerConfig,
) -> Result<Vec<AdaptationCurve>> {
    if adaptation_episodes == 0 {
        return Err(Error::config("adaptation needs at least one episode"));
    }
    if eval_seeds == 0 {
        return Err(Error::config("evaluation needs at least one seed"));
    }
    let jobs: Vec<(usize, usize)> = (0..test_tasks.len())
        .flat_map(|j| (0..eval_seeds).map(move |e| (j, e)))
        .collect();
    let runs: Vec<(Vec<f64>, f64)> = jobs
        .par_iter()
        .map(|&(j, e)| {
            let cfg = learner.with_seed(seed::derive(
                learner.rng_seed,
                &[seed::tag("adapt"), j as u64, e as u64],
            ));
            let (adapted, returns) =
                fine_tune_with_returns(&meta.init, &test_tasks[j], adaptation_episodes, &cfg)?;
            Ok((returns, expected_return(&test_tasks[j], &adapted)?))
        })
        .collect::<Result<_>>()?;

    Ok(runs
        .chunks(eval_seeds)
        .enumerate()
        .map(|(j, chunk)| {
            let per_seed_returns: Vec<Vec<f64>> = chunk.iter().map(|(r, _)| r.clone()).collect();
            let per_seed_final: Vec<f64> = chunk.iter().map(|(_, f)| *f).collect();
            let episode_stats: Vec<Summary> = (0..adaptation_episodes)
                .map(|ep| Summary::of(&per_seed_returns.iter().map(|r| r[ep]).collect::<Vec<_>>()))
                .collect();
            let final_summary = Summary::of(&per_seed_final);
            AdaptationCurve {
                test_task: j,
                mean_returns: episode_stats.iter().map(|s| s.mean).collect(),
                ci_low: episode_stats.iter().map(|s| s.ci_low).collect(),
                ci_high: episode_stats.iter().map(|s| s.ci_high).collect(),
                per_seed_returns,
                per_seed_final,
                final_return: final_summary.mean,
                final_summary,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::train_to_convergence;
    use crate::select::tests::bandit;

    fn cfg(iterations: usize, beta: f64) -> MetaConfig {
        MetaConfig {
            meta_iterations: iterations,
            tasks_per_meta_batch: 1,
            inner_episodes: 10,
            inner_step_size: 0.5,
            meta_step_size: beta,
            rng_seed: 4,
        }
    }

    #[test]
    fn zero_meta_step_keeps_initial_logits() {
        let tasks = vec![bandit([1.0, 0.0])];
        let meta = meta_train(&tasks, &cfg(20, 0.0), &LearnerConfig::default()).unwrap();
        assert_eq!(meta.init, SoftmaxPolicy::uniform(2, 2));
    }

    #[test]
    fn unit_meta_step_equals_one_inner_fine_tune() {
        let tasks = vec![bandit([1.0, 0.0])];
        let config = cfg(1, 1.0);
        let learner = LearnerConfig::default();
        let meta = meta_train(&tasks, &config, &learner).unwrap();
        let inner = learner
            .with_step_size(config.inner_step_size)
            .with_seed(seed::derive(4, &[seed::tag("inner"), 0, 0]));
        let direct = fine_tune(&SoftmaxPolicy::uniform(2, 2), &tasks[0], 10, &inner).unwrap();
        assert_eq!(meta.init.logits(), direct.logits());
    }

    #[test]
    fn single_task_meta_training_beats_uniform() {
        let tasks = vec![bandit([1.0, 0.0])];
        let meta = meta_train(&tasks, &cfg(30, 0.5), &LearnerConfig::default()).unwrap();
        let uniform = expected_return(&tasks[0], &SoftmaxPolicy::uniform(2, 2)).unwrap();
        let curves = evaluate_meta_policy(&meta, &tasks, 5, 3, &LearnerConfig::default()).unwrap();
        assert!(curves[0].final_return >= uniform);
        let converged = train_to_convergence(&tasks[0], &LearnerConfig::default()).unwrap();
        assert!((curves[0].final_return - converged.mean_return).abs() < 0.1);
    }

    #[test]
    fn mirrored_bandits_give_near_uniform_init() {
        let tasks = vec![bandit([1.0, 0.0]), bandit([0.0, 1.0])];
        let mut p0 = 0.0;
        for s in 0..20 {
            let config = MetaConfig {
                tasks_per_meta_batch: 2,
                rng_seed: s,
                ..cfg(100, 0.2)
            };
            let meta = meta_train(&tasks, &config, &LearnerConfig::default()).unwrap();
            p0 += meta.init.prob(0, 0) / 20.0;
        }
        assert!((p0 - 0.5).abs() < 0.05, "{p0}");
    }

    #[test]
    fn evaluation_is_reproducible_and_isolated() {
        let tasks = vec![bandit([1.0, 0.0]), bandit([0.3, 0.6])];
        let meta = meta_train(&tasks, &MetaConfig { tasks_per_meta_batch: 2, ..cfg(10, 0.5) }, &LearnerConfig::default()).unwrap();
        let before = meta.clone();
        let a = evaluate_meta_policy(&meta, &tasks, 1, 2, &LearnerConfig::default()).unwrap();
        let b = evaluate_meta_policy(&meta, &tasks, 1, 2, &LearnerConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(meta, before);
        assert_eq!(a[0].mean_returns.len(), 1);
        assert!(evaluate_meta_policy(&meta, &tasks, 0, 2, &LearnerConfig::default()).is_err());
    }

    #[test]
    fn rejects_empty_or_oversized_batches() {
        assert!(meta_train(&[], &cfg(1, 0.5), &LearnerConfig::default()).unwrap_err().is_config());
        let tasks = vec![bandit([1.0, 0.0])];
        let big = MetaConfig { tasks_per_meta_batch: 3, ..cfg(1, 0.5) };
        assert!(meta_train(&tasks, &big, &LearnerConfig::default()).unwrap_err().is_config());
    }
}
