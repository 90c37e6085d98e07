use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{digest, write_json, StageStore};
use super::config::{Baseline, ExperimentConfig};
use crate::envs::{build_task_pool, TaskPool};
use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, TrainedTask};
use crate::mdp::{SoftmaxPolicy, TabularMdp};
use crate::meta::{evaluate_meta_policy, meta_train_labeled, AdaptationCurve, MetaConfig, MetaPolicy, Provenance};
use crate::select::{
    evaluate_relevance, select_with_relevance, RelevanceTrace, SelectionConfig, SelectionMode,
    SelectionResult, ValidationStateSample,
};
use crate::seed;

pub type RelevanceTable = Vec<(bool, Vec<RelevanceTrace>)>;

/// Where a meta-training set was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSource {
    Training,
    Validation,
}

/// Inputs shared by every task set evaluated within one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationProvenance {
    pub test_digest: String,
    pub eval_seed: u64,
    pub adaptation_episodes: usize,
    pub eval_seeds: usize,
}

/// Meta-training and adaptation results for one task set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSetRun {
    pub task_set_id: String,
    pub source: TaskSource,
    pub indices: Vec<usize>,
    /// Absent when the set is empty and the uniform initialization is used.
    pub meta: Option<Provenance>,
    pub evaluation: EvaluationProvenance,
    pub curves: Vec<AdaptationCurve>,
    /// Mean of the per-test-task final returns.
    pub final_return: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TaskSetOutcome {
    meta: MetaPolicy,
    trained_on_tasks: bool,
    curves: Vec<AdaptationCurve>,
}

/// One run's tasks, trained policies and validation state sample.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub run: usize,
    pub run_seed: u64,
    pub pool: TaskPool,
    pub training: Vec<TabularMdp>,
    pub validation: Vec<TabularMdp>,
    pub test: Vec<TabularMdp>,
    pub trained: Vec<TrainedTask>,
    pub sample: ValidationStateSample,
    pub pool_digest: String,
    pub trained_digest: String,
    pub test_digest: String,
}

impl RunContext {
    pub fn num_actions(&self) -> usize {
        self.training[0].num_actions()
    }
}

/// Stage runner for one experiment configuration.
///
/// Every seed is derived from the pool's master seed, the run index and the
/// stage name, so each stage is a pure function of the configuration.
pub struct Pipeline {
    config: ExperimentConfig,
    store: StageStore,
    memo: Mutex<BTreeMap<String, TaskSetOutcome>>,
}

impl Pipeline {
    pub fn new(config: ExperimentConfig, store: StageStore) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            store,
            memo: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn store(&self) -> &StageStore {
        &self.store
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        seed::derive(self.config.pool.master_seed, &[seed::tag("run"), run as u64])
    }

    fn run_dir(run: usize) -> String {
        format!("run-{run}")
    }

    pub fn pool(&self, run: usize) -> Result<TaskPool> {
        let pool_cfg = &self.config.pool;
        let pool_seed = seed::derive(self.run_seed(run), &[seed::tag("pool")]);
        self.store.stage(
            "generate-tasks",
            &format!("{}/pool.json", Self::run_dir(run)),
            &(pool_cfg, pool_seed),
            || {
                build_task_pool(
                    &pool_cfg.family_params(),
                    pool_cfg.training_tasks,
                    pool_cfg.validation_tasks,
                    pool_cfg.test_tasks,
                    pool_seed,
                )
            },
        )
    }

    /// Trains every training task of the pool, one stored file per task.
    pub fn train(&self, run: usize, pool: &TaskPool) -> Result<Vec<TrainedTask>> {
        let learner = &self.config.learner;
        let train_seed = seed::derive(self.run_seed(run), &[seed::tag("train"), learner.rng_seed]);
        pool.training
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let cfg = learner.with_seed(seed::derive(train_seed, &[i as u64]));
                self.store.stage(
                    "train-tasks",
                    &format!("{}/trained/task-{i:03}.json", Self::run_dir(run)),
                    &(spec, &cfg),
                    || TrainedTask::train(spec, &cfg),
                )
            })
            .collect()
    }

    pub fn context(&self, run: usize) -> Result<RunContext> {
        let pool = self.pool(run)?;
        let build = |specs: &[crate::envs::TaskSpec]| -> Result<Vec<TabularMdp>> {
            specs.iter().map(|s| s.build()).collect::<Result<_>>().map_err(|e| e.in_stage("generate-tasks"))
        };
        let training = build(&pool.training)?;
        let validation = build(&pool.validation)?;
        let test = build(&pool.test)?;
        let trained = self.train(run, &pool)?;
        let sample_seed = seed::derive(
            self.run_seed(run),
            &[seed::tag("states"), self.config.selection.rng_seed],
        );
        let sample = ValidationStateSample::sample(&validation, self.config.selection.validation_state_count, sample_seed)
            .map_err(|e| e.in_stage("select"))?;
        Ok(RunContext {
            run,
            run_seed: self.run_seed(run),
            pool_digest: digest(&pool)?,
            trained_digest: digest(&trained)?,
            test_digest: digest(&pool.test)?,
            pool,
            training,
            validation,
            test,
            trained,
            sample,
        })
    }

    /// Selection settings for one run with the given mode and threshold.
    pub fn selection_config(&self, ctx: &RunContext, mode: SelectionMode, epsilon: f64) -> SelectionConfig {
        SelectionConfig {
            mode,
            epsilon,
            rng_seed: seed::derive(ctx.run_seed, &[seed::tag("select"), self.config.selection.rng_seed]),
            ..self.config.selection.clone()
        }
    }

    /// Relevance verdicts for every training task. They do not depend on the
    /// threshold or mode, so one table serves every selection in the run.
    pub fn relevance(&self, ctx: &RunContext) -> Result<RelevanceTable> {
        let cfg = self.selection_config(ctx, SelectionMode::Itts, 0.0);
        let key_cfg = (
            cfg.relevance_repeats,
            cfg.learning_episodes,
            cfg.validation_state_count,
            cfg.rng_seed,
        );
        self.store.stage(
            "select",
            &format!("{}/relevance.json", Self::run_dir(ctx.run)),
            &(&ctx.trained_digest, &ctx.pool.validation, key_cfg, &self.config.learner),
            || evaluate_relevance(&ctx.trained, &ctx.validation, &cfg, &self.config.learner),
        )
    }

    pub fn select(
        &self,
        ctx: &RunContext,
        relevance: &RelevanceTable,
        mode: SelectionMode,
        epsilon: f64,
        label: &str,
    ) -> Result<SelectionResult> {
        let cfg = self.selection_config(ctx, mode, epsilon);
        let verdicts = match mode {
            SelectionMode::DifferenceOnly => vec![(true, Vec::new()); ctx.trained.len()],
            _ => relevance.clone(),
        };
        let result = select_with_relevance(&ctx.trained, &ctx.sample, &cfg, verdicts).map_err(|e| e.in_stage("select"))?;
        if let Some(path) = self.store.path(&format!("{}/selection-{label}.json", Self::run_dir(ctx.run))) {
            write_json(&path, &result).map_err(|e| e.in_stage("select"))?;
        }
        Ok(result)
    }

    fn meta_config(&self, ctx: &RunContext, set_size: usize) -> MetaConfig {
        MetaConfig {
            rng_seed: seed::derive(ctx.run_seed, &[seed::tag("meta"), self.config.meta.rng_seed]),
            ..self.config.meta.clamped_to(set_size)
        }
    }

    fn eval_learner(&self, ctx: &RunContext) -> LearnerConfig {
        let learner = &self.config.learner;
        learner.with_seed(seed::derive(ctx.run_seed, &[seed::tag("eval"), learner.rng_seed]))
    }

    pub fn evaluation_provenance(&self, ctx: &RunContext) -> EvaluationProvenance {
        EvaluationProvenance {
            test_digest: ctx.test_digest.clone(),
            eval_seed: self.eval_learner(ctx).rng_seed,
            adaptation_episodes: self.config.adaptation_episodes(),
            eval_seeds: self.config.evaluation.eval_seeds,
        }
    }

    /// Meta-trains on the chosen tasks and adapts to every test task.
    pub fn evaluate_task_set(
        &self,
        ctx: &RunContext,
        task_set_id: &str,
        source: TaskSource,
        indices: &[usize],
    ) -> Result<TaskSetRun> {
        let set_key = Self::set_key(source, indices)?;
        let memo_key = format!("{}/{set_key}", ctx.run);
        let cached = self.memo.lock().expect("memo lock").get(&memo_key).cloned();
        let outcome = match cached {
            Some(o) => o,
            None => {
                let meta = self.meta_policy(ctx, source, indices)?;
                let curves = self.adaptation_curves(ctx, &set_key, &meta)?;
                let o = TaskSetOutcome {
                    meta,
                    trained_on_tasks: !indices.is_empty(),
                    curves,
                };
                self.memo.lock().expect("memo lock").insert(memo_key, o.clone());
                o
            }
        };
        let final_return = mean(outcome.curves.iter().map(|c| c.final_return));
        Ok(TaskSetRun {
            task_set_id: task_set_id.to_string(),
            source,
            indices: indices.to_vec(),
            meta: outcome.trained_on_tasks.then(|| outcome.meta.provenance.clone()),
            evaluation: self.evaluation_provenance(ctx),
            curves: outcome.curves,
            final_return,
        })
    }

    /// File stem shared by the stored meta-policy and curves of a task set.
    pub fn set_key(source: TaskSource, indices: &[usize]) -> Result<String> {
        let name = match source {
            TaskSource::Training => "training",
            TaskSource::Validation => "validation",
        };
        Ok(format!("{name}-{}", &digest(indices)?[..12]))
    }

    /// Meta-trains on the chosen tasks; an empty set yields the uniform policy.
    pub fn meta_policy(&self, ctx: &RunContext, source: TaskSource, indices: &[usize]) -> Result<MetaPolicy> {
        let (specs, mdps) = match source {
            TaskSource::Training => (&ctx.pool.training, &ctx.training),
            TaskSource::Validation => (&ctx.pool.validation, &ctx.validation),
        };
        let tasks: Vec<TabularMdp> = indices.iter().map(|&i| mdps[i].clone()).collect();
        let labels: Vec<String> = indices.iter().map(|&i| format!("seed:{}", specs[i].seed)).collect();
        let meta_cfg = self.meta_config(ctx, tasks.len());
        let learner = &self.config.learner;
        self.store.stage(
            "meta-train",
            &format!("{}/meta/{}.json", Self::run_dir(ctx.run), Self::set_key(source, indices)?),
            &(indices.iter().map(|&i| &specs[i]).collect::<Vec<_>>(), &meta_cfg, learner),
            || {
                if tasks.is_empty() {
                    let shape = &ctx.test[0];
                    Ok(MetaPolicy {
                        schema_version: crate::meta::META_POLICY_SCHEMA.to_string(),
                        init: SoftmaxPolicy::uniform(shape.num_states(), shape.num_actions()),
                        provenance: Provenance {
                            task_set_digest: crate::meta::task_set_digest(&[])?,
                            task_labels: Vec::new(),
                            config: meta_cfg.clone(),
                            learner: learner.clone(),
                        },
                    })
                } else {
                    meta_train_labeled(&tasks, &labels, &meta_cfg, learner)
                }
            },
        )
    }

    /// Adapts `meta` to every test task of the run.
    pub fn adaptation_curves(&self, ctx: &RunContext, set_key: &str, meta: &MetaPolicy) -> Result<Vec<AdaptationCurve>> {
        let eval_learner = self.eval_learner(ctx);
        let episodes = self.config.adaptation_episodes();
        let seeds = self.config.evaluation.eval_seeds;
        self.store.stage(
            "evaluate",
            &format!("{}/curves/{set_key}.json", Self::run_dir(ctx.run)),
            &(meta, &ctx.pool.test, episodes, seeds, &eval_learner),
            || evaluate_meta_policy(meta, &ctx.test, episodes, seeds, &eval_learner),
        )
    }

    /// The task sets a baseline meta-trains on in this run.
    pub fn baseline_task_sets(
        &self,
        ctx: &RunContext,
        relevance: &RelevanceTable,
        baseline: &Baseline,
    ) -> Result<Vec<(String, TaskSource, Vec<usize>)>> {
        let label = baseline.label();
        let eps = self.config.selection.epsilon;
        let selected = |mode| -> Result<Vec<(String, TaskSource, Vec<usize>)>> {
            let result = self.select(ctx, relevance, mode, eps, &label)?;
            Ok(vec![(label.clone(), TaskSource::Training, result.selected)])
        };
        match baseline {
            Baseline::Itts => selected(SelectionMode::Itts),
            Baseline::DifferenceOnly => selected(SelectionMode::DifferenceOnly),
            Baseline::RelevanceOnly => selected(SelectionMode::RelevanceOnly),
            Baseline::AllTasks => Ok(vec![(label, TaskSource::Training, (0..ctx.training.len()).collect())]),
            Baseline::ValidationAsTraining => Ok(vec![(label, TaskSource::Validation, (0..ctx.validation.len()).collect())]),
            Baseline::RandomSubset { count, num_draws } => Ok((0..*num_draws)
                .map(|d| {
                    let t = ctx.training.len();
                    let mut rng = seed::rng(seed::derive(ctx.run_seed, &[seed::tag(&label), d as u64]));
                    let size = count.unwrap_or_else(|| rng.gen_range(1..=t));
                    let mut picked = index::sample(&mut rng, t, size).into_vec();
                    picked.sort_unstable();
                    (format!("{label}-{d}"), TaskSource::Training, picked)
                })
                .collect()),
        }
    }

    pub fn run_baselines(&self, ctx: &RunContext, baselines: &[Baseline]) -> Result<Vec<BaselineRun>> {
        let needs_relevance = baselines
            .iter()
            .any(|b| matches!(b, Baseline::Itts | Baseline::RelevanceOnly));
        let relevance = if needs_relevance { self.relevance(ctx)? } else { Vec::new() };
        baselines
            .iter()
            .map(|b| {
                let task_sets = self
                    .baseline_task_sets(ctx, &relevance, b)?
                    .into_iter()
                    .map(|(id, source, indices)| self.evaluate_task_set(ctx, &id, source, &indices))
                    .collect::<Result<Vec<_>>>()?;
                Ok(BaselineRun {
                    baseline: b.label(),
                    final_return: mean(task_sets.iter().map(|s| s.final_return)),
                    normalized_final_return: f64::NAN,
                    task_sets,
                })
            })
            .collect()
    }

    /// Runs `f` on a thread pool sized by the configured worker count.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        match self.config.workers {
            None => f(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("cannot start {n} workers: {e}")))?
                .install(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRun {
    pub baseline: String,
    pub task_sets: Vec<TaskSetRun>,
    /// Mean final return over this baseline's task sets.
    pub final_return: f64,
    pub normalized_final_return: f64,
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}
