use serde::{Deserialize, Serialize};

use super::cache::{write_json, StageStore};
use super::config::{Baseline, ExperimentConfig};
use super::pipeline::{mean, BaselineRun, Pipeline};
use crate::error::Result;
use crate::stats::Summary;

pub const REPORT_SCHEMA: &str = "itts.report/1";
pub const SWEEP_SCHEMA: &str = "itts.sweep/1";

/// Bounds used to map returns onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn over(values: impl Iterator<Item = f64>) -> Self {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if min > max {
            Self { min: 0.0, max: 0.0 }
        } else {
            Self { min, max }
        }
    }

    pub fn apply(&self, value: f64) -> f64 {
        if self.max > self.min {
            (value - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: usize,
    pub run_seed: u64,
    pub pool_digest: String,
    pub trained_digest: String,
    pub baselines: Vec<BaselineRun>,
}

impl RunReport {
    pub fn baseline(&self, label: &str) -> Option<&BaselineRun> {
        self.baselines.iter().find(|b| b.baseline == label)
    }

    /// True when every task set in the run was evaluated on the same test
    /// tasks with the same seeds and meta-training settings.
    pub fn baselines_comparable(&self) -> bool {
        let mut sets = self.baselines.iter().flat_map(|b| &b.task_sets);
        let Some(first) = sets.next() else { return true };
        sets.all(|s| {
            s.evaluation == first.evaluation
                && match (&s.meta, &first.meta) {
                    (Some(a), Some(b)) => a.learner == b.learner && a.config.rng_seed == b.config.rng_seed,
                    _ => true,
                }
        })
    }

    /// Every return recorded in this run's curves.
    pub fn all_returns(&self) -> impl Iterator<Item = f64> + '_ {
        self.baselines
            .iter()
            .flat_map(|b| &b.task_sets)
            .flat_map(|s| &s.curves)
            .flat_map(|c| c.per_seed_returns.iter().flatten().chain(&c.per_seed_final).copied())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub baseline: String,
    /// Per-run final returns, across runs.
    pub final_return: Summary,
    pub normalized_final_return: Summary,
    pub mean_subset_size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: String,
    pub config: ExperimentConfig,
    pub normalization: Normalization,
    pub runs: Vec<RunReport>,
    pub summary: Vec<BaselineSummary>,
}

impl ExperimentReport {
    fn assemble(config: &ExperimentConfig, baselines: &[Baseline], mut runs: Vec<RunReport>) -> Self {
        let normalization = Normalization::over(runs.iter().flat_map(|r| r.all_returns()));
        for run in &mut runs {
            for b in &mut run.baselines {
                b.normalized_final_return = normalization.apply(b.final_return);
            }
        }
        let summary = baselines
            .iter()
            .map(|b| {
                let label = b.label();
                let rows: Vec<&BaselineRun> = runs.iter().filter_map(|r| r.baseline(&label)).collect();
                BaselineSummary {
                    final_return: Summary::of(&rows.iter().map(|r| r.final_return).collect::<Vec<_>>()),
                    normalized_final_return: Summary::of(
                        &rows.iter().map(|r| r.normalized_final_return).collect::<Vec<_>>(),
                    ),
                    mean_subset_size: mean(
                        rows.iter()
                            .flat_map(|r| &r.task_sets)
                            .map(|s| s.indices.len() as f64),
                    ),
                    baseline: label,
                }
            })
            .collect();
        let mut config = config.clone();
        config.baselines = baselines.to_vec();
        Self {
            schema_version: REPORT_SCHEMA.to_string(),
            config,
            normalization,
            runs,
            summary,
        }
    }

    pub fn summary_for(&self, label: &str) -> Option<&BaselineSummary> {
        self.summary.iter().find(|s| s.baseline == label)
    }

    /// Per-run final return of `label`, in run order.
    pub fn final_returns(&self, label: &str) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| r.baseline(label).map(|b| b.final_return))
            .collect()
    }
}

fn run_all(pipeline: &Pipeline, baselines: &[Baseline], file: &str) -> Result<ExperimentReport> {
    let config = pipeline.config();
    let runs = pipeline.install(|| {
        (0..config.runs)
            .map(|run| {
                let ctx = pipeline.context(run)?;
                Ok(RunReport {
                    run,
                    run_seed: ctx.run_seed,
                    pool_digest: ctx.pool_digest.clone(),
                    trained_digest: ctx.trained_digest.clone(),
                    baselines: pipeline.run_baselines(&ctx, baselines)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let report = ExperimentReport::assemble(config, baselines, runs);
    if let Some(path) = pipeline.store().path(file) {
        write_json(&path, &report).map_err(|e| e.in_stage("report"))?;
    }
    Ok(report)
}

/// Generates, trains, selects, meta-trains and evaluates every configured
/// baseline for every run, writing `report.json` when the store is on disk.
pub fn run_pipeline(config: &ExperimentConfig, store: StageStore) -> Result<ExperimentReport> {
    let pipeline = Pipeline::new(config.clone(), store)?;
    run_all(&pipeline, &config.baselines, "report.json")
}

/// DifferenceOnly, RelevanceOnly, ITTS and AllTasks on shared tasks and seeds.
pub fn ablation(config: &ExperimentConfig, store: StageStore) -> Result<ExperimentReport> {
    let pipeline = Pipeline::new(config.clone(), store)?;
    run_all(&pipeline, &Baseline::ablation_set(), "ablation.json")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub selected: Vec<usize>,
    pub final_return: f64,
    pub normalized_final_return: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub run: usize,
    pub points: Vec<SweepPoint>,
}

impl SweepRun {
    /// True when some interior threshold beats both endpoints strictly.
    pub fn best_is_interior(&self) -> bool {
        let n = self.points.len();
        if n < 3 {
            return false;
        }
        let edge = self.points[0].final_return.max(self.points[n - 1].final_return);
        self.points[1..n - 1].iter().any(|p| p.final_return > edge)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon_raw: f64,
    pub epsilon_normalized: f64,
    /// Normalized return across runs.
    pub mean_return: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub subset_size: f64,
    pub raw_return: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: String,
    pub config: ExperimentConfig,
    pub num_actions: usize,
    pub normalization: Normalization,
    pub runs: Vec<SweepRun>,
    pub rows: Vec<SweepRow>,
}

/// ITTS at every threshold in `epsilons`, reusing trained tasks and
/// relevance verdicts across thresholds.
pub fn epsilon_sweep(config: &ExperimentConfig, epsilons: &[f64], store: StageStore) -> Result<SweepReport> {
    if epsilons.len() < 2 {
        return Err(crate::error::Error::config("a sweep needs at least two epsilon values"));
    }
    if epsilons.iter().any(|e| !(*e >= 0.0)) {
        return Err(crate::error::Error::config("sweep epsilons must be non-negative"));
    }
    let mut config = config.clone();
    config.sweep.epsilons = epsilons.to_vec();
    let pipeline = Pipeline::new(config.clone(), store)?;
    let (runs, all_returns, num_actions) = pipeline.install(|| {
        let mut runs = Vec::with_capacity(config.runs);
        let mut all_returns = Vec::new();
        let mut num_actions = 0;
        for run in 0..config.runs {
            let ctx = pipeline.context(run)?;
            num_actions = ctx.num_actions();
            let relevance = pipeline.relevance(&ctx)?;
            let mut points = Vec::with_capacity(epsilons.len());
            for (k, &eps) in epsilons.iter().enumerate() {
                let label = format!("sweep-{k}");
                let selection = pipeline.select(&ctx, &relevance, crate::select::SelectionMode::Itts, eps, &label)?;
                let set = pipeline.evaluate_task_set(&ctx, &label, super::TaskSource::Training, &selection.selected)?;
                all_returns.extend(
                    set.curves
                        .iter()
                        .flat_map(|c| c.per_seed_returns.iter().flatten().chain(&c.per_seed_final).copied()),
                );
                points.push(SweepPoint {
                    epsilon: eps,
                    selected: selection.selected,
                    final_return: set.final_return,
                    normalized_final_return: 0.0,
                });
            }
            runs.push(SweepRun { run, points });
        }
        Ok((runs, all_returns, num_actions))
    })?;
    let mut runs = runs;
    let normalization = Normalization::over(all_returns.into_iter());
    for p in runs.iter_mut().flat_map(|r| &mut r.points) {
        p.normalized_final_return = normalization.apply(p.final_return);
    }
    let rows = epsilons
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let raw: Vec<f64> = runs.iter().map(|r| r.points[k].final_return).collect();
            let norm = Summary::of(&runs.iter().map(|r| r.points[k].normalized_final_return).collect::<Vec<_>>());
            SweepRow {
                epsilon_raw: eps,
                epsilon_normalized: eps / num_actions as f64,
                mean_return: norm.mean,
                ci_low: norm.ci_low,
                ci_high: norm.ci_high,
                subset_size: mean(runs.iter().map(|r| r.points[k].selected.len() as f64)),
                raw_return: Summary::of(&raw),
            }
        })
        .collect();
    let report = SweepReport {
        schema_version: SWEEP_SCHEMA.to_string(),
        config,
        num_actions,
        normalization,
        runs,
        rows,
    };
    if let Some(path) = pipeline.store().path("sweep.json") {
        write_json(&path, &report).map_err(|e| e.in_stage("report"))?;
    }
    Ok(report)
}
