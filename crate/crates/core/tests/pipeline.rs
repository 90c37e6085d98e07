mod common;

use std::collections::BTreeSet;
use std::fs;

use itts::envs::maze::{generate_grid_maze, MazeParams};
use itts::harness::{
    ablation, emit_plots, emit_sweep_plots, epsilon_sweep, run_pipeline, Baseline, ExperimentReport, StageStore,
};
use itts::learner::LearnerConfig;
use itts::mdp::SoftmaxPolicy;
use itts::select::{select_tasks, SelectionConfig, SelectionMode, ValidationStateSample};
use itts::Error;
use rand::{Rng, SeedableRng};

use common::{tiny_config, trained_from_policy};

fn indices(report: &ExperimentReport, run: usize, label: &str) -> Vec<usize> {
    report.runs[run].baseline(label).unwrap().task_sets[0].indices.clone()
}

#[test]
fn single_training_task_gives_one_curve_set() {
    let mut config = tiny_config();
    config.pool.training_tasks = 1;
    config.baselines = vec![Baseline::AllTasks];
    let report = run_pipeline(&config, StageStore::in_memory()).unwrap();
    for run in &report.runs {
        let sets = &run.baselines[0].task_sets;
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].indices, vec![0]);
        assert_eq!(sets[0].curves.len(), config.pool.test_tasks);
        for curve in &sets[0].curves {
            assert_eq!(curve.mean_returns.len(), 5);
            assert_eq!(curve.per_seed_returns.len(), 2);
        }
    }
}

#[test]
fn itts_equals_all_tasks_when_everything_is_relevant_and_epsilon_is_zero() {
    let mut config = tiny_config();
    // A zero step leaves every transferred policy unchanged, so every relevance estimate is exactly 0.
    config.learner.step_size = 0.0;
    config.selection.epsilon = 0.0;
    config.baselines = vec![Baseline::Itts, Baseline::AllTasks];
    let report = run_pipeline(&config, StageStore::in_memory()).unwrap();
    for (r, run) in report.runs.iter().enumerate() {
        assert_eq!(indices(&report, r, "itts"), indices(&report, r, "all_tasks"));
        assert_eq!(run.baseline("itts").unwrap().final_return, run.baseline("all_tasks").unwrap().final_return);
    }
}

#[test]
fn ablation_modes_relate_as_subsets() {
    let mut config = tiny_config();
    config.selection.epsilon = 0.0;
    let report = ablation(&config, StageStore::in_memory()).unwrap();
    for r in 0..config.runs {
        let itts: BTreeSet<_> = indices(&report, r, "itts").into_iter().collect();
        let relevant: BTreeSet<_> = indices(&report, r, "relevance_only").into_iter().collect();
        assert!(itts.is_subset(&relevant));
        assert_eq!(itts, relevant, "epsilon 0 leaves only the relevance filter");
        assert_eq!(indices(&report, r, "difference_only"), (0..config.pool.training_tasks).collect::<Vec<_>>());
    }

    config.selection.epsilon = 0.3;
    let report = ablation(&config, StageStore::in_memory()).unwrap();
    for r in 0..config.runs {
        let itts: BTreeSet<_> = indices(&report, r, "itts").into_iter().collect();
        let relevant: BTreeSet<_> = indices(&report, r, "relevance_only").into_iter().collect();
        let different: BTreeSet<_> = indices(&report, r, "difference_only").into_iter().collect();
        assert!(itts.is_subset(&relevant));
        assert!(itts.len() <= different.len().max(relevant.len()));
    }
}

#[test]
fn sweep_at_zero_matches_relevance_only_and_shrinks_with_epsilon() {
    let mut config = tiny_config();
    config.baselines = vec![Baseline::RelevanceOnly];
    let sweep = epsilon_sweep(&config, &[0.0, 0.1, 1e9], StageStore::in_memory()).unwrap();
    let report = run_pipeline(&config, StageStore::in_memory()).unwrap();
    for (r, run) in sweep.runs.iter().enumerate() {
        let relevance_only = run_pipeline_set(&report, r);
        assert_eq!(run.points[0].selected, relevance_only.0);
        assert_eq!(run.points[0].final_return, relevance_only.1);
        assert!(run.points[2].selected.len() <= 1);
        assert!(run.points[2].selected.len() <= run.points[0].selected.len());
    }
    assert_eq!(sweep.num_actions, 4);
    assert!((sweep.rows[1].epsilon_normalized - 0.025).abs() < 1e-15);
    for row in &sweep.rows {
        assert!(row.ci_low <= row.mean_return && row.mean_return <= row.ci_high);
    }
}

fn run_pipeline_set(report: &ExperimentReport, run: usize) -> (Vec<usize>, f64) {
    let set = &report.runs[run].baseline("relevance_only").unwrap().task_sets[0];
    (set.indices.clone(), set.final_return)
}

#[test]
fn plot_rows_keep_the_mean_inside_its_interval() {
    let config = tiny_config();
    let report = run_pipeline(&config, StageStore::in_memory()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_plots(&report, dir.path()).unwrap();
    assert!(written.iter().any(|p| p.ends_with("transfer-grid_maze.csv")));
    let mut reader = csv::Reader::from_path(dir.path().join("transfer-grid_maze.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (mean, low, high) = (col("mean_return"), col("ci_low"), col("ci_high"));
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let v = |i: usize| record[i].parse::<f64>().unwrap();
        assert!(v(low) <= v(mean) + 1e-12 && v(mean) <= v(high) + 1e-12, "{record:?}");
        assert!((0.0..=1.0).contains(&v(mean)));
        rows += 1;
    }
    assert_eq!(rows, Baseline::full_set().len() * 5);

    let sweep = epsilon_sweep(&config, &[0.0, 0.2], StageStore::in_memory()).unwrap();
    emit_sweep_plots(&sweep, dir.path()).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["epsilon_raw", "epsilon_normalized", "mean_return", "ci_low", "ci_high", "subset_size"]
    );
    assert_eq!(reader.records().count(), 2);
}

#[test]
fn plots_name_the_missing_baselines() {
    let config = tiny_config();
    let mut report = run_pipeline(&config, StageStore::in_memory()).unwrap();
    for run in &mut report.runs {
        run.baselines.retain(|b| b.baseline != "validation_as_training");
    }
    let dir = tempfile::tempdir().unwrap();
    let err = emit_plots(&report, dir.path()).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("validation_as_training"), "{err}");
}

#[test]
fn baselines_share_test_tasks_and_seeds() {
    let report = run_pipeline(&tiny_config(), StageStore::in_memory()).unwrap();
    for run in &report.runs {
        assert!(run.baselines_comparable());
        let random = run.baseline("random_subset").unwrap();
        assert_eq!(random.task_sets.len(), 4);
        assert!(random.task_sets.iter().all(|s| !s.indices.is_empty() && s.indices.len() <= 4));
    }
    assert_eq!(report.runs.len(), 2);
    assert_ne!(report.runs[0].pool_digest, report.runs[1].pool_digest);
}

#[test]
fn resumed_runs_reuse_matching_stages_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config();
    let first = run_pipeline(&config, StageStore::on_disk(dir.path(), true)).unwrap();
    let pool_path = dir.path().join("run-0/pool.json");
    let pool_time = fs::metadata(&pool_path).unwrap().modified().unwrap();
    let curves: Vec<_> = fs::read_dir(dir.path().join("run-0/curves")).unwrap().map(|e| e.unwrap().path()).collect();
    let curve_path = curves.iter().find(|p| p.extension().is_some_and(|e| e == "json")).unwrap().clone();
    let curve_time = fs::metadata(&curve_path).unwrap().modified().unwrap();

    let second = run_pipeline(&config, StageStore::on_disk(dir.path(), true)).unwrap();
    assert_eq!(serde_json::to_string(&first).unwrap(), serde_json::to_string(&second).unwrap());
    assert_eq!(fs::metadata(&pool_path).unwrap().modified().unwrap(), pool_time);
    assert_eq!(fs::metadata(&curve_path).unwrap().modified().unwrap(), curve_time);

    // Changing only the evaluation keeps the pool but recomputes the curves.
    let mut changed = config.clone();
    changed.evaluation.adaptation_episodes = Some(6);
    let third = run_pipeline(&changed, StageStore::on_disk(dir.path(), true)).unwrap();
    assert_eq!(fs::metadata(&pool_path).unwrap().modified().unwrap(), pool_time);
    assert_eq!(third.runs[0].baselines[0].task_sets[0].curves[0].mean_returns.len(), 6);

    // Without reuse everything is recomputed, with identical results.
    let fresh = run_pipeline(&config, StageStore::on_disk(dir.path(), false)).unwrap();
    assert_ne!(fs::metadata(&pool_path).unwrap().modified().unwrap(), pool_time);
    assert_eq!(serde_json::to_string(&first).unwrap(), serde_json::to_string(&fresh).unwrap());
}

#[test]
fn same_config_same_report() {
    let config = tiny_config();
    let a = run_pipeline(&config, StageStore::in_memory()).unwrap();
    let b = run_pipeline(&config, StageStore::in_memory()).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    let mut other = config.clone();
    other.pool.master_seed = 1;
    let c = run_pipeline(&other, StageStore::in_memory()).unwrap();
    assert_ne!(a.runs[0].pool_digest, c.runs[0].pool_digest);
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let mut config = tiny_config();
    config.baselines = vec![Baseline::Itts, Baseline::Itts];
    assert!(run_pipeline(&config, StageStore::in_memory()).unwrap_err().is_config());
    let config = tiny_config();
    assert!(epsilon_sweep(&config, &[0.1], StageStore::in_memory()).unwrap_err().is_config());
    assert!(matches!(
        epsilon_sweep(&config, &[0.0, -1.0], StageStore::in_memory()).unwrap_err(),
        Error::Config(_)
    ));
}

fn random_policy(rng: &mut impl Rng, states: usize) -> SoftmaxPolicy {
    let scale = rng.gen_range(0.1..4.0);
    let logits = (0..states * 4).map(|_| rng.gen_range(-scale..scale)).collect();
    SoftmaxPolicy::from_logits(states, 4, logits, 1.0).unwrap()
}

#[test]
fn certificates_hold_on_random_pools() {
    let params = MazeParams {
        width: 4,
        height: 4,
        max_episode_steps: 30,
        ..MazeParams::default()
    };
    let learner = LearnerConfig::default();
    let mut checked = 0;
    for pool in 0..50u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(pool);
        let validation: Vec<_> = (0..2).map(|k| generate_grid_maze(pool * 7 + k, &params).unwrap()).collect();
        let trained: Vec<_> = (0..rng.gen_range(1..8)).map(|_| trained_from_policy(random_policy(&mut rng, 16))).collect();
        let sample = ValidationStateSample::sample(&validation, 30, pool).unwrap();
        let mode = [SelectionMode::Itts, SelectionMode::DifferenceOnly, SelectionMode::RelevanceOnly][pool as usize % 3];
        let cfg = SelectionConfig {
            epsilon: rng.gen_range(0.0..0.5),
            relevance_repeats: 2,
            learning_episodes: 5,
            validation_state_count: 20,
            mode,
            rng_seed: pool,
            ..SelectionConfig::default()
        };
        let result = select_tasks(&trained, &validation, &sample, &cfg, &learner).unwrap();
        if mode != SelectionMode::RelevanceOnly {
            assert!(result.difference_certificate_holds(), "pool {pool}");
        }
        if mode != SelectionMode::DifferenceOnly {
            assert!(result.relevance_certificate_holds(), "pool {pool}");
        }
        assert_eq!(result.candidates.len(), trained.len());
        checked += 1;
    }
    assert_eq!(checked, 50);
}
