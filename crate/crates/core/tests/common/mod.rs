#![allow(dead_code)]

use itts::harness::{Baseline, ExperimentConfig};
use itts::learner::{EntropyBounds, LearnerConfig, TrainedTask, TRAINED_TASK_SCHEMA};
use itts::mdp::{SoftmaxPolicy, TabularMdp, Transition};

/// One decision state, two arms, then termination.
pub fn bandit(rewards: [f64; 2]) -> TabularMdp {
    let dynamics = vec![
        vec![Transition::new(1, rewards[0], 1.0)],
        vec![Transition::new(1, rewards[1], 1.0)],
        vec![Transition::new(1, 0.0, 1.0)],
        vec![Transition::new(1, 0.0, 1.0)],
    ];
    TabularMdp::new(2, 2, dynamics, 1.0, vec![1.0, 0.0], &[1], 1).unwrap()
}

pub fn trained_from_policy(policy: SoftmaxPolicy) -> TrainedTask {
    TrainedTask {
        schema_version: TRAINED_TASK_SCHEMA.to_string(),
        spec: None,
        optimal_policy: policy,
        mean_return_at_convergence: 0.0,
        training_episodes_used: 0,
        converged: true,
        learner: LearnerConfig::default(),
        entropy: EntropyBounds { min: 0.0, mean: 0.0, max: 0.0 },
    }
}

/// A bandit task whose policy plays arm 0 with probability `p0`.
pub fn hand_task(p0: f64) -> TrainedTask {
    trained_from_policy(SoftmaxPolicy::from_probabilities(2, &[vec![p0, 1.0 - p0], vec![0.5, 0.5]]).unwrap())
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|x| x * x.ln()).sum::<f64>()
}

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * (a / b).ln()).sum()
}

/// A small maze experiment that runs in well under a second.
pub fn tiny_config() -> ExperimentConfig {
    let mut config = ExperimentConfig::default();
    config.pool.training_tasks = 4;
    config.pool.validation_tasks = 2;
    config.pool.test_tasks = 2;
    config.pool.maze.width = 4;
    config.pool.maze.height = 4;
    config.pool.maze.max_episode_steps = 40;
    config.learner.max_epochs = 200;
    config.meta.meta_iterations = 10;
    config.meta.tasks_per_meta_batch = 2;
    config.evaluation.adaptation_episodes = Some(5);
    config.evaluation.eval_seeds = 2;
    config.selection.relevance_repeats = 2;
    config.selection.validation_state_count = 20;
    config.runs = 2;
    config.baselines = Baseline::full_set();
    config
}
