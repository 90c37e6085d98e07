//! Builds a seeded maze pool, trains it and runs the task selection.

use itts::envs::{build_task_pool, FamilyParams, MazeParams};
use itts::learner::{LearnerConfig, TrainedTask};
use itts::select::{select_tasks, SelectionConfig, ValidationStateSample};

fn main() -> itts::Result<()> {
    let pool = build_task_pool(&FamilyParams::GridMaze(MazeParams::default()), 8, 4, 1, 3)?;
    let learner = LearnerConfig::default();
    let trained = pool
        .training
        .iter()
        .map(|spec| TrainedTask::train(spec, &learner))
        .collect::<itts::Result<Vec<_>>>()?;
    let validation = pool.validation.iter().map(|s| s.build()).collect::<itts::Result<Vec<_>>>()?;
    let sample = ValidationStateSample::sample(&validation, 100, 0)?;

    for epsilon in [0.0, 0.1, 0.3] {
        let config = SelectionConfig {
            epsilon,
            ..SelectionConfig::default()
        };
        let result = select_tasks(&trained, &validation, &sample, &config, &learner)?;
        println!("epsilon {epsilon}: selected {:?}", result.selected);
        for record in &result.candidates {
            match record.deltas.iter().map(|d| d.delta).reduce(f64::min) {
                Some(closest) => println!("  task {}: {:?} (closest delta {closest:.3})", record.candidate, record.decision),
                None => println!("  task {}: {:?}", record.candidate, record.decision),
            }
        }
    }
    Ok(())
}
