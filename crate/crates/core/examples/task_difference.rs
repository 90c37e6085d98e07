//! Measures how different trained maze tasks are on validation states.

use itts::envs::maze::{generate_grid_maze, MazeParams};
use itts::learner::{LearnerConfig, TrainedTask};
use itts::select::{task_difference, ValidationStateSample};

fn main() -> itts::Result<()> {
    let params = MazeParams::default();
    let cfg = LearnerConfig::default();
    let tasks = (0..4)
        .map(|s| TrainedTask::from_mdp(None, &generate_grid_maze(s, &params)?, &cfg))
        .collect::<itts::Result<Vec<_>>>()?;
    let validation = (100..103)
        .map(|s| generate_grid_maze(s, &params))
        .collect::<itts::Result<Vec<_>>>()?;

    let exhaustive = ValidationStateSample::exhaustive(&validation)?;
    let sampled = ValidationStateSample::sample(&validation, 100, 7)?;
    println!("{} exhaustive entries, {} sampled", exhaustive.len(), sampled.len());
    println!("pair   exhaustive  sampled (nats)");
    for i in 0..tasks.len() {
        for j in 0..tasks.len() {
            if i != j {
                println!(
                    "{i} -> {j}   {:.4}      {:.4}",
                    task_difference(&tasks[i], &tasks[j], &exhaustive)?,
                    task_difference(&tasks[i], &tasks[j], &sampled)?
                );
            }
        }
    }
    Ok(())
}
