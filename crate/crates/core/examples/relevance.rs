//! Relevance of trained tasks to validation tasks, with the per-pair traces.

use itts::envs::maze::{generate_grid_maze, MazeParams};
use itts::learner::{LearnerConfig, TrainedTask};
use itts::select::{relevance_evaluation, SelectionConfig};

fn main() -> itts::Result<()> {
    let params = MazeParams::default();
    let learner = LearnerConfig::default();
    let validation = (100..104)
        .map(|s| generate_grid_maze(s, &params))
        .collect::<itts::Result<Vec<_>>>()?;
    let config = SelectionConfig::default();
    for candidate in 0..4 {
        let task = TrainedTask::from_mdp(None, &generate_grid_maze(candidate as u64, &params)?, &learner)?;
        let (relevant, traces) = relevance_evaluation(candidate, &task, &validation, &config, &learner)?;
        println!("task {candidate}: relevant {relevant}");
        for t in traces {
            println!(
                "  validation {}: rho {:+.5} (entropy {:.3} -> {:.3})",
                t.validation,
                t.rho_hat,
                t.eta_before / config.relevance_repeats as f64,
                t.eta_after / config.relevance_repeats as f64
            );
        }
    }
    Ok(())
}
