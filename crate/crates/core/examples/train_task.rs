//! Trains a maze task to convergence with both learners.

use itts::envs::maze::{generate_grid_maze, MazeParams};
use itts::learner::{Algorithm, LearnerConfig, TrainedTask};
use itts::mdp::{expected_return, SoftmaxPolicy};

fn main() -> itts::Result<()> {
    let mdp = generate_grid_maze(11, &MazeParams::default())?;
    let uniform = expected_return(&mdp, &SoftmaxPolicy::uniform(mdp.num_states(), mdp.num_actions()))?;
    println!("uniform policy: {uniform:.4}");
    for algorithm in [Algorithm::TabularReinforce, Algorithm::BoltzmannQ] {
        let cfg = LearnerConfig {
            algorithm,
            ..LearnerConfig::default()
        };
        let task = TrainedTask::from_mdp(None, &mdp, &cfg)?;
        println!(
            "{algorithm:?}: return {:.4} (training estimate {:.4}), {} episodes, converged {}",
            expected_return(&mdp, &task.optimal_policy)?,
            task.mean_return_at_convergence,
            task.training_episodes_used,
            task.converged
        );
        println!(
            "  entropy over reachable states: min {:.3} mean {:.3} max {:.3} nats",
            task.entropy.min, task.entropy.mean, task.entropy.max
        );
    }
    Ok(())
}
