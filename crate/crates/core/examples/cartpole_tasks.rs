//! Samples cart-pole physics, discretizes them into tabular tasks and trains one.

use itts::envs::cartpole::{discretize, CartPoleGrid, CartPoleParams};
use itts::learner::{train_to_convergence, LearnerConfig};
use itts::mdp::{expected_return, SoftmaxPolicy};

fn main() -> itts::Result<()> {
    let params = CartPoleParams::default();
    let grid = CartPoleGrid::new(&params);
    println!("{} discretized cells plus a failure state", grid.num_cells());
    for seed in 0..3 {
        let physics = params.sample_physics(seed);
        let mdp = discretize(&params, &physics)?;
        let uniform = expected_return(&mdp, &SoftmaxPolicy::uniform(mdp.num_states(), mdp.num_actions()))?;
        println!("task {seed}: {physics:?}");
        println!("  uniform return {uniform:.3}");
        if seed == 0 {
            let cfg = LearnerConfig {
                max_epochs: 300,
                ..LearnerConfig::default()
            };
            let trained = train_to_convergence(&mdp, &cfg)?;
            println!(
                "  trained return {:.3} after {} episodes",
                expected_return(&mdp, &trained.policy)?,
                trained.episodes_used
            );
        }
    }
    Ok(())
}
