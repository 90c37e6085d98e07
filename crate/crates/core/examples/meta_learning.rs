//! Meta-trains an initialization on mazes and compares adaptation with a uniform start.

use itts::envs::maze::{generate_grid_maze, MazeParams};
use itts::learner::LearnerConfig;
use itts::meta::{evaluate_meta_policy, meta_train, MetaConfig};

fn main() -> itts::Result<()> {
    let params = MazeParams::default();
    let train = (0..12).map(|s| generate_grid_maze(s, &params)).collect::<itts::Result<Vec<_>>>()?;
    let test = (50..55).map(|s| generate_grid_maze(s, &params)).collect::<itts::Result<Vec<_>>>()?;
    let learner = LearnerConfig::default();

    let config = MetaConfig::default();
    let meta = meta_train(&train, &config, &learner)?;
    let uniform = meta_train(&train, &MetaConfig { meta_step_size: 0.0, ..config }, &learner)?;
    println!("task set digest {}", &meta.provenance.task_set_digest[..16]);

    for (name, init) in [("meta-trained", &meta), ("uniform", &uniform)] {
        let curves = evaluate_meta_policy(init, &test, 50, 5, &learner)?;
        let finals: Vec<f64> = curves.iter().map(|c| c.final_return).collect();
        let first = curves.iter().map(|c| c.mean_returns[0]).sum::<f64>() / curves.len() as f64;
        println!(
            "{name:>12}: first episode {first:.3}, final {:.3} per test task {finals:.3?}",
            finals.iter().sum::<f64>() / finals.len() as f64
        );
    }
    Ok(())
}
