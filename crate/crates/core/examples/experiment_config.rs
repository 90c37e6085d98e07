//! Writes the default experiment config as TOML and reads a customized one back.

use itts::harness::{Baseline, ExperimentConfig};

fn main() -> itts::Result<()> {
    let defaults = ExperimentConfig::default();
    println!("{}", defaults.to_toml()?);

    let custom = ExperimentConfig::from_toml(
        r#"
        runs = 3
        baselines = ["itts", "all_tasks", { random_subset = { count = 4 } }]

        [pool]
        family = "discretized_cart_pole"
        training_tasks = 6

        [selection]
        epsilon = 0.1
        "#,
    )?;
    custom.validate()?;
    let labels: Vec<String> = custom.baselines.iter().map(Baseline::label).collect();
    println!("custom: {} runs, family {:?}, baselines {labels:?}", custom.runs, custom.pool.family);
    println!("adaptation episodes: {}", custom.adaptation_episodes());
    Ok(())
}
