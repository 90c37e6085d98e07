//! Difference-only and relevance-only selection against the full selection.

use itts::harness::{ablation, ExperimentConfig, StageStore};

fn main() -> itts::Result<()> {
    let mut config = ExperimentConfig {
        runs: 2,
        ..ExperimentConfig::default()
    };
    config.selection.epsilon = 0.2;
    let report = ablation(&config, StageStore::in_memory())?;
    for run in &report.runs {
        println!("run {}", run.run);
        for b in &run.baselines {
            println!(
                "  {:<16} tasks {:?} return {:.4}",
                b.baseline, b.task_sets[0].indices, b.final_return
            );
        }
    }
    Ok(())
}
