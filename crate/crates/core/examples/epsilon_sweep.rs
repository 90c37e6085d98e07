//! Sweeps the difference threshold and prints selected set sizes and returns.

use itts::harness::{epsilon_sweep, ExperimentConfig, StageStore};

fn main() -> itts::Result<()> {
    let config = ExperimentConfig {
        runs: 2,
        ..ExperimentConfig::default()
    };
    let epsilons = [0.0, 0.05, 0.1, 0.2, 0.4, 0.8];
    let report = epsilon_sweep(&config, &epsilons, StageStore::in_memory())?;
    println!("{:>8} {:>8} {:>10} {:>6}", "eps", "eps/|A|", "norm.ret", "|C|");
    for row in &report.rows {
        println!(
            "{:>8.3} {:>8.4} {:>10.4} {:>6.2}",
            row.epsilon_raw, row.epsilon_normalized, row.mean_return, row.subset_size
        );
    }
    for run in &report.runs {
        println!("run {}: best threshold interior = {}", run.run, run.best_is_interior());
    }
    Ok(())
}
