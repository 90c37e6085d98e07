//! The full transfer experiment on a reduced maze pool, with plot data.
//!
//! Pass an output directory as the first argument to keep the files.

use std::path::PathBuf;

use itts::harness::{emit_plots, run_pipeline, ExperimentConfig, StageStore};

fn main() -> itts::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let config = ExperimentConfig {
        runs: 2,
        ..ExperimentConfig::default()
    };
    let store = match &out {
        Some(dir) => StageStore::on_disk(dir, true),
        None => StageStore::in_memory(),
    };
    let report = run_pipeline(&config, store)?;
    println!("{:<24} {:>8} {:>20} {:>6}", "baseline", "return", "95% CI", "|set|");
    for s in &report.summary {
        println!(
            "{:<24} {:>8.4} {:>9.4} .. {:<8.4} {:>6.2}",
            s.baseline, s.final_return.mean, s.final_return.ci_low, s.final_return.ci_high, s.mean_subset_size
        );
    }
    if let Some(dir) = out {
        for path in emit_plots(&report, &dir.join("plots"))? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
