//! Config-driven experiment orchestration: the transfer comparison against
//! baselines, the threshold sweep, the ablation, and plot data.

mod cache;
mod config;
mod pipeline;
mod plots;
mod report;

pub use cache::{digest, read_json, write_json, StageStore};
pub use config::{Baseline, EvaluationConfig, ExperimentConfig, PoolConfig, SweepConfig};
pub use pipeline::{
    BaselineRun, EvaluationProvenance, Pipeline, RelevanceTable, RunContext, TaskSetRun, TaskSource,
};
pub use plots::{emit_plots, emit_sweep_plots, write_curves_csv};
pub use report::{
    ablation, epsilon_sweep, run_pipeline, BaselineSummary, ExperimentReport, Normalization, RunReport,
    SweepPoint, SweepReport, SweepRow, SweepRun, REPORT_SCHEMA, SWEEP_SCHEMA,
};
