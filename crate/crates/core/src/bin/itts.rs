use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use itts::harness::{
    ablation, emit_plots, emit_sweep_plots, epsilon_sweep, read_json, run_pipeline, write_curves_csv, Baseline,
    ExperimentConfig, ExperimentReport, Pipeline, StageStore, SweepReport,
};
use itts::select::{CandidateOrder, SelectionMode};
use itts::{Error, Result};

/// Information-theoretic task selection for meta-reinforcement learning.
#[derive(Parser)]
#[command(name = "itts", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config (TOML); built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reuse stored stage outputs whose inputs are unchanged.
    #[arg(long, global = true)]
    resume: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Itts,
    DifferenceOnly,
    RelevanceOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Manifest,
    Shuffled,
}

#[derive(Subcommand)]
enum Command {
    /// Write the task pool manifest of every run.
    GenerateTasks,
    /// Train every training task to convergence.
    TrainTasks,
    /// Run the selection and write the selection result of every run.
    Select {
        #[arg(long)]
        epsilon: Option<f64>,
        /// Relevance repeats `i`.
        #[arg(long)]
        repeats: Option<usize>,
        /// Fine-tuning episodes `l`.
        #[arg(long)]
        learning_episodes: Option<usize>,
        /// Validation state count `n`.
        #[arg(long)]
        states: Option<usize>,
        #[arg(long, value_enum)]
        order: Option<OrderArg>,
        #[arg(long, value_enum, default_value = "itts")]
        mode: ModeArg,
    },
    /// Meta-train on the task sets of the configured baselines.
    MetaTrain,
    /// Evaluate the meta-policies of the configured baselines and write curves.
    Evaluate,
    /// Full pipeline: report, curves and plot data.
    Run,
    /// Threshold sweep of the selection.
    Sweep {
        /// Comma-separated thresholds, overriding the config.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
    },
    /// Difference-only, relevance-only, full selection and all tasks.
    Ablate,
    /// Plot data from the reports in the output directory.
    Plots {
        /// Report to render instead of `<out>/report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_config() { 2 } else { 3 })
        }
    }
}

fn load_config(global: &Global) -> Result<ExperimentConfig> {
    let mut config = match &global.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("cannot read {}: {source}", path.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        config.pool.master_seed = seed;
    }
    if global.workers.is_some() {
        config.workers = global.workers;
    }
    if global.out.is_some() {
        config.output_dir = global.out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(config: &ExperimentConfig) -> PathBuf {
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from("itts-out"))
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli.global)?;
    let out = out_dir(&config);
    let resume = cli.global.resume;
    // Stage commands build on each other, so they always reuse matching outputs.
    let staged = StageStore::on_disk(&out, true);
    match cli.command {
        Command::GenerateTasks => {
            let pipeline = Pipeline::new(config, staged)?;
            for run in 0..pipeline.config().runs {
                let pool = pipeline.pool(run)?;
                println!(
                    "run {run}: {} training, {} validation, {} test tasks -> {}",
                    pool.training.len(),
                    pool.validation.len(),
                    pool.test.len(),
                    out.join(format!("run-{run}/pool.json")).display()
                );
            }
        }
        Command::TrainTasks => {
            let pipeline = Pipeline::new(config, staged)?;
            pipeline.install(|| {
                for run in 0..pipeline.config().runs {
                    let pool = pipeline.pool(run)?;
                    let trained = pipeline.train(run, &pool)?;
                    let converged = trained.iter().filter(|t| t.converged).count();
                    println!(
                        "run {run}: trained {} tasks ({converged} converged) -> {}",
                        trained.len(),
                        out.join(format!("run-{run}/trained")).display()
                    );
                }
                Ok(())
            })?;
        }
        Command::Select {
            epsilon,
            repeats,
            learning_episodes,
            states,
            order,
            mode,
        } => {
            let sel = &mut config.selection;
            sel.epsilon = epsilon.unwrap_or(sel.epsilon);
            sel.relevance_repeats = repeats.unwrap_or(sel.relevance_repeats);
            sel.learning_episodes = learning_episodes.unwrap_or(sel.learning_episodes);
            sel.validation_state_count = states.unwrap_or(sel.validation_state_count);
            if let Some(order) = order {
                sel.order = match order {
                    OrderArg::Manifest => CandidateOrder::Manifest,
                    OrderArg::Shuffled => CandidateOrder::Shuffled,
                };
            }
            let (mode, label) = match mode {
                ModeArg::Itts => (SelectionMode::Itts, "itts"),
                ModeArg::DifferenceOnly => (SelectionMode::DifferenceOnly, "difference_only"),
                ModeArg::RelevanceOnly => (SelectionMode::RelevanceOnly, "relevance_only"),
            };
            let epsilon = config.selection.epsilon;
            let pipeline = Pipeline::new(config, staged)?;
            pipeline.install(|| {
                for run in 0..pipeline.config().runs {
                    let ctx = pipeline.context(run)?;
                    let relevance = pipeline.relevance(&ctx)?;
                    let result = pipeline.select(&ctx, &relevance, mode, epsilon, label)?;
                    println!(
                        "run {run}: selected {:?} of {} -> {}",
                        result.selected,
                        ctx.trained.len(),
                        out.join(format!("run-{run}/selection-{label}.json")).display()
                    );
                }
                Ok(())
            })?;
        }
        Command::MetaTrain => {
            let baselines = config.baselines.clone();
            let pipeline = Pipeline::new(config, staged)?;
            pipeline.install(|| {
                for run in 0..pipeline.config().runs {
                    let ctx = pipeline.context(run)?;
                    let relevance = needs_relevance(&pipeline, &ctx, &baselines)?;
                    for b in &baselines {
                        for (id, source, indices) in pipeline.baseline_task_sets(&ctx, &relevance, b)? {
                            pipeline.meta_policy(&ctx, source, &indices)?;
                            let key = Pipeline::set_key(source, &indices)?;
                            println!(
                                "run {run}: {id} ({} tasks) -> {}",
                                indices.len(),
                                out.join(format!("run-{run}/meta/{key}.json")).display()
                            );
                        }
                    }
                }
                Ok(())
            })?;
        }
        Command::Evaluate => {
            let report = run_pipeline(&config, staged)?;
            let path = out.join("curves.csv");
            write_curves_csv(&report, &path)?;
            print_summary(&report);
            println!("curves -> {}", path.display());
        }
        Command::Run => {
            let report = run_pipeline(&config, StageStore::on_disk(&out, resume))?;
            emit_plots(&report, &out.join("plots"))?;
            print_summary(&report);
            println!("report -> {}", out.join("report.json").display());
        }
        Command::Sweep { epsilons } => {
            let epsilons = epsilons.unwrap_or_else(|| config.sweep.epsilons.clone());
            let report = epsilon_sweep(&config, &epsilons, StageStore::on_disk(&out, resume))?;
            emit_sweep_plots(&report, &out.join("plots"))?;
            println!("{:>10} {:>10} {:>12} {:>10}", "epsilon", "eps/|A|", "norm.return", "|C|");
            for row in &report.rows {
                println!(
                    "{:>10.4} {:>10.4} {:>12.4} {:>10.2}",
                    row.epsilon_raw, row.epsilon_normalized, row.mean_return, row.subset_size
                );
            }
            println!("report -> {}", out.join("sweep.json").display());
        }
        Command::Ablate => {
            let report = ablation(&config, StageStore::on_disk(&out, resume))?;
            print_summary(&report);
            println!("report -> {}", out.join("ablation.json").display());
        }
        Command::Plots { report } => {
            let dir = out.join("plots");
            let report_path = report.unwrap_or_else(|| out.join("report.json"));
            let mut written = Vec::new();
            if report_path.exists() {
                written.extend(emit_plots(&load::<ExperimentReport>(&report_path)?, &dir)?);
            }
            let sweep_path = out.join("sweep.json");
            if sweep_path.exists() {
                written.extend(emit_sweep_plots(&load::<SweepReport>(&sweep_path)?, &dir)?);
            }
            if written.is_empty() {
                return Err(Error::Config(format!(
                    "no report found at {} or {}",
                    report_path.display(),
                    sweep_path.display()
                )));
            }
            for path in written {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn needs_relevance(
    pipeline: &Pipeline,
    ctx: &itts::harness::RunContext,
    baselines: &[Baseline],
) -> Result<itts::harness::RelevanceTable> {
    if baselines.iter().any(|b| matches!(b, Baseline::Itts | Baseline::RelevanceOnly)) {
        pipeline.relevance(ctx)
    } else {
        Ok(Vec::new())
    }
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    read_json(path).map_err(|e| match e {
        Error::Io { path, source } => Error::Config(format!("cannot read {}: {source}", path.display())),
        other => other,
    })
}

fn print_summary(report: &ExperimentReport) {
    println!("{:<24} {:>10} {:>22} {:>8}", "baseline", "return", "95% CI", "|set|");
    for s in &report.summary {
        let r = &s.final_return;
        println!(
            "{:<24} {:>10.4} {:>10.4} .. {:<9.4} {:>8.2}",
            s.baseline, r.mean, r.ci_low, r.ci_high, s.mean_subset_size
        );
    }
}
