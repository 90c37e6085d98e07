use std::fs;
use std::path::{Path, PathBuf};

use super::config::Baseline;
use super::report::{ExperimentReport, SweepReport};
use crate::error::{Error, Result};
use crate::stats::Summary;

const PLOT_SCRIPT: &str = r#"# Renders the CSV files in this directory with matplotlib.
import csv, glob, os
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))

def rows(name):
    with open(os.path.join(here, name)) as f:
        return list(csv.DictReader(f))

for path in sorted(glob.glob(os.path.join(here, "transfer-*.csv"))):
    data = rows(os.path.basename(path))
    fig, ax = plt.subplots()
    for baseline in dict.fromkeys(r["baseline"] for r in data):
        pts = [r for r in data if r["baseline"] == baseline]
        x = [int(r["episode"]) for r in pts]
        ax.plot(x, [float(r["mean_return"]) for r in pts], label=baseline)
        ax.fill_between(x, [float(r["ci_low"]) for r in pts], [float(r["ci_high"]) for r in pts], alpha=0.2)
    ax.set_xlabel("adaptation episode")
    ax.set_ylabel("normalized return")
    ax.legend()
    fig.savefig(path[:-4] + ".png", dpi=150)

if os.path.exists(os.path.join(here, "sweep.csv")):
    data = rows("sweep.csv")
    x = [float(r["epsilon_normalized"]) for r in data]
    fig, ax = plt.subplots()
    ax.plot(x, [float(r["mean_return"]) for r in data], marker="o")
    ax.fill_between(x, [float(r["ci_low"]) for r in data], [float(r["ci_high"]) for r in data], alpha=0.2)
    ax.set_xlabel("epsilon / |A|")
    ax.set_ylabel("normalized return")
    fig.savefig(os.path.join(here, "sweep.png"), dpi=150)
"#;

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::config(format!("cannot write {}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::config(format!("cannot write {}: {e}", path.display()))
}

fn write_script(dir: &Path) -> Result<PathBuf> {
    let path = dir.join("plot.py");
    fs::write(&path, PLOT_SCRIPT).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the per-episode transfer curves, the raw curves, a summary table
/// and a plotting script into `dir`.
pub fn emit_plots(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let expected: Vec<String> = report.config.baselines.iter().map(Baseline::label).collect();
    let mut missing: Vec<String> = expected
        .iter()
        .filter(|label| report.runs.is_empty() || report.runs.iter().any(|r| r.baseline(label).is_none()))
        .cloned()
        .collect();
    missing.dedup();
    if !missing.is_empty() {
        return Err(Error::config(format!("report lacks baselines: {}", missing.join(", "))));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let norm = report.normalization;
    let family = serde_json::to_value(report.config.pool.family)?;
    let family = family.as_str().unwrap_or("domain");

    let transfer = dir.join(format!("transfer-{family}.csv"));
    let mut w = csv_writer(&transfer)?;
    w.write_record(["baseline", "episode", "mean_return", "ci_low", "ci_high", "raw_mean_return", "runs"])
        .map_err(csv_err(&transfer))?;
    for label in &expected {
        // Per run: average curve over task sets, test tasks and seeds.
        let per_run: Vec<Vec<f64>> = report
            .runs
            .iter()
            .map(|r| {
                let curves: Vec<&Vec<f64>> = r
                    .baseline(label)
                    .into_iter()
                    .flat_map(|b| &b.task_sets)
                    .flat_map(|s| &s.curves)
                    .flat_map(|c| &c.per_seed_returns)
                    .collect();
                let len = curves.first().map_or(0, |c| c.len());
                (0..len)
                    .map(|ep| curves.iter().map(|c| c[ep]).sum::<f64>() / curves.len() as f64)
                    .collect()
            })
            .collect();
        let len = per_run.first().map_or(0, Vec::len);
        for ep in 0..len {
            let raw: Vec<f64> = per_run.iter().map(|c| c[ep]).collect();
            let s = Summary::of(&raw.iter().map(|&v| norm.apply(v)).collect::<Vec<_>>());
            let raw_mean = Summary::of(&raw).mean;
            w.write_record([
                label.clone(),
                ep.to_string(),
                s.mean.to_string(),
                s.ci_low.to_string(),
                s.ci_high.to_string(),
                raw_mean.to_string(),
                s.count.to_string(),
            ])
            .map_err(csv_err(&transfer))?;
        }
    }
    w.flush().map_err(|e| Error::io(&transfer, e))?;

    let curves = dir.join("curves.csv");
    write_curves_csv(report, &curves)?;

    let summary = dir.join("summary.csv");
    let mut w = csv_writer(&summary)?;
    w.write_record([
        "baseline",
        "mean_return",
        "ci_low",
        "ci_high",
        "normalized_mean_return",
        "normalized_ci_low",
        "normalized_ci_high",
        "mean_subset_size",
    ])
    .map_err(csv_err(&summary))?;
    for s in &report.summary {
        let (r, n) = (&s.final_return, &s.normalized_final_return);
        w.write_record([
            s.baseline.clone(),
            r.mean.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            n.mean.to_string(),
            n.ci_low.to_string(),
            n.ci_high.to_string(),
            s.mean_subset_size.to_string(),
        ])
        .map_err(csv_err(&summary))?;
    }
    w.flush().map_err(|e| Error::io(&summary, e))?;

    Ok(vec![transfer, curves, summary, write_script(dir)?])
}

/// Every adaptation return in `report`, one row per (task set, test task, seed, episode).
pub fn write_curves_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv_writer(path)?;
    w.write_record(["baseline", "task_set_id", "test_task", "seed", "episode", "return"])
        .map_err(csv_err(path))?;
    for run in &report.runs {
        for b in &run.baselines {
            for set in &b.task_sets {
                let id = format!("run-{}/{}", run.run, set.task_set_id);
                for c in &set.curves {
                    for (seed, returns) in c.per_seed_returns.iter().enumerate() {
                        for (ep, ret) in returns.iter().enumerate() {
                            w.write_record([
                                b.baseline.clone(),
                                id.clone(),
                                c.test_task.to_string(),
                                seed.to_string(),
                                ep.to_string(),
                                ret.to_string(),
                            ])
                            .map_err(csv_err(path))?;
                        }
                    }
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    Ok(())
}

/// Writes `sweep.csv` and the plotting script into `dir`.
pub fn emit_sweep_plots(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("sweep.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["epsilon_raw", "epsilon_normalized", "mean_return", "ci_low", "ci_high", "subset_size"])
        .map_err(csv_err(&path))?;
    for row in &report.rows {
        w.write_record([
            row.epsilon_raw.to_string(),
            row.epsilon_normalized.to_string(),
            row.mean_return.to_string(),
            row.ci_low.to_string(),
            row.ci_high.to_string(),
            row.subset_size.to_string(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(vec![path, write_script(dir)?])
}
