use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::{EvalReport, ExperimentConfig};
use crate::fscale::NegativeValue;
use crate::{Error, Result};

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// One row per (report, σ, repetition).
pub fn write_runs_csv<W: Write>(out: W, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "task",
        "method",
        "ell",
        "protocol",
        "train_fraction",
        "sigma",
        "repetition",
        "n_train",
        "n_test",
        "ri",
        "nmi",
        "mu",
        "residual",
        "constraint_violation",
        "linearization_violation",
        "fallback",
        "error",
    ])
    .map_err(csv_err)?;
    for r in reports {
        for s in &r.per_sigma {
            for run in &s.runs {
                let d = run.scaling.as_ref();
                w.write_record([
                    r.task.to_string(),
                    r.method.to_string(),
                    r.ell.to_string(),
                    r.protocol.clone(),
                    r.train_fraction.to_string(),
                    run.sigma.to_string(),
                    run.repetition.to_string(),
                    run.n_train.to_string(),
                    run.n_test.to_string(),
                    opt(run.ri),
                    opt(run.nmi),
                    opt(d.and_then(|d| d.mu)),
                    opt(d.and_then(|d| d.residual)),
                    opt(d.and_then(|d| d.constraint_violation)),
                    opt(d.and_then(|d| d.linearization_violation)),
                    d.map(|d| d.fallback.to_string()).unwrap_or_default(),
                    run.error.clone().unwrap_or_default(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per (report, σ) with mean/std and the selected-σ marker.
pub fn write_summary_csv<W: Write>(out: W, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "task",
        "method",
        "ell",
        "protocol",
        "train_fraction",
        "sigma",
        "completed",
        "failed",
        "mean_ri",
        "std_ri",
        "mean_nmi",
        "std_nmi",
        "selected",
    ])
    .map_err(csv_err)?;
    for r in reports {
        for s in &r.per_sigma {
            w.write_record([
                r.task.to_string(),
                r.method.to_string(),
                r.ell.to_string(),
                r.protocol.clone(),
                r.train_fraction.to_string(),
                s.sigma.to_string(),
                s.completed.to_string(),
                s.failed.to_string(),
                opt(s.mean_ri),
                opt(s.std_ri),
                opt(s.mean_nmi),
                opt(s.std_nmi),
                (r.selected_sigma == Some(s.sigma)).to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Human-readable table, `mean% ± std` per σ with the selected row starred.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{:<9} {:<13} {:>3} {:>8} {:>9} {:>6} {:>17} {:>17}",
        "task", "method", "ell", "train", "sigma", "runs", "RI (%)", "NMI (%)"
    );
    let pct = |m: Option<f64>, s: Option<f64>| match (m, s) {
        (Some(m), Some(s)) => format!("{:.1} ± {:.1}", 100.0 * m, 100.0 * s),
        _ => "-".to_string(),
    };
    for r in reports {
        for s in &r.per_sigma {
            let mark = if r.selected_sigma == Some(s.sigma) { "*" } else { " " };
            let _ = writeln!(
                t,
                "{:<9} {:<13} {:>3} {:>8.3} {:>9} {:>6} {:>16}{} {:>17}",
                r.task.to_string(),
                r.method.to_string(),
                r.ell,
                r.train_fraction,
                s.sigma,
                format!("{}/{}", s.completed, s.completed + s.failed),
                pct(s.mean_ri, s.std_ri),
                mark,
                pct(s.mean_nmi, s.std_nmi),
            );
        }
    }
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigView {
    pub task: String,
    pub method: String,
    pub ell: usize,
    pub sigma_grid: Vec<f64>,
    pub k_neighbors: usize,
    pub fiedler_negative: String,
    pub residual_tol: f64,
    pub train_fraction: f64,
    pub repetitions: usize,
    pub split_seed: u64,
    pub seed: u64,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub standardize: bool,
    pub signed_metric: bool,
}

impl From<&ExperimentConfig> for ConfigView {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            task: c.task.to_string(),
            method: c.method.to_string(),
            ell: c.ell,
            sigma_grid: c.sigma_grid.clone(),
            k_neighbors: c.k_neighbors,
            fiedler_negative: match c.fiedler_negative {
                NegativeValue::Fixed(b) => b.to_string(),
                NegativeValue::Auto => "auto".into(),
            },
            residual_tol: c.residual_tol,
            train_fraction: c.split.train_fraction,
            repetitions: c.split.repetitions,
            split_seed: c.split.seed,
            seed: c.seed,
            kmeans_restarts: c.kmeans_restarts,
            kmeans_max_iter: c.kmeans_max_iter,
            standardize: c.standardize,
            signed_metric: c.signed_metric,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DataView {
    pub source: String,
    pub n_samples: usize,
    pub n_features: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportView {
    pub task: String,
    pub method: String,
    pub ell: usize,
    pub protocol: String,
    pub train_fraction: f64,
    pub selected_sigma: Option<f64>,
    pub selected_mean_ri: Option<f64>,
    pub selected_std_ri: Option<f64>,
    pub runs: usize,
    pub failed_runs: usize,
    pub fallback_runs: usize,
}

/// Run manifest: everything needed to reproduce the outputs, and nothing
/// that changes between identical invocations.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ConfigView,
    pub data: DataView,
    pub fractions: Vec<f64>,
    pub outputs: Vec<String>,
    pub reports: Vec<ReportView>,
}

impl Manifest {
    pub fn new(
        command: &str,
        config: &ExperimentConfig,
        data: DataView,
        fractions: Vec<f64>,
        outputs: Vec<String>,
        reports: &[EvalReport],
    ) -> Self {
        let reports = reports
            .iter()
            .map(|r| {
                let sel = r.selected();
                let runs = r.per_sigma.iter().map(|s| s.runs.len()).sum();
                let failed_runs = r.per_sigma.iter().map(|s| s.failed).sum();
                let fallback_runs = r
                    .per_sigma
                    .iter()
                    .flat_map(|s| &s.runs)
                    .filter(|x| x.scaling.as_ref().is_some_and(|d| d.fallback))
                    .count();
                ReportView {
                    task: r.task.to_string(),
                    method: r.method.to_string(),
                    ell: r.ell,
                    protocol: r.protocol.clone(),
                    train_fraction: r.train_fraction,
                    selected_sigma: r.selected_sigma,
                    selected_mean_ri: sel.and_then(|s| s.mean_ri),
                    selected_std_ri: sel.and_then(|s| s.std_ri),
                    runs,
                    failed_runs,
                    fallback_runs,
                }
            })
            .collect();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.into(),
            data,
            fractions,
            outputs,
            reports,
        }
    }
}

pub fn write_manifest<W: Write>(mut out: W, manifest: &Manifest) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, manifest)?;
    writeln!(out)?;
    Ok(())
}
