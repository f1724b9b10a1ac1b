//! End-to-end runs: learn scaling factors on the training rows, embed all
//! samples, then cluster or classify, for every σ of a grid and every split.

mod config;
mod report;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::{leave_one_out, split, standardize, DataMatrix, Split};
use crate::downstream::{kmeans, nn1_classify};
use crate::fscale::{
    apply_scaling, assemble_pencil, estimate_fiedler, learn_scaling, linearization_violation, NegativeValue,
    ScalingVector,
};
use crate::metrics::{nmi, rand_index};
use crate::simgraph::{build_from_distances, build_similarity, scaled_sq_distances, KernelParams};
use crate::specembed::embed;
use crate::{Error, Result};

pub use config::{parse_negative, parse_sigma_grid, ExperimentConfig, Method, Task};
pub use report::{
    format_table, write_manifest, write_runs_csv, write_summary_csv, ConfigView, DataView,
    Manifest, ReportView,
};

/// Scaling diagnostics for one supervised run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingDiagnostics {
    pub mu: Option<f64>,
    pub residual: Option<f64>,
    pub constraint_violation: Option<f64>,
    pub linearization_violation: Option<f64>,
    /// No scaling could be learned and the run used `s = e`.
    pub fallback: bool,
    pub fallback_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub sigma: f64,
    pub repetition: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub ri: Option<f64>,
    pub nmi: Option<f64>,
    pub scaling: Option<ScalingDiagnostics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSummary {
    pub sigma: f64,
    pub completed: usize,
    pub failed: usize,
    pub mean_ri: Option<f64>,
    pub std_ri: Option<f64>,
    pub mean_nmi: Option<f64>,
    pub std_nmi: Option<f64>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: Task,
    pub method: Method,
    pub ell: usize,
    pub protocol: String,
    pub train_fraction: f64,
    pub per_sigma: Vec<SigmaSummary>,
    /// σ with the best mean RI (earliest in the grid on ties).
    pub selected_sigma: Option<f64>,
}

impl EvalReport {
    pub fn selected(&self) -> Option<&SigmaSummary> {
        let s = self.selected_sigma?;
        self.per_sigma.iter().find(|x| x.sigma == s)
    }
}

/// Mean and sample standard deviation (`n − 1` denominator; zero for one value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

fn summarize(sigma: f64, runs: Vec<RunRecord>) -> SigmaSummary {
    let ri: Vec<f64> = runs.iter().filter_map(|r| r.ri).collect();
    let nm: Vec<f64> = runs.iter().filter_map(|r| r.nmi).collect();
    let (mean_ri, std_ri) = mean_std(&ri).unzip();
    let (mean_nmi, std_nmi) = mean_std(&nm).unzip();
    SigmaSummary {
        sigma,
        completed: ri.len(),
        failed: runs.len() - ri.len(),
        mean_ri,
        std_ri,
        mean_nmi,
        std_nmi,
        runs,
    }
}

fn select_sigma(per_sigma: &[SigmaSummary]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for s in per_sigma {
        if let Some(m) = s.mean_ri {
            if best.is_none_or(|(b, _)| m > b) {
                best = Some((m, s.sigma));
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Data after the optional standardization, shared by all runs.
struct Prepared {
    y: DMatrix<f64>,
    labels: Vec<u32>,
    /// Unscaled pairwise distances, reused by every unsupervised run.
    plain: Option<DMatrix<f64>>,
}

fn prepare(config: &ExperimentConfig, data: &DataMatrix) -> Result<Prepared> {
    config.validate()?;
    let labels = data.require_labels()?.to_vec();
    let y = if config.standardize && !data.standardized {
        standardize(data)?.values
    } else {
        data.values.clone()
    };
    let plain = match config.method {
        Method::Unsupervised => Some(scaled_sq_distances(&y, None)?),
        Method::Supervised => None,
    };
    Ok(Prepared { y, labels, plain })
}

/// Learns `s` from the training rows. `Ok(None)` plus diagnostics means the
/// pencil gave no usable factors and the run falls back to `s = e`.
pub fn learn_on_training(
    y: &DMatrix<f64>,
    labels: &[u32],
    train: &[usize],
    sigma: f64,
    config: &ExperimentConfig,
) -> Result<(Option<ScalingVector>, ScalingDiagnostics)> {
    let x = DMatrix::from_fn(train.len(), y.ncols(), |r, c| y[(train[r], c)]);
    let train_labels: Vec<u32> = train.iter().map(|&i| labels[i]).collect();
    let degrees = match config.fiedler_negative {
        NegativeValue::Auto => Some(build_similarity(&x, &KernelParams {
            sigma,
            k_neighbors: config.k_neighbors,
            scaling: None,
        })?
        .degrees),
        NegativeValue::Fixed(_) => None,
    };
    let v = estimate_fiedler(&train_labels, config.fiedler_negative, degrees.as_ref())?;
    let ps = assemble_pencil(&x, &v.v, sigma)?;
    match learn_scaling(&ps, config.residual_tol) {
        Ok(sv) => {
            let lin = linearization_violation(&x, &sv.s, sigma)?;
            let diag = ScalingDiagnostics {
                mu: Some(sv.mu),
                residual: Some(sv.residual),
                constraint_violation: Some(sv.constraint_violation),
                linearization_violation: Some(lin),
                fallback: false,
                fallback_reason: None,
            };
            Ok((Some(sv), diag))
        }
        Err(e @ (Error::NoScaling(_) | Error::NonNormalizable)) => Ok((
            None,
            ScalingDiagnostics {
                mu: None,
                residual: None,
                constraint_violation: None,
                linearization_violation: None,
                fallback: true,
                fallback_reason: Some(e.to_string()),
            },
        )),
        Err(e) => Err(e),
    }
}

fn run_one(
    prep: &Prepared,
    config: &ExperimentConfig,
    sigma: f64,
    split: &Split,
    repetition: usize,
) -> RunRecord {
    let mut record = RunRecord {
        sigma,
        repetition,
        n_train: split.train.len(),
        n_test: split.test.len(),
        ri: None,
        nmi: None,
        scaling: None,
        error: None,
    };
    if let Err(e) = evaluate(prep, config, sigma, split, repetition, &mut record) {
        record.error = Some(e.to_string());
    }
    record
}

fn evaluate(
    prep: &Prepared,
    config: &ExperimentConfig,
    sigma: f64,
    split: &Split,
    repetition: usize,
    record: &mut RunRecord,
) -> Result<()> {
    let graph = match &prep.plain {
        Some(dist) => build_from_distances(dist, sigma, config.k_neighbors)?,
        None => {
            let (sv, diag) = learn_on_training(&prep.y, &prep.labels, &split.train, sigma, config)?;
            record.scaling = Some(diag);
            let s = sv.map(|v| v.s);
            let (y, scaling) = match (config.signed_metric, s) {
                (true, s) => (prep.y.clone(), s),
                (false, Some(s)) => (apply_scaling(&prep.y, &s)?.z, None),
                (false, None) => (prep.y.clone(), None),
            };
            build_similarity(&y, &KernelParams {
                sigma,
                k_neighbors: config.k_neighbors,
                scaling,
            })?
        }
    };
    let emb = embed(&graph, config.ell)?;
    match config.task {
        Task::Cluster => {
            let seed = config.seed.wrapping_add(repetition as u64);
            let km = kmeans(&emb.u, 2, config.kmeans_restarts, seed, config.kmeans_max_iter)?;
            let pred: Vec<u32> = km.labels.iter().map(|&l| l as u32).collect();
            record.ri = Some(rand_index(&prep.labels, &pred, true)?);
            record.nmi = Some(nmi(&prep.labels, &pred)?.value);
        }
        Task::Classify => {
            if split.test.is_empty() {
                return Err(Error::InvalidParameter("no test samples to classify".into()));
            }
            let train_labels: Vec<u32> = split.train.iter().map(|&i| prep.labels[i]).collect();
            let pred = nn1_classify(&emb.u, &split.train, &train_labels, &split.test)?;
            let truth: Vec<u32> = split.test.iter().map(|&i| prep.labels[i]).collect();
            record.ri = Some(rand_index(&truth, &pred, false)?);
            record.nmi = Some(nmi(&truth, &pred)?.value);
        }
    }
    Ok(())
}

fn run_splits(
    config: &ExperimentConfig,
    data: &DataMatrix,
    splits: &[Split],
    protocol: &str,
    train_fraction: f64,
) -> Result<EvalReport> {
    let prep = prepare(config, data)?;
    let jobs: Vec<(f64, usize)> = config
        .sigma_grid
        .iter()
        .flat_map(|&sigma| (0..splits.len()).map(move |rep| (sigma, rep)))
        .collect();
    // runs are independent; collect keeps grid order
    let mut records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(sigma, rep)| run_one(&prep, config, sigma, &splits[rep], rep))
        .collect();
    let mut per_sigma = Vec::with_capacity(config.sigma_grid.len());
    for &sigma in config.sigma_grid.iter().rev() {
        let runs = records.split_off(records.len() - splits.len());
        per_sigma.push(summarize(sigma, runs));
    }
    per_sigma.reverse();
    let selected_sigma = select_sigma(&per_sigma);
    Ok(EvalReport {
        task: config.task,
        method: config.method,
        ell: config.ell,
        protocol: protocol.to_string(),
        train_fraction,
        per_sigma,
        selected_sigma,
    })
}

/// Repeated stratified splits at `config.split.train_fraction`.
pub fn run_pipeline(config: &ExperimentConfig, data: &DataMatrix) -> Result<EvalReport> {
    config.validate()?;
    let labels = data.require_labels()?;
    let splits = (0..config.split.repetitions)
        .map(|r| split(labels, &config.split, r))
        .collect::<Result<Vec<_>>>()?;
    run_splits(config, data, &splits, "split", config.split.train_fraction)
}

/// Leave-one-out over all samples, or over the first `limit` holdouts.
pub fn loocv(config: &ExperimentConfig, data: &DataMatrix, limit: Option<usize>) -> Result<EvalReport> {
    config.validate()?;
    let n = data.n_samples();
    if n < 3 {
        return Err(Error::InsufficientSamples { required: 3, got: n });
    }
    let held = limit.unwrap_or(n).min(n);
    let splits: Vec<Split> = (0..held).map(|i| leave_one_out(n, i)).collect();
    run_splits(config, data, &splits, "loocv", (n - 1) as f64 / n as f64)
}

/// One report per training fraction.
pub fn sweep(base: &ExperimentConfig, data: &DataMatrix, fractions: &[f64]) -> Result<Vec<EvalReport>> {
    fractions
        .iter()
        .map(|&f| {
            let mut c = base.clone();
            c.split.train_fraction = f;
            run_pipeline(&c, data)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::generate_toy;

    #[test]
    fn mean_std_conventions() {
        assert_eq!(mean_std(&[]), None);
        assert_eq!(mean_std(&[2.0]), Some((2.0, 0.0)));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn selection_prefers_earliest_best() {
        let mk = |sigma, m| SigmaSummary {
            sigma,
            completed: 1,
            failed: 0,
            mean_ri: m,
            std_ri: Some(0.0),
            mean_nmi: None,
            std_nmi: None,
            runs: vec![],
        };
        let s = vec![mk(0.1, None), mk(1.0, Some(0.9)), mk(10.0, Some(0.9)), mk(100.0, Some(0.5))];
        assert_eq!(select_sigma(&s), Some(1.0));
    }

    #[test]
    fn small_pipeline_is_deterministic() {
        let data = generate_toy(60, 2).unwrap();
        let config = ExperimentConfig {
            sigma_grid: vec![1.0],
            split: crate::dataio::SplitSpec {
                train_fraction: 0.5,
                seed: 1,
                repetitions: 2,
            },
            ..ExperimentConfig::default()
        };
        let a = run_pipeline(&config, &data).unwrap();
        let b = run_pipeline(&config, &data).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_sigma[0].runs.len(), 2);
        assert_eq!(a.selected_sigma, Some(1.0));
    }

    #[test]
    fn failed_runs_are_recorded() {
        let data = generate_toy(40, 2).unwrap();
        let config = ExperimentConfig {
            sigma_grid: vec![1e-3, 1.0],
            split: crate::dataio::SplitSpec {
                train_fraction: 0.5,
                seed: 1,
                repetitions: 1,
            },
            task: Task::Cluster,
            method: Method::Unsupervised,
            ..ExperimentConfig::default()
        };
        let r = run_pipeline(&config, &data).unwrap();
        assert_eq!(r.per_sigma[0].failed, 1);
        assert!(r.per_sigma[0].runs[0].error.is_some());
        assert_eq!(r.selected_sigma, Some(1.0));
    }
}
