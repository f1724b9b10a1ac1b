use nalgebra::DMatrix;

use specscale::dataio::{generate_toy, DataMatrix, SplitSpec};
use specscale::experiment::{loocv, mean_std, run_pipeline, sweep, EvalReport, ExperimentConfig, Method, Task};

fn small_config(task: Task, method: Method) -> ExperimentConfig {
    ExperimentConfig {
        task,
        method,
        sigma_grid: vec![0.1, 1.0, 10.0],
        split: SplitSpec {
            train_fraction: 0.5,
            seed: 3,
            repetitions: 4,
        },
        kmeans_restarts: 5,
        ..ExperimentConfig::default()
    }
}

fn assert_summaries_recompute(report: &EvalReport) {
    for s in &report.per_sigma {
        let ri: Vec<f64> = s.runs.iter().filter_map(|r| r.ri).collect();
        let nmi: Vec<f64> = s.runs.iter().filter_map(|r| r.nmi).collect();
        assert_eq!(s.completed + s.failed, s.runs.len());
        assert_eq!(s.completed, ri.len());
        if let Some((m, sd)) = mean_std(&ri) {
            let n = ri.len() as f64;
            let mean = ri.iter().sum::<f64>() / n;
            let var = if ri.len() > 1 {
                ri.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            assert!((s.mean_ri.unwrap() - mean).abs() <= 1e-12);
            assert!((s.std_ri.unwrap() - var.sqrt()).abs() <= 1e-12);
            assert_eq!((m, sd), (s.mean_ri.unwrap(), s.std_ri.unwrap()));
        } else {
            assert!(s.mean_ri.is_none());
        }
        assert_eq!(mean_std(&nmi).map(|x| x.0), s.mean_nmi);
    }
}

#[test]
fn separated_blobs_cluster_perfectly() {
    let n = 20;
    let values = DMatrix::from_fn(n, 2, |i, j| {
        let offset = if i < n / 2 { 0.0 } else { 50.0 };
        offset + 0.01 * ((i * 7 + j * 3) % 5) as f64
    });
    let labels: Vec<u32> = (0..n).map(|i| if i < n / 2 { 1 } else { 2 }).collect();
    let data = DataMatrix::new(values, Some(labels)).unwrap();
    let config = ExperimentConfig {
        sigma_grid: vec![1.0],
        // every blob is one connected component
        k_neighbors: 9,
        standardize: false,
        ..small_config(Task::Cluster, Method::Unsupervised)
    };
    let rep = run_pipeline(&config, &data).unwrap();
    for run in &rep.per_sigma[0].runs {
        assert_eq!(run.ri, Some(1.0));
        assert_eq!(run.nmi, Some(1.0));
    }
}

#[test]
fn summaries_match_their_runs() {
    let data = generate_toy(60, 4).unwrap();
    for (task, method) in [
        (Task::Classify, Method::Supervised),
        (Task::Cluster, Method::Supervised),
        (Task::Cluster, Method::Unsupervised),
    ] {
        let rep = run_pipeline(&small_config(task, method), &data).unwrap();
        assert_summaries_recompute(&rep);
        let best = rep.selected().unwrap().mean_ri.unwrap();
        assert!(rep.per_sigma.iter().all(|s| s.mean_ri.is_none_or(|m| m <= best)));
    }
}

#[test]
fn sweep_sample_counts_grow_with_fraction() {
    let data = generate_toy(60, 5).unwrap();
    let fractions: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let config = ExperimentConfig {
        sigma_grid: vec![1.0],
        ..small_config(Task::Classify, Method::Supervised)
    };
    let reports = sweep(&config, &data, &fractions).unwrap();
    assert_eq!(reports.len(), 10);
    let counts: Vec<usize> = reports.iter().map(|r| r.per_sigma[0].runs[0].n_train).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    for r in &reports {
        assert_summaries_recompute(r);
    }
    assert!(sweep(&config, &data, &[]).unwrap().is_empty());
}

#[test]
fn full_training_fraction_is_deterministic() {
    let data = generate_toy(40, 6).unwrap();
    let config = ExperimentConfig {
        sigma_grid: vec![1.0],
        split: SplitSpec {
            train_fraction: 1.0,
            seed: 0,
            repetitions: 2,
        },
        ..small_config(Task::Cluster, Method::Supervised)
    };
    let a = run_pipeline(&config, &data).unwrap();
    let b = run_pipeline(&config, &data).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.per_sigma[0].completed, 2);

    // nothing is left to classify
    let classify = ExperimentConfig {
        task: Task::Classify,
        ..config
    };
    let c = run_pipeline(&classify, &data).unwrap();
    assert_eq!(c.per_sigma[0].failed, 2);
}

#[test]
fn loocv_holds_out_one_sample_per_run() {
    let data = generate_toy(30, 7).unwrap();
    let config = ExperimentConfig {
        sigma_grid: vec![1.0],
        ..small_config(Task::Classify, Method::Supervised)
    };
    let rep = loocv(&config, &data, Some(5)).unwrap();
    assert_eq!(rep.protocol, "loocv");
    let runs = &rep.per_sigma[0].runs;
    assert_eq!(runs.len(), 5);
    assert!(runs.iter().all(|r| r.n_train == 29 && r.n_test == 1));
    assert!(runs.iter().all(|r| r.ri.is_some_and(|x| x == 0.0 || x == 1.0)));
    assert_summaries_recompute(&rep);
}
