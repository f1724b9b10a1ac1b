//! k-means clustering and one-nearest-neighbour classification on embeddings.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub centroids: DMatrix<f64>,
    pub restarts_used: usize,
    /// Restart that produced the result.
    pub best_restart: usize,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centroids.row(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn assign(points: &DMatrix<f64>, centroids: &DMatrix<f64>, labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for c in 0..centroids.nrows() {
            let d = sq_dist(points, i, centroids, c);
            if d < best.0 {
                best = (d, c);
            }
        }
        *label = best.1;
        inertia += best.0;
    }
    inertia
}

/// Moves each centroid to the mean of its members. An empty cluster takes
/// the point farthest from its current centroid, which is then reassigned.
fn update(points: &DMatrix<f64>, centroids: &mut DMatrix<f64>, labels: &mut [usize]) {
    let (n, dim) = points.shape();
    let k = centroids.nrows();
    let mut counts = vec![0usize; k];
    let mut sums = DMatrix::zeros(k, dim);
    for i in 0..n {
        counts[labels[i]] += 1;
        let mut row = sums.row_mut(labels[i]);
        row += points.row(i);
    }
    for c in 0..k {
        if counts[c] > 0 {
            centroids.set_row(c, &(sums.row(c) / counts[c] as f64));
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far = (-1.0, 0);
        for i in 0..n {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(points, i, centroids, labels[i]);
            if d > far.0 {
                far = (d, i);
            }
        }
        let i = far.1;
        counts[labels[i]] -= 1;
        labels[i] = c;
        counts[c] = 1;
        centroids.set_row(c, &points.row(i));
    }
}

fn lloyd(
    points: &DMatrix<f64>,
    k: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, DMatrix<f64>, Vec<f64>) {
    let n = points.nrows();
    let init = rand::seq::index::sample(rng, n, k);
    let mut centroids = DMatrix::from_fn(k, points.ncols(), |c, d| points[(init.index(c), d)]);
    let mut labels = vec![0usize; n];
    let mut trace = vec![assign(points, &centroids, &mut labels)];
    let mut next = labels.clone();
    for _ in 0..max_iter {
        update(points, &mut centroids, &mut labels);
        let inertia = assign(points, &centroids, &mut next);
        trace.push(inertia);
        if next == labels {
            break;
        }
        std::mem::swap(&mut labels, &mut next);
    }
    // final centroids consistent with the final labels
    update(points, &mut centroids, &mut labels);
    (labels, centroids, trace)
}

/// Lloyd's algorithm from `restarts` random initializations, each choosing
/// `k` distinct sample points. Restart `r` draws from ChaCha stream `r` of
/// `seed`; the lowest inertia wins, ties going to the earlier restart.
pub fn kmeans(
    points: &DMatrix<f64>,
    k: usize,
    restarts: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterAssignment> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} for {n} points")));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be positive".into()));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("k-means input"));
    }
    let mut best: Option<ClusterAssignment> = None;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let (labels, centroids, trace) = lloyd(points, k, max_iter, &mut rng);
        let inertia = (0..n).map(|i| sq_dist(points, i, &centroids, labels[i])).sum();
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(ClusterAssignment {
                labels,
                inertia,
                centroids,
                restarts_used: restarts,
                best_restart: r,
                inertia_trace: trace,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Labels each test row with the label of its nearest training row.
/// Equidistant training rows resolve to the smaller sample index.
pub fn nn1_classify(
    embedding: &DMatrix<f64>,
    train: &[usize],
    train_labels: &[u32],
    test: &[usize],
) -> Result<Vec<u32>> {
    if train.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if train.len() != train_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} training rows, {} labels",
            train.len(),
            train_labels.len()
        )));
    }
    let n = embedding.nrows();
    if let Some(&bad) = train.iter().chain(test).find(|&&i| i >= n) {
        return Err(Error::InvalidParameter(format!("row index {bad} out of {n}")));
    }
    Ok(test
        .iter()
        .map(|&t| {
            let mut best = (f64::INFINITY, usize::MAX, 0u32);
            for (&i, &label) in train.iter().zip(train_labels) {
                let d: f64 = embedding
                    .row(t)
                    .iter()
                    .zip(embedding.row(i).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best.0 || (d == best.0 && i < best.1) {
                    best = (d, i, label);
                }
            }
            best.2
        })
        .collect())
}
