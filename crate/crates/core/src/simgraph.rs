//! Gaussian k-nearest-neighbour similarity graphs.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Squared per-feature differences `X[i][j][l] = (y_il − y_jl)²` for all pairs.
#[derive(Debug, Clone)]
pub struct PairwiseSqDiff {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl PairwiseSqDiff {
    pub fn new(y: &DMatrix<f64>) -> Result<Self> {
        if y.nrows() < 2 {
            return Err(Error::InsufficientSamples {
                required: 2,
                got: y.nrows(),
            });
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("data matrix"));
        }
        let (n, m) = y.shape();
        let mut data = vec![0.0; n * n * m];
        for i in 0..n {
            for j in (i + 1)..n {
                for l in 0..m {
                    let d = y[(i, l)] - y[(j, l)];
                    let v = d * d;
                    data[(i * n + j) * m + l] = v;
                    data[(j * n + i) * m + l] = v;
                }
            }
        }
        Ok(Self { n, m, data })
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.m
    }

    /// Squared differences between samples `i` and `j`, one per feature.
    pub fn pair(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.m;
        &self.data[start..start + self.m]
    }

    /// `X_i = [x_i1, …, x_in] / 2σ²` as an `m×n` matrix.
    pub fn slab(&self, i: usize, sigma: f64) -> DMatrix<f64> {
        let c = 1.0 / (2.0 * sigma * sigma);
        DMatrix::from_fn(self.m, self.n, |l, j| self.pair(i, j)[l] * c)
    }

    /// `x̂_i = Σ_j x_ij / 2σ²`.
    pub fn row_sum(&self, i: usize, sigma: f64) -> DVector<f64> {
        let c = 1.0 / (2.0 * sigma * sigma);
        let mut s = DVector::zeros(self.m);
        for j in 0..self.n {
            for (acc, &x) in s.iter_mut().zip(self.pair(i, j)) {
                *acc += x;
            }
        }
        s * c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub sigma: f64,
    pub k_neighbors: usize,
    /// Per-feature weights applied to squared differences; `None` means all ones.
    pub scaling: Option<Vec<f64>>,
}

impl KernelParams {
    pub fn new(sigma: f64) -> Self {
        Self {
            sigma,
            k_neighbors: 7,
            scaling: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimilarityGraph {
    pub weights: DMatrix<f64>,
    pub degrees: DVector<f64>,
    pub laplacian: DMatrix<f64>,
}

impl SimilarityGraph {
    pub fn n_samples(&self) -> usize {
        self.degrees.len()
    }
}

/// Pairwise distances `δ_s(i, j) = Σ_l s_l (y_il − y_jl)²`; plain squared
/// Euclidean distances without scaling. May be negative for signed `s`.
pub fn scaled_sq_distances(y: &DMatrix<f64>, scaling: Option<&[f64]>) -> Result<DMatrix<f64>> {
    let (n, m) = y.shape();
    if let Some(s) = scaling {
        if s.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "scaling has {} entries for {m} features",
                s.len()
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scaling"));
        }
    }
    if y.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("data matrix"));
    }
    // row-major copy keeps the inner loop contiguous for wide data
    let rows: Vec<Vec<f64>> = (0..n).map(|i| y.row(i).iter().copied().collect()).collect();
    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&rows[i], &rows[j]);
            let d: f64 = match scaling {
                Some(s) => (0..m).map(|l| s[l] * (a[l] - b[l]) * (a[l] - b[l])).sum(),
                None => (0..m).map(|l| (a[l] - b[l]) * (a[l] - b[l])).sum(),
            };
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }
    Ok(dist)
}

/// Dense Gaussian similarities `exp(−δ_s(i, j)/2σ²)` with zero diagonal.
pub fn full_similarity(y: &DMatrix<f64>, params: &KernelParams) -> Result<DMatrix<f64>> {
    validate(params)?;
    let dist = scaled_sq_distances(y, params.scaling.as_deref())?;
    similarity_from_distances(&dist, params.sigma)
}

fn similarity_from_distances(dist: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
    let c = 1.0 / (2.0 * sigma * sigma);
    let n = dist.nrows();
    let mut w = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (-c * dist[(i, j)]).exp() });
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("similarity"));
    }
    w.fill_diagonal(0.0);
    Ok(w)
}

/// Gaussian similarity sparsified to each sample's `k` most similar
/// neighbours, symmetrized as `(W + Wᵀ)/2`, with degrees and Laplacian.
///
/// Ties between equally similar neighbours go to the smaller index. `k` is
/// clamped to `n − 1`.
pub fn build_similarity(y: &DMatrix<f64>, params: &KernelParams) -> Result<SimilarityGraph> {
    validate(params)?;
    let dist = scaled_sq_distances(y, params.scaling.as_deref())?;
    build_from_distances(&dist, params.sigma, params.k_neighbors)
}

/// As [`build_similarity`], from precomputed pairwise distances.
pub fn build_from_distances(dist: &DMatrix<f64>, sigma: f64, k_neighbors: usize) -> Result<SimilarityGraph> {
    let n = dist.nrows();
    if n < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: n,
        });
    }
    validate(&KernelParams {
        sigma,
        k_neighbors,
        scaling: None,
    })?;
    let full = similarity_from_distances(dist, sigma)?;
    let k = k_neighbors.min(n - 1);
    let mut sparse = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| full[(i, b)].total_cmp(&full[(i, a)]).then(a.cmp(&b)));
        for &j in order.iter().take(k) {
            sparse[(i, j)] = full[(i, j)];
        }
    }
    let weights = (&sparse + sparse.transpose()) * 0.5;
    let degrees = DVector::from_fn(n, |i, _| weights.row(i).sum());
    if let Some(index) = degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::IsolatedSample { index });
    }
    let laplacian = DMatrix::from_diagonal(&degrees) - &weights;
    Ok(SimilarityGraph {
        weights,
        degrees,
        laplacian,
    })
}

fn validate(params: &KernelParams) -> Result<()> {
    if !(params.sigma > 0.0) || !params.sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma = {}", params.sigma)));
    }
    if params.k_neighbors == 0 {
        return Err(Error::InvalidParameter("k_neighbors must be positive".into()));
    }
    Ok(())
}
