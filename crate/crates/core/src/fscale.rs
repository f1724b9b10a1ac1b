//! Learning per-feature scaling factors from labels.
//!
//! A target Fiedler vector `v` is built from the training labels. Linearizing
//! the Gaussian kernel around the unscaled distances turns "the scaled graph
//! has `v` as an eigenvector" into a rectangular pencil in the unknown
//! `[s; −1]`, solved by [`rect_pencil_eig_with`].

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::numkernel::{pencil_residual, rect_pencil_eig_with, PencilOptions};
use crate::simgraph::scaled_sq_distances;
use crate::{Error, Result};

/// Value assigned to samples outside class 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NegativeValue {
    Fixed(f64),
    /// `−b` with `b = Σ_{class 1} d_i / Σ_{other} d_i`.
    Auto,
}

impl Default for NegativeValue {
    fn default() -> Self {
        NegativeValue::Fixed(-0.2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiedlerEstimate {
    pub v: DVector<f64>,
    pub positive_value: f64,
    pub negative_value: f64,
}

/// Builds `v` with `1` on class-1 samples (the smaller label value) and the
/// negative value elsewhere.
pub fn estimate_fiedler(
    labels: &[u32],
    negative: NegativeValue,
    degrees: Option<&DVector<f64>>,
) -> Result<FiedlerEstimate> {
    let mut distinct: Vec<u32> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    match distinct.len() {
        0 | 1 => return Err(Error::DegenerateSupervision),
        2 => {}
        k => return Err(Error::NonBinaryLabels { distinct: k }),
    }
    let first = distinct[0];
    let negative_value = match negative {
        NegativeValue::Fixed(b) => {
            if !b.is_finite() {
                return Err(Error::InvalidParameter(format!("negative value {b}")));
            }
            b
        }
        NegativeValue::Auto => {
            let d = degrees.ok_or_else(|| {
                Error::InvalidParameter("automatic negative value needs degrees".into())
            })?;
            if d.len() != labels.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} degrees for {} labels",
                    d.len(),
                    labels.len()
                )));
            }
            if let Some(index) = d.iter().position(|&x| !(x > 0.0)) {
                return Err(Error::DegenerateDegree { index });
            }
            let (mut pos, mut neg) = (0.0, 0.0);
            for (&l, &di) in labels.iter().zip(d.iter()) {
                if l == first {
                    pos += di;
                } else {
                    neg += di;
                }
            }
            -(pos / neg)
        }
    };
    let v = DVector::from_iterator(
        labels.len(),
        labels
            .iter()
            .map(|&l| if l == first { 1.0 } else { negative_value }),
    );
    Ok(FiedlerEstimate {
        v,
        positive_value: 1.0,
        negative_value,
    })
}

/// Blocks of the pencil `F = [A α; γᵀ ρ]`, `G = [B β; 0ᵀ 0]`.
#[derive(Debug, Clone)]
pub struct PencilSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub gamma: DVector<f64>,
    pub rho: f64,
    pub sigma: f64,
}

impl PencilSystem {
    pub fn n_samples(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.a.ncols()
    }

    pub fn f(&self) -> DMatrix<f64> {
        let (n, m) = self.a.shape();
        let mut f = DMatrix::zeros(n + 1, m + 1);
        f.view_mut((0, 0), (n, m)).copy_from(&self.a);
        f.view_mut((0, m), (n, 1)).copy_from(&self.alpha);
        f.view_mut((n, 0), (1, m)).copy_from(&self.gamma.transpose());
        f[(n, m)] = self.rho;
        f
    }

    pub fn g(&self) -> DMatrix<f64> {
        let (n, m) = self.b.shape();
        let mut g = DMatrix::zeros(n + 1, m + 1);
        g.view_mut((0, 0), (n, m)).copy_from(&self.b);
        g.view_mut((0, m), (n, 1)).copy_from(&self.beta);
        g
    }

    /// `max_l |Σ_i (A − B)_il|`, which vanishes by construction.
    pub fn column_sum_gap(&self) -> f64 {
        (&self.a - &self.b)
            .row_sum()
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }
}

/// Assembles the pencil for training data `x` (rows are samples) and target `v`.
///
/// Pair differences are accumulated on the fly, so wide data never need the
/// `n×n×m` difference tensor.
pub fn assemble_pencil(x: &DMatrix<f64>, v: &DVector<f64>, sigma: f64) -> Result<PencilSystem> {
    let (n, m) = x.shape();
    if n < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: n });
    }
    if v.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} Fiedler entries for {n} samples",
            v.len()
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma = {sigma}")));
    }
    if x.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("training data"));
    }
    let c = 1.0 / (2.0 * sigma * sigma);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
    // row-major accumulators: av[i] = Σ_j v_j x_ij, bx[i] = Σ_j x_ij
    let mut av = vec![vec![0.0; m]; n];
    let mut bx = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (vi, vj) = (v[i], v[j]);
            for l in 0..m {
                let d = rows[i][l] - rows[j][l];
                let d2 = d * d;
                av[i][l] += vj * d2;
                av[j][l] += vi * d2;
                bx[i][l] += d2;
                bx[j][l] += d2;
            }
        }
    }
    let a = DMatrix::from_fn(n, m, |i, l| c * av[i][l]);
    let b = DMatrix::from_fn(n, m, |i, l| v[i] * (c * bx[i][l]));
    let total: f64 = v.iter().sum();
    let alpha = DVector::from_fn(n, |i, _| (0..n).filter(|&j| j != i).map(|j| v[j]).sum());
    let beta = v * (n as f64 - 1.0);
    let gamma = b.row_sum().transpose();
    let rho = (n as f64 - 1.0) * total;
    let ps = PencilSystem {
        a,
        b,
        alpha,
        beta,
        gamma,
        rho,
        sigma,
    };
    let gap = ps.column_sum_gap();
    if gap > 1e-10 * ps.a.norm() {
        return Err(Error::InternalConsistency(format!(
            "column sums of A − B differ by {gap:e}"
        )));
    }
    Ok(ps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingVector {
    pub s: Vec<f64>,
    pub mu: f64,
    pub residual: f64,
    /// `|γᵀs − ρ|`.
    pub constraint_violation: f64,
    /// The chosen eigenpair was complex and only its real part is used.
    pub took_real_part: bool,
    /// The pencil admitted a solution for every μ.
    pub singular_pencil: bool,
}

impl ScalingVector {
    pub fn ones(m: usize) -> Self {
        Self {
            s: vec![1.0; m],
            mu: 1.0,
            residual: 0.0,
            constraint_violation: 0.0,
            took_real_part: false,
            singular_pencil: false,
        }
    }
}

/// Solves the pencil for `s`, picking the eigenvalue whose real part is
/// closest to one.
///
/// Eigenvectors are normalized to `[s; −1]`; those with a vanishing last
/// entry cannot be. A complex choice keeps `Re s` and `Re μ` only if that
/// real pair still meets `residual_tol`; otherwise the next-closest
/// candidate is tried.
pub fn learn_scaling(ps: &PencilSystem, residual_tol: f64) -> Result<ScalingVector> {
    let f = ps.f();
    let g = ps.g();
    let m = ps.n_features();
    let options = PencilOptions {
        residual_tol,
        target: 1.0,
    };
    let spectrum = rect_pencil_eig_with(&f, &g, &options).map_err(|e| match e {
        Error::NoEigenpair { .. } | Error::DegeneratePencil => Error::NoScaling(Box::new(e)),
        other => other,
    })?;

    let mut candidates: Vec<(f64, f64, usize, DVector<Complex64>)> = Vec::new();
    for (idx, pair) in spectrum.pairs.iter().enumerate() {
        let last = pair.vector[m];
        if last.norm() < 1e-12 {
            continue;
        }
        let w = &pair.vector * (Complex64::from(-1.0) / last);
        candidates.push(((pair.value.re - 1.0).abs(), pair.residual, idx, w));
    }
    if candidates.is_empty() {
        return Err(Error::NonNormalizable);
    }
    candidates.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.1.total_cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });

    let mut best_residual = f64::INFINITY;
    for (_, _, idx, w) in candidates {
        let pair = &spectrum.pairs[idx];
        let complex = pair.value.im != 0.0 || w.iter().any(|z| z.im != 0.0);
        let mu = pair.value.re;
        let real_w = w.map(|z| Complex64::from(z.re));
        let residual = if complex {
            pencil_residual(&f, &g, Complex64::from(mu), &real_w)
        } else {
            pair.residual
        };
        best_residual = best_residual.min(residual);
        if residual > residual_tol || !residual.is_finite() {
            continue;
        }
        let s: Vec<f64> = real_w.iter().take(m).map(|z| z.re).collect();
        if s.iter().any(|x| !x.is_finite()) {
            continue;
        }
        let gs: f64 = ps.gamma.iter().zip(&s).map(|(a, b)| a * b).sum();
        return Ok(ScalingVector {
            s,
            mu,
            residual,
            constraint_violation: (gs - ps.rho).abs(),
            took_real_part: complex,
            singular_pencil: spectrum.singular,
        });
    }
    Err(Error::NoScaling(Box::new(Error::NoEigenpair {
        best_residual,
        tolerance: residual_tol,
    })))
}

/// `Z = Y·|S|^{1/2}` together with the signs of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledData {
    pub z: DMatrix<f64>,
    /// `+1`, `−1` or `0` per feature; distances on `Z` weighted by these
    /// signs reproduce the signed scaled metric.
    pub signs: Vec<f64>,
}

pub fn apply_scaling(y: &DMatrix<f64>, s: &[f64]) -> Result<ScaledData> {
    if y.ncols() != s.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} factors for {} features",
            s.len(),
            y.ncols()
        )));
    }
    let roots: Vec<f64> = s.iter().map(|x| x.abs().sqrt()).collect();
    let z = DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] * roots[j]);
    let signs = s
        .iter()
        .map(|&x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 })
        .collect();
    Ok(ScaledData { z, signs })
}

/// Fraction of sample pairs whose linearized weight argument `sᵀx_ij/2σ²`
/// falls outside `(0, 1)`.
pub fn linearization_violation(x: &DMatrix<f64>, s: &[f64], sigma: f64) -> Result<f64> {
    let n = x.nrows();
    let dist = scaled_sq_distances(x, Some(s))?;
    let c = 1.0 / (2.0 * sigma * sigma);
    let (mut bad, mut total) = (0usize, 0usize);
    for i in 0..n {
        for j in (i + 1)..n {
            let t = dist[(i, j)] * c;
            total += 1;
            if !(t > 0.0 && t < 1.0) {
                bad += 1;
            }
        }
    }
    Ok(if total == 0 { 0.0 } else { bad as f64 / total as f64 })
}

/// Writes `feature,factor` rows.
pub fn write_factor_table<W: Write>(mut out: W, names: &[String], s: &[f64]) -> Result<()> {
    if names.len() != s.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} names for {} factors",
            names.len(),
            s.len()
        )));
    }
    writeln!(out, "feature,factor")?;
    for (name, x) in names.iter().zip(s) {
        writeln!(out, "{name},{x}")?;
    }
    Ok(())
}
