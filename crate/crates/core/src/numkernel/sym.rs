use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_finite, normalize_phase, RealEigenPair};
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const RESIDUAL_BOUND: f64 = 1e-8;

/// Eigen-decomposition of `D^{-1/2} L D^{-1/2}` with eigenvalues ascending.
struct Whitened {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    inv_sqrt_d: DVector<f64>,
}

fn validate(l: &DMatrix<f64>, d: &DVector<f64>) -> Result<()> {
    let n = l.nrows();
    if l.ncols() != n || d.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "L is {}x{}, D has {} diagonal entries",
            l.nrows(),
            l.ncols(),
            d.len()
        )));
    }
    check_finite(l, "L")?;
    if let Some(index) = d.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::DegenerateDegree { index });
    }
    let scale = l.amax().max(1.0);
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asymmetry = asymmetry.max((l[(i, j)] - l[(j, i)]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

fn decompose(s: DMatrix<f64>, inv_sqrt_d: DVector<f64>) -> Result<Whitened> {
    let n = s.nrows();
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::Convergence("symmetric eigendecomposition".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Whitened {
        values,
        vectors,
        inv_sqrt_d,
    })
}

fn whiten(l: &DMatrix<f64>, d: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let inv_sqrt_d = d.map(|x| 1.0 / x.sqrt());
    let n = l.nrows();
    let mut s = DMatrix::from_fn(n, n, |i, j| l[(i, j)] * inv_sqrt_d[i] * inv_sqrt_d[j]);
    // exact symmetry for the symmetric solver
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    (s, inv_sqrt_d)
}

fn gen_residual(l: &DMatrix<f64>, d: &DVector<f64>, lambda: f64, x: &DVector<f64>) -> f64 {
    let r = l * x - d.component_mul(x) * lambda;
    let denom = (l.norm() + lambda.abs() * d.norm()) * x.norm();
    if denom == 0.0 {
        r.norm()
    } else {
        r.norm() / denom
    }
}

fn pair_from(
    w: &Whitened,
    col: usize,
    l: &DMatrix<f64>,
    d: &DVector<f64>,
) -> Result<RealEigenPair> {
    let lambda = w.values[col];
    let mut x = w.vectors.column(col).component_mul(&w.inv_sqrt_d);
    normalize_phase(&mut x);
    let residual = gen_residual(l, d, lambda, &x);
    if residual > RESIDUAL_BOUND {
        return Err(Error::Convergence(format!(
            "eigenpair {col} has residual {residual:e}"
        )));
    }
    Ok(RealEigenPair {
        value: lambda,
        vector: x,
        residual,
    })
}

/// The `k` smallest eigenpairs of `L x = λ D x` with `λ > skip_tol·λ_max`.
///
/// `d` is the diagonal of `D` and must be strictly positive. Returned vectors
/// are D-orthonormal with their leading entry positive. Eigenvalues at or
/// below the threshold are deflated; for a connected graph Laplacian this
/// removes exactly the constant vector.
pub fn sym_gen_eig(
    l: &DMatrix<f64>,
    d: &DVector<f64>,
    k: usize,
    skip_tol: f64,
) -> Result<Vec<RealEigenPair>> {
    validate(l, d)?;
    let (s, inv_sqrt_d) = whiten(l, d);
    let w = decompose(s, inv_sqrt_d)?;
    let lambda_max = w.values.last().copied().unwrap_or(0.0);
    let threshold = skip_tol * lambda_max;
    let kept: Vec<usize> = (0..w.values.len())
        .filter(|&i| w.values[i] > threshold)
        .collect();
    if kept.len() < k {
        return Err(Error::InsufficientSpectrum {
            requested: k,
            available: kept.len(),
        });
    }
    kept.into_iter()
        .take(k)
        .map(|i| pair_from(&w, i, l, d))
        .collect()
}

/// The `k` smallest eigenpairs of `L x = λ D x` restricted to `cᵀ D x = 0`.
///
/// The constraint direction is deflated in the whitened space, so any other
/// zero eigenvalues (extra connected components) stay in the spectrum. When
/// `L c = 0` the results are ordinary eigenpairs of the pencil.
pub fn sym_gen_eig_constrained(
    l: &DMatrix<f64>,
    d: &DVector<f64>,
    k: usize,
    constraint: &DVector<f64>,
) -> Result<Vec<RealEigenPair>> {
    validate(l, d)?;
    let n = l.nrows();
    if constraint.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "constraint has length {}, expected {n}",
            constraint.len()
        )));
    }
    let available = n.saturating_sub(1);
    if k > available {
        return Err(Error::InsufficientSpectrum {
            requested: k,
            available,
        });
    }
    let (s, inv_sqrt_d) = whiten(l, d);
    let t = constraint.component_div(&inv_sqrt_d);
    let t_norm = t.norm();
    if t_norm == 0.0 {
        return Err(Error::InvalidParameter("constraint direction is zero".into()));
    }
    let t = t / t_norm;
    // P S P + shift·t tᵀ with P = I − t tᵀ pushes the constrained direction
    // above the spectrum; expanded as rank-one updates, with u = S t,
    // P S P = S − t uᵀ − u tᵀ + (tᵀu) t tᵀ.
    let u = &s * &t;
    let tu = t.dot(&u);
    let shift = 1.0 + 2.0 * s.norm();
    let mut deflated = s;
    deflated.ger(-1.0, &t, &u, 1.0);
    deflated.ger(-1.0, &u, &t, 1.0);
    deflated.ger(tu + shift, &t, &t, 1.0);
    let w = decompose(deflated, inv_sqrt_d)?;
    (0..k).map(|i| pair_from(&w, i, l, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn path2() -> (DMatrix<f64>, DVector<f64>) {
        (
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]),
            DVector::from_element(2, 1.0),
        )
    }

    #[test]
    fn path_graph_deflates_zero() {
        let (l, d) = path2();
        let pairs = sym_gen_eig(&l, &d, 1, 1e-9).unwrap();
        assert_relative_eq!(pairs[0].value, 2.0, epsilon = 1e-12);
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(pairs[0].vector[0], s, epsilon = 1e-12);
        assert_relative_eq!(pairs[0].vector[1], -s, epsilon = 1e-12);
    }

    #[test]
    fn zero_laplacian_has_no_spectrum() {
        let l = DMatrix::zeros(3, 3);
        let d = DVector::from_element(3, 1.0);
        assert!(matches!(
            sym_gen_eig(&l, &d, 1, 1e-9),
            Err(Error::InsufficientSpectrum { available: 0, .. })
        ));
    }

    #[test]
    fn nonpositive_degree_rejected() {
        let (l, _) = path2();
        let d = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(
            sym_gen_eig(&l, &d, 1, 1e-9),
            Err(Error::DegenerateDegree { index: 1 })
        ));
    }

    #[test]
    fn asymmetric_rejected() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -0.5, 1.0]);
        let d = DVector::from_element(2, 1.0);
        assert!(matches!(
            sym_gen_eig(&l, &d, 1, 1e-9),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn constrained_keeps_second_component() {
        // two disconnected edges: zero eigenvalue has multiplicity two
        let mut w = DMatrix::zeros(4, 4);
        w[(0, 1)] = 1.0;
        w[(1, 0)] = 1.0;
        w[(2, 3)] = 1.0;
        w[(3, 2)] = 1.0;
        let d = DVector::from_fn(4, |i, _| w.row(i).sum());
        let l = DMatrix::from_diagonal(&d) - &w;
        let e = DVector::from_element(4, 1.0);
        let pairs = sym_gen_eig_constrained(&l, &d, 1, &e).unwrap();
        assert!(pairs[0].value.abs() < 1e-12);
        let v = &pairs[0].vector;
        assert!(v[0] > 0.0 && v[1] > 0.0 && v[2] < 0.0 && v[3] < 0.0);
        assert!(e.dot(&d.component_mul(v)).abs() < 1e-12);
        // the all-zeros rule would skip it
        assert_relative_eq!(sym_gen_eig(&l, &d, 1, 1e-9).unwrap()[0].value, 2.0, epsilon = 1e-12);
    }
}
