//! Spectral embedding from the generalized Laplacian eigenproblem.

use nalgebra::{DMatrix, DVector};

use crate::numkernel::sym_gen_eig_constrained;
use crate::simgraph::SimilarityGraph;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Embedding {
    /// `N×ℓ`; row `i` is the reduced representation of sample `i`.
    pub u: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub ell: usize,
}

/// The `ell` smallest eigenvectors of `L u = λ D u` subject to `eᵀ D u = 0`.
///
/// Only the constant direction is removed. On a graph with several connected
/// components the remaining zero eigenvalues belong to component indicators,
/// which are exactly the vectors that separate the components, so they are
/// kept. Each column has a nonnegative first entry.
pub fn embed(g: &SimilarityGraph, ell: usize) -> Result<Embedding> {
    if ell == 0 {
        return Err(Error::InvalidParameter("ell must be at least 1".into()));
    }
    let n = g.n_samples();
    let e = DVector::from_element(n, 1.0);
    let pairs = sym_gen_eig_constrained(&g.laplacian, &g.degrees, ell, &e)?;
    let mut u = DMatrix::zeros(n, ell);
    let mut eigenvalues = Vec::with_capacity(ell);
    for (c, p) in pairs.iter().enumerate() {
        u.set_column(c, &p.vector);
        // clamp round-off below zero; the operator is positive semidefinite
        eigenvalues.push(p.value.max(0.0));
    }
    Ok(Embedding { u, eigenvalues, ell })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcutValue {
    pub value: f64,
    /// `eᵀ D v`; zero for admissible relaxed indicators.
    pub constraint_residual: f64,
}

/// `vᵀ(D − W)v / vᵀDv` on the given graph.
pub fn ncut_objective(g: &SimilarityGraph, v: &DVector<f64>) -> Result<NcutValue> {
    if v.len() != g.n_samples() {
        return Err(Error::ShapeMismatch(format!(
            "vector has length {}, graph has {} samples",
            v.len(),
            g.n_samples()
        )));
    }
    let dv = g.degrees.component_mul(v);
    let denom = v.dot(&dv);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateVector);
    }
    let numer = v.dot(&(&g.laplacian * v));
    Ok(NcutValue {
        value: numer / denom,
        constraint_residual: dv.sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn graph_from(w: DMatrix<f64>) -> SimilarityGraph {
        let degrees = DVector::from_fn(w.nrows(), |i, _| w.row(i).sum());
        let laplacian = DMatrix::from_diagonal(&degrees) - &w;
        SimilarityGraph {
            weights: w,
            degrees,
            laplacian,
        }
    }

    fn two_cliques() -> SimilarityGraph {
        graph_from(DMatrix::from_fn(6, 6, |i, j| {
            if i != j && i / 3 == j / 3 {
                1.0
            } else {
                0.0
            }
        }))
    }

    fn complete(n: usize) -> SimilarityGraph {
        graph_from(DMatrix::from_fn(n, n, |i, j| if i != j { 1.0 } else { 0.0 }))
    }

    #[test]
    fn two_cliques_split_by_sign() {
        let g = two_cliques();
        let emb = embed(&g, 1).unwrap();
        assert!(emb.eigenvalues[0].abs() < 1e-12);
        let u = emb.u.column(0);
        assert!(u[0] >= 0.0);
        for i in 0..3 {
            assert!(u[i] > 0.0 && u[i + 3] < 0.0);
        }
    }

    #[test]
    fn complete_graph_eigenvalue() {
        for n in [3, 5, 8] {
            let g = complete(n);
            let emb = embed(&g, 1).unwrap();
            // L = nI − J on the complement of e, D = (n−1)I
            assert_relative_eq!(emb.eigenvalues[0], n as f64 / (n - 1) as f64, epsilon = 1e-12);
            let c = ncut_objective(&g, &emb.u.column(0).into_owned()).unwrap();
            assert!(c.constraint_residual.abs() < 1e-12);
        }
    }

    #[test]
    fn ell_equal_to_n_is_insufficient() {
        let g = complete(4);
        assert!(matches!(
            embed(&g, 4),
            Err(Error::InsufficientSpectrum { .. })
        ));
    }

    #[test]
    fn ncut_examples() {
        let g = two_cliques();
        let e = DVector::from_element(6, 1.0);
        let c = ncut_objective(&g, &e).unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.constraint_residual, g.degrees.sum());
        let ind = DVector::from_fn(6, |i, _| if i < 3 { 1.0 } else { -1.0 });
        assert_eq!(ncut_objective(&g, &ind).unwrap().value, 0.0);
        assert!(matches!(
            ncut_objective(&g, &DVector::zeros(6)),
            Err(Error::DegenerateVector)
        ));
    }

    #[test]
    fn rayleigh_quotient_matches_eigenvalues() {
        let w = DMatrix::from_fn(7, 7, |i, j| {
            if i == j {
                0.0
            } else {
                1.0 / (1.0 + (i as f64 - j as f64).powi(2))
            }
        });
        let g = graph_from(w);
        let emb = embed(&g, 3).unwrap();
        for c in 0..3 {
            let v = emb.u.column(c).into_owned();
            let r = ncut_objective(&g, &v).unwrap();
            assert_relative_eq!(r.value, emb.eigenvalues[c], epsilon = 1e-8);
            assert_relative_eq!(
                ncut_objective(&g, &(&v * -3.5)).unwrap().value,
                r.value,
                epsilon = 1e-12
            );
        }
        assert!(emb.eigenvalues.windows(2).all(|p| p[0] <= p[1]));
    }
}
