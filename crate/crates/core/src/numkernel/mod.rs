//! Dense eigensolvers the rest of the crate builds on.
//!
//! Two problems are covered: the symmetric-definite generalized problem
//! `L x = λ D x` with a positive diagonal `D` (graph Laplacians), and the
//! rectangular pencil `(F − μ G) w = 0` whose eigenvector carries the
//! feature scaling factors.

mod pencil;
mod sym;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

pub use pencil::{
    pencil_residual, rect_pencil_eig, rect_pencil_eig_with, PencilOptions, PencilSpectrum,
};
pub use sym::{sym_gen_eig, sym_gen_eig_constrained};

/// Row/column storage used throughout the crate.
pub type DenseMatrix = DMatrix<f64>;

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;
pub const DEFAULT_SKIP_TOL: f64 = 1e-9;

/// An eigenvalue, its eigenvector and the normwise backward error of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T: ComplexField> {
    pub value: T,
    pub vector: DVector<T>,
    pub residual: f64,
}

pub type RealEigenPair = EigenPair<f64>;
pub type ComplexEigenPair = EigenPair<Complex64>;

/// Index of the first entry whose modulus is not negligible against the largest one.
fn leading_index<T: ComplexField<RealField = f64>>(v: &DVector<T>) -> Option<usize> {
    let max = v.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    v.iter().position(|x| x.clone().modulus() > 1e-10 * max)
}

/// Rotates `v` so that its leading entry is real and positive.
fn normalize_phase<T: ComplexField<RealField = f64>>(v: &mut DVector<T>) {
    if let Some(i) = leading_index(v) {
        let lead = v[i].clone();
        let modulus = lead.clone().modulus();
        let phase = lead.conjugate().unscale(modulus);
        for x in v.iter_mut() {
            *x = x.clone() * phase.clone();
        }
        // keep the pivot exactly real
        v[i] = T::from_real(v[i].clone().modulus());
    }
}

fn check_finite(m: &DMatrix<f64>, what: &'static str) -> crate::Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::NonFinite(what))
    }
}
