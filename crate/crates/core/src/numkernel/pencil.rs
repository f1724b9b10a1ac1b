use nalgebra::{ComplexField, DMatrix, DVector, Dyn, Schur, SVD};
use num_complex::Complex64;

use super::{check_finite, normalize_phase, ComplexEigenPair, DEFAULT_RESIDUAL_TOL};
use crate::{Error, Result};

/// Singular values below this fraction of the largest count as zero when
/// compressing the pencil's column space.
const RANK_TOL: f64 = 1e-12;
/// Relative smallest singular value under which `M − τN` is treated as singular.
const SINGULAR_TOL: f64 = 1e-10;
/// Relative singular value under which a direction belongs to the null space.
const NULL_TOL: f64 = 1e-9;
/// Shift multipliers tried, in order, when inverting `M − τN`.
const SHIFTS: [f64; 4] = [0.381_966_011_250_105_1, -0.723_606_797_749_979, 1.618_033_988_749_895, -2.414_213_562_373_095];

#[derive(Debug, Clone, Copy)]
pub struct PencilOptions {
    /// Largest accepted normwise backward error of a returned pair.
    pub residual_tol: f64,
    /// Eigenvalue returned when the pencil is singular and every μ qualifies.
    pub target: f64,
}

impl Default for PencilOptions {
    fn default() -> Self {
        Self {
            residual_tol: DEFAULT_RESIDUAL_TOL,
            target: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PencilSpectrum {
    /// Certified pairs ordered by (Re μ, Im μ). Vectors have unit norm.
    pub pairs: Vec<ComplexEigenPair>,
    /// True when `F − μG` is rank deficient for every μ.
    pub singular: bool,
}

/// `‖(F − μG) w‖ / ((‖F‖_F + |μ|·‖G‖_F)·‖w‖)`.
pub fn pencil_residual(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    mu: Complex64,
    w: &DVector<Complex64>,
) -> f64 {
    let fw = f.map(Complex64::from) * w;
    let gw = g.map(Complex64::from) * w;
    let r = fw - gw * mu;
    let denom = (f.norm() + mu.norm() * g.norm()) * w.norm();
    if denom == 0.0 {
        r.norm()
    } else {
        r.norm() / denom
    }
}

/// Eigenpairs of the rectangular pencil with the default target μ = 1.
pub fn rect_pencil_eig(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    residual_tol: f64,
) -> Result<PencilSpectrum> {
    rect_pencil_eig_with(
        f,
        g,
        &PencilOptions {
            residual_tol,
            ..PencilOptions::default()
        },
    )
}

/// Eigenpairs `(μ, w)` with `(F − μG) w ≈ 0` for `p×q` matrices `F`, `G`.
///
/// Columns are equilibrated, the pencil is compressed onto its joint row
/// space (`q → r`), and when more than `r` equations remain they are projected
/// onto the dominant left singular subspace of `[F G]`, which is the
/// minimal Frobenius-norm perturbation making the pencil square. Eigenvalues
/// of the square pencil come from a shift-and-invert Schur decomposition;
/// each eigenvector is the smallest right singular vector of `F − μG`
/// restricted to the compressed columns. Only pairs whose backward error on the original
/// pencil is within `residual_tol` are returned.
///
/// A pencil that is singular (rank deficient at every μ) yields a pair at
/// `options.target`, choosing within the null space the vector with the
/// largest last component. When the singularity comes only from columns
/// shared by the null spaces of `F` and `G`, that pair is returned alongside
/// the regular eigenpairs, and only if its last component is nonzero.
pub fn rect_pencil_eig_with(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    options: &PencilOptions,
) -> Result<PencilSpectrum> {
    if f.shape() != g.shape() {
        return Err(Error::ShapeMismatch(format!(
            "F is {:?}, G is {:?}",
            f.shape(),
            g.shape()
        )));
    }
    let (p, q) = f.shape();
    if p == 0 || q == 0 {
        return Err(Error::ShapeMismatch("empty pencil".into()));
    }
    if !(options.residual_tol > 0.0) || !options.target.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "residual_tol {} / target {}",
            options.residual_tol, options.target
        )));
    }
    check_finite(f, "F")?;
    check_finite(g, "G")?;
    if g.norm() == 0.0 {
        return Err(Error::DegeneratePencil);
    }

    let scale: Vec<f64> = (0..q)
        .map(|j| {
            let c = (f.column(j).norm_squared() + g.column(j).norm_squared()).sqrt();
            if c > 0.0 {
                c
            } else {
                1.0
            }
        })
        .collect();
    let fs = DMatrix::from_fn(p, q, |i, j| f[(i, j)] / scale[j]);
    let gs = DMatrix::from_fn(p, q, |i, j| g[(i, j)] / scale[j]);

    let basis = row_space_basis(&fs, &gs, p)?;
    let f1 = &fs * &basis;
    let g1 = &gs * &basis;
    let r = basis.ncols();
    // more unknowns than equations: a null vector exists for every μ
    let eigenvalues = if r > p {
        None
    } else {
        let (m, n) = if p > r {
            square_projection(&f1, &g1, r)?
        } else {
            (f1.clone(), g1.clone())
        };
        square_eigenvalues(&m, &n)?
    };

    let lift = |y: &DVector<Complex64>| -> DVector<Complex64> {
        let mut w = basis.map(Complex64::from) * y;
        for (j, x) in w.iter_mut().enumerate() {
            *x /= scale[j];
        }
        let norm = w.norm();
        if norm > 0.0 {
            w /= Complex64::from(norm);
        }
        normalize_phase(&mut w);
        w
    };

    let t = options.target;
    let mut singular = false;
    let mut candidates = Vec::new();
    match eigenvalues {
        Some(mus) => {
            for mu in mus {
                let a = f1.map(Complex64::from) - g1.map(Complex64::from) * mu;
                let y = smallest_right_singular(a)
                    .ok_or_else(|| Error::Convergence("pencil eigenvector SVD".into()))?;
                candidates.push((mu, lift(&y)));
            }
            if basis.ncols() < q {
                // directions shared by null(F) and null(G) solve the pencil at
                // every μ; offer the target pair when it reaches the last entry
                let mut last = DVector::zeros(q);
                last[q - 1] = 1.0;
                let (w, aligned) = null_vector_toward(&(f - g * t), &last)?;
                if aligned {
                    singular = true;
                    let mut w = w.map(Complex64::from);
                    normalize_phase(&mut w);
                    candidates.push((Complex64::from(t), w));
                }
            }
        }
        None => {
            singular = true;
            // the minimum-norm s among all [s; −1] in the null space at the target
            let mut last = DVector::zeros(q);
            last[q - 1] = 1.0;
            let (w, _) = null_vector_toward(&(f - g * t), &last)?;
            let mut w = w.map(Complex64::from);
            normalize_phase(&mut w);
            candidates.push((Complex64::from(t), w));
        }
    }

    let mut best_residual = f64::INFINITY;
    let mut pairs = Vec::new();
    for (mu, w) in candidates {
        let residual = pencil_residual(f, g, mu, &w);
        best_residual = best_residual.min(residual);
        if residual <= options.residual_tol {
            pairs.push(ComplexEigenPair {
                value: mu,
                vector: w,
                residual,
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoEigenpair {
            best_residual,
            tolerance: options.residual_tol,
        });
    }
    pairs.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    Ok(PencilSpectrum { pairs, singular })
}

/// Thin SVD through faer. nalgebra's implicit-shift SVD returns factors that
/// do not reconstruct the input on some rank-deficient matrices.
fn thin_svd<T>(a: DMatrix<T>, want_u: bool, want_v: bool) -> Option<SVD<T, Dyn, Dyn>>
where
    T: ComplexField<RealField = f64> + faer::traits::ComplexField,
{
    let (p, q) = a.shape();
    let k = p.min(q);
    let m = faer::Mat::<T>::from_fn(p, q, |i, j| a[(i, j)].clone());
    let svd = m.thin_svd().ok()?;
    let s = svd.S().column_vector();
    let singular_values = DVector::from_fn(k, |i, _| ComplexField::real(s[i].clone()));
    let u = svd.U();
    let v = svd.V();
    Some(SVD {
        u: want_u.then(|| DMatrix::from_fn(p, k, |i, j| u[(i, j)].clone())),
        v_t: want_v.then(|| DMatrix::from_fn(k, q, |i, j| ComplexField::conjugate(v[(j, i)].clone()))),
        singular_values,
    })
}

/// Orthonormal basis (q×r) of the joint row space of `F` and `G`.
fn row_space_basis(fs: &DMatrix<f64>, gs: &DMatrix<f64>, p: usize) -> Result<DMatrix<f64>> {
    let q = fs.ncols();
    let mut stacked = DMatrix::zeros(2 * p, q);
    stacked.rows_mut(0, p).copy_from(fs);
    stacked.rows_mut(p, p).copy_from(gs);
    let svd = thin_svd(stacked, false, true)
        .ok_or_else(|| Error::Convergence("column compression SVD".into()))?;
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax)
        .count();
    if rank == 0 {
        return Err(Error::DegeneratePencil);
    }
    Ok(v_t.rows(0, rank).transpose())
}

/// Projects the rows of a tall `p×r` pencil onto the top-`r` left singular
/// vectors of `[F G]`.
fn square_projection(
    f1: &DMatrix<f64>,
    g1: &DMatrix<f64>,
    r: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let p = f1.nrows();
    let mut joined = DMatrix::zeros(p, 2 * r);
    joined.columns_mut(0, r).copy_from(f1);
    joined.columns_mut(r, r).copy_from(g1);
    let svd = thin_svd(joined, true, false)
        .ok_or_else(|| Error::Convergence("row projection SVD".into()))?;
    let u = svd.u.expect("requested U");
    let ur = u.columns(0, r);
    Ok((ur.transpose() * f1, ur.transpose() * g1))
}

/// Finite eigenvalues of the square pencil `M − μN`, or `None` when it is singular.
fn square_eigenvalues(m: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<Option<Vec<Complex64>>> {
    let r = m.nrows();
    let (nm, nn) = (m.norm(), n.norm());
    if nn == 0.0 {
        // every eigenvalue is infinite unless M is singular too
        return Ok(if relative_smin(m, nm)? <= SINGULAR_TOL {
            None
        } else {
            Some(Vec::new())
        });
    }
    let base = if nm > 0.0 { nm / nn } else { 1.0 };
    for c in SHIFTS {
        let tau = c * base;
        let a = m - n * tau;
        if relative_smin(&a, nm + tau.abs() * nn)? <= SINGULAR_TOL {
            continue;
        }
        let c = a
            .lu()
            .solve(n)
            .ok_or_else(|| Error::Convergence("shifted pencil solve".into()))?;
        let thetas: Vec<Complex64> = if r == 1 {
            vec![Complex64::from(c[(0, 0)])]
        } else {
            let schur = Schur::try_new(c.clone(), f64::EPSILON, 10_000)
                .ok_or_else(|| Error::Convergence("Schur decomposition".into()))?;
            schur.complex_eigenvalues().iter().copied().collect()
        };
        let cut = 1e-12 * c.norm();
        let mus = thetas
            .into_iter()
            .filter(|th| th.norm() > cut)
            .map(|th| Complex64::from(tau) + th.inv())
            .collect();
        return Ok(Some(mus));
    }
    Ok(None)
}

fn relative_smin(a: &DMatrix<f64>, scale: f64) -> Result<f64> {
    let sv = thin_svd(a.clone(), false, false)
        .ok_or_else(|| Error::Convergence("singular value check".into()))?
        .singular_values;
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if scale > 0.0 { smin / scale } else { 0.0 })
}

fn smallest_right_singular(a: DMatrix<Complex64>) -> Option<DVector<Complex64>> {
    let c = a.ncols();
    let svd = thin_svd(a, false, true)?;
    let v_t = svd.v_t?;
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)?;
    // rows of Vᴴ are conjugated right singular vectors
    let v = v_t.row(k).adjoint();
    debug_assert_eq!(v.len(), c);
    Some(v)
}

/// A unit vector in the (numerical) null space of `a` maximizing `|lᵀy|`,
/// and whether that maximum is nonzero.
fn null_vector_toward(a: &DMatrix<f64>, l: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let r = a.ncols();
    let svd = thin_svd(a.clone(), false, true)
        .ok_or_else(|| Error::Convergence("null space SVD".into()))?;
    let v_t = svd.v_t.expect("requested V");
    let sv = &svd.singular_values;
    let smax = sv.max().max(f64::MIN_POSITIVE);
    // project l off the numerical row space
    let mut y = l.clone();
    for i in (0..sv.len()).filter(|&i| sv[i] > NULL_TOL * smax) {
        let row = v_t.row(i);
        let coef = row.dot(&l.transpose());
        y -= row.transpose() * coef;
    }
    let norm = y.norm();
    if norm > 1e-8 * l.norm() {
        return Ok((y / norm, true));
    }
    let fallback = if let Some(k) = (0..sv.len()).find(|&i| sv[i] <= NULL_TOL * smax) {
        v_t.row(k).transpose()
    } else if sv.len() < r {
        // a wide SVD omits directions beyond its row count; they are null too
        complete_basis(&v_t).swap_remove(0)
    } else {
        let k = (0..sv.len()).min_by(|&x, &y| sv[x].total_cmp(&sv[y])).unwrap_or(0);
        v_t.row(k).transpose()
    };
    Ok((fallback, false))
}

/// Orthonormal complement of the row space of `v_t` (rows assumed orthonormal).
fn complete_basis(v_t: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let r = v_t.ncols();
    let projector = DMatrix::identity(r, r) - v_t.transpose() * v_t;
    let eig = projector.symmetric_eigen();
    (0..r)
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect()
}
