//! Thin wrappers around nalgebra eigendecompositions for the small (F x F)
//! electronic matrices used everywhere in the crate.
//!
//! Outputs are always sorted ascending by eigenvalue so downstream code can
//! rely on a fixed state ordering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{NafError, Result};

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending,
/// columns of the returned matrix are the matching orthonormal eigenvectors.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(NafError::numerical("sym_eigen: matrix not square"));
    }
    if !m.iter().all(|x| x.is_finite()) {
        return Err(NafError::numerical("sym_eigen: non-finite entry"));
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    Ok(sorted_ascending(eig.eigenvalues, eig.eigenvectors))
}

/// Eigendecomposition of a complex Hermitian matrix, eigenvalues ascending.
pub fn herm_eigen(m: &DMatrix<Complex64>) -> Result<(DVector<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(NafError::numerical("herm_eigen: matrix not square"));
    }
    if !m.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        return Err(NafError::numerical("herm_eigen: non-finite entry"));
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    Ok(sorted_ascending(eig.eigenvalues, eig.eigenvectors))
}

fn sorted_ascending<T: nalgebra::Scalar>(
    vals: DVector<f64>,
    vecs: DMatrix<T>,
) -> (DVector<f64>, DMatrix<T>) {
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    let sorted_vals = DVector::from_fn(n, |i, _| vals[order[i]]);
    let mut sorted_vecs = vecs.clone();
    for (dst, &src) in order.iter().enumerate() {
        sorted_vecs.set_column(dst, &vecs.column(src));
    }
    (sorted_vals, sorted_vecs)
}

/// Largest entry of |M - M^dagger|; zero for an exactly Hermitian matrix.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// exp(-i * dt * H) for Hermitian H, computed through the eigendecomposition.
/// Unitary to machine precision. Refuses inputs whose Hermiticity defect
/// exceeds 1e-10: that signals a bug upstream, not a rounding artifact.
pub fn unitary_exp_hermitian(h: &DMatrix<Complex64>, dt: f64) -> Result<DMatrix<Complex64>> {
    let defect = hermiticity_defect(h);
    if defect > 1e-10 {
        return Err(NafError::numerical(format!(
            "propagator generator is not Hermitian (defect {defect:.3e})"
        )));
    }
    let (w, q) = herm_eigen(h)?;
    let phases = DVector::from_fn(w.len(), |k, _| Complex64::from_polar(1.0, -dt * w[k]));
    let mut u = q.clone();
    for k in 0..w.len() {
        let mut col = u.column_mut(k);
        col *= phases[k];
    }
    Ok(&u * q.adjoint())
}

/// exp(-i * dt * V) for real symmetric V, with the same symmetry guard as
/// the Hermitian variant.
pub fn unitary_exp_symmetric(v: &DMatrix<f64>, dt: f64) -> Result<DMatrix<Complex64>> {
    let n = v.nrows();
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            defect = defect.max((v[(i, j)] - v[(j, i)]).abs());
        }
    }
    if defect > 1e-10 {
        return Err(NafError::numerical(format!(
            "propagator generator is not symmetric (defect {defect:.3e})"
        )));
    }
    let (w, t) = sym_eigen(v)?;
    let f = v.nrows();
    let mut u = DMatrix::<Complex64>::zeros(f, f);
    for k in 0..f {
        let phase = Complex64::from_polar(1.0, -dt * w[k]);
        for i in 0..f {
            for j in 0..f {
                u[(i, j)] += phase * t[(i, k)] * t[(j, k)];
            }
        }
    }
    Ok(u)
}

/// Promote a real matrix to complex entries.
pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}
