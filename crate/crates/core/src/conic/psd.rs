//! Dense symmetric eigen-utilities: PSD cone projection and trailing
//! eigenpairs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = f64::EPSILON;
const EIGEN_MAX_ITER: usize = 10_000;

/// Eigen-decomposition of `(S + Sᵀ)/2` with eigenvalues ascending and
/// eigenvectors in matching columns.
pub fn sym_eigen(s: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !s.is_square() {
        return Err(Error::Shape(format!("expected a square matrix, got {}x{}", s.nrows(), s.ncols())));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numerical("symmetric eigendecomposition did not converge".into()))?;
    let m = s.nrows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = DVector::from_iterator(m, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(m, m);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok((values, vectors))
}

/// Nearest PSD matrix in Frobenius norm: `U max(Λ, 0) Uᵀ`.
pub fn project_psd(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = sym_eigen(s)?;
    Ok(clamp_reconstruct(&values, &vectors))
}

/// `Σ_{λ_k > 0} λ_k u_k u_kᵀ`.
pub(crate) fn clamp_reconstruct(values: &DVector<f64>, vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let m = values.len();
    let first = values.iter().position(|v| *v > 0.0).unwrap_or(m);
    let k = m - first;
    if k == 0 {
        return DMatrix::zeros(m, m);
    }
    let u = vectors.columns(first, k);
    let mut scaled = u.into_owned();
    for (c, lam) in values.iter().skip(first).enumerate() {
        scaled.column_mut(c).scale_mut(*lam);
    }
    let mut out = &scaled * u.transpose();
    // exact symmetry
    for i in 0..m {
        for j in i + 1..m {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// The `count` smallest eigenvalues (ascending) and an orthonormal basis of
/// their eigenvectors as columns.
pub fn smallest_eigs(z: &DMatrix<f64>, count: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = z.nrows();
    if count == 0 || count > m {
        return Err(Error::Domain(format!("eigenpair count must lie in 1..={m}, got {count}")));
    }
    let (values, vectors) = sym_eigen(z)?;
    Ok((
        values.iter().take(count).copied().collect(),
        vectors.columns(0, count).into_owned(),
    ))
}
