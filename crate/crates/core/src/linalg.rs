//! Dense symmetric helpers on top of `nalgebra`: sorted eigendecompositions
//! and restrictions to the orthogonal complement of a known null vector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Eigenvalues come back ascending (ties keep solver order) and every
/// eigenvector is signed so that its largest-magnitude entry is positive.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SortedEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let asym = max_asymmetry(m);
    if asym > 1e-12 * m.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), m.ncols());
    for (c, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        fix_sign(&mut v);
        vectors.set_column(c, &v);
    }
    Ok(SortedEigen { values, vectors })
}

/// Flips `v` so that its first largest-magnitude entry is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Orthonormal basis (as columns) of the complement of `z`, via one
/// Householder reflection mapping `z` onto a multiple of `e_1`.
pub fn complement_basis(z: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = z.len();
    let norm = z.norm();
    if norm == 0.0 {
        return Err(Error::Domain("null vector must be nonzero".into()));
    }
    let mut u = z / norm;
    u[0] += if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let uu = u.norm_squared();
    let h = DMatrix::identity(n, n) - (&u * u.transpose()) * (2.0 / uu);
    Ok(h.columns(1, n - 1).clone_owned())
}

/// Largest `lambda` with `M x = lambda A x` for `x` orthogonal to `null`,
/// where `A` is positive definite on that complement and `M null = 0`.
pub fn max_generalized_on_complement(
    m: &DMatrix<f64>,
    a: &DMatrix<f64>,
    null: &DVector<f64>,
) -> Result<f64> {
    let q = complement_basis(null)?;
    let a_r = q.transpose() * a * &q;
    let m_r = q.transpose() * m * &q;
    let inv_sqrt = spd_power(&a_r, -0.5)?;
    let sym = symmetrize(&(&inv_sqrt * m_r * &inv_sqrt));
    let eig = symmetric_eigen(&sym)?;
    Ok(*eig.values.last().unwrap_or(&0.0))
}

/// Eigenvalues of `B A` restricted to the complement of `null` (the null
/// space of `A`), ascending. Errors if `B` annihilates part of that range.
pub fn preconditioned_spectrum(
    b: &DMatrix<f64>,
    a: &DMatrix<f64>,
    null: &DVector<f64>,
) -> Result<Vec<f64>> {
    let q = complement_basis(null)?;
    let a_r = q.transpose() * a * &q;
    let root = spd_power(&a_r, 0.5)?;
    let b_r = q.transpose() * b * &q;
    let sym = symmetrize(&(&root * b_r * &root));
    let values = symmetric_eigen(&sym)?.values;
    let top = values.last().copied().unwrap_or(0.0);
    if values.first().is_some_and(|&lo| lo <= 1e-13 * top) {
        return Err(Error::NullSpaceMismatch);
    }
    Ok(values)
}

/// `lambda_max / lambda_min` of [`preconditioned_spectrum`].
pub fn effective_condition(b: &DMatrix<f64>, a: &DMatrix<f64>, null: &DVector<f64>) -> Result<f64> {
    let values = preconditioned_spectrum(b, a, null)?;
    match (values.first(), values.last()) {
        (Some(lo), Some(hi)) => Ok(hi / lo),
        _ => Ok(1.0),
    }
}

/// `M^p` for a symmetric positive definite `M`.
pub fn spd_power(m: &DMatrix<f64>, p: f64) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(&symmetrize(m))?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    if eig
        .values
        .first()
        .is_some_and(|&lo| lo <= 1e-14 * top.max(f64::MIN_POSITIVE))
    {
        return Err(Error::Singular("matrix is not positive definite".into()));
    }
    let scaled = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|l| l.powf(p)));
    Ok(&eig.vectors * DMatrix::from_diagonal(&scaled) * eig.vectors.transpose())
}

/// Moore-Penrose inverse of a symmetric positive semidefinite matrix with the
/// one-dimensional null space spanned by `null`.
pub fn pseudo_inverse(m: &DMatrix<f64>, null: &DVector<f64>) -> Result<DMatrix<f64>> {
    let q = complement_basis(null)?;
    let inv = spd_power(&(q.transpose() * m * &q), -1.0)?;
    Ok(symmetrize(&(&q * inv * q.transpose())))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}
