use nalgebra::DMatrix;

use crate::error::{MkcError, Result};
use crate::kernel::symmetrize;
use crate::scalar::Scalar;

/// Nearest positive semi-definite matrix in Frobenius norm: symmetrise, then
/// clip negative eigenvalues to zero.
pub fn project_psd<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if m.nrows() != m.ncols() {
        return Err(MkcError::Shape(format!(
            "PSD projection needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite_value()) {
        return Err(MkcError::Eigen("non-finite entry in matrix".into()));
    }
    let eig = symmetrize(m).symmetric_eigen();
    if eig.eigenvalues.iter().all(|l| *l >= T::zero()) {
        return Ok(symmetrize(m));
    }
    let clipped = eig.eigenvalues.map(|l| l.max(T::zero()));
    let mut scaled = eig.eigenvectors.clone();
    for (j, l) in clipped.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*l);
    }
    Ok(symmetrize(&(scaled * eig.eigenvectors.transpose())))
}

/// Eigenvalues of a symmetric matrix in descending order.
pub fn symmetric_eigenvalues_desc<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<T>> {
    if m.iter().any(|v| !v.is_finite_value()) {
        return Err(MkcError::Eigen("non-finite entry in matrix".into()));
    }
    let mut eig: Vec<T> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(eig)
}
