//! Loss terms on user-facing types.

use nalgebra::DMatrix;

use super::objective::{hull_combination, mask_rows, rows_of, submatrix};
use super::KernelCombinationWeights;
use crate::error::{MkcError, Result};
use crate::kernel::{symmetrize, KernelMatrix, ViewMask};
use crate::scalar::Scalar;

/// `K̂ = A_Iᵀ K_II A_I` as a full `n × n` kernel.
pub fn reconstruct_kernel<T: Scalar>(a: &DMatrix<T>, known_block: &DMatrix<T>, mask: &ViewMask) -> Result<KernelMatrix<T>> {
    let (n, p) = (mask.n(), mask.known_count());
    if a.shape() != (n, n) || known_block.shape() != (p, p) {
        return Err(MkcError::Shape(format!(
            "weights {:?} and known block {:?} do not fit a mask with {p} of {n} samples known",
            a.shape(),
            known_block.shape()
        )));
    }
    let w = rows_of(a, mask.known());
    KernelMatrix::new(symmetrize(&(w.transpose() * known_block * w)))
}

/// `‖K̂_II − K_II‖²`.
pub fn loss_within<T: Scalar>(khat: &DMatrix<T>, known_block: &DMatrix<T>, mask: &ViewMask) -> Result<T> {
    let p = mask.known_count();
    if khat.shape() != (mask.n(), mask.n()) || known_block.shape() != (p, p) {
        return Err(MkcError::Shape("estimate or known block does not fit the mask".into()));
    }
    Ok((submatrix(khat, mask.known(), mask.known()) - known_block).norm_squared())
}

fn check_views<T: Scalar>(items: &[DMatrix<T>], s: &KernelCombinationWeights<T>) -> Result<()> {
    if items.len() != s.views() {
        return Err(MkcError::Shape(format!("{} matrices for an S over {} views", items.len(), s.views())));
    }
    if items.windows(2).any(|w| w[0].shape() != w[1].shape()) {
        return Err(MkcError::Shape("matrices differ in shape".into()));
    }
    Ok(())
}

/// Per-view `‖K̂_m − Σ_{l≠m} s_ml K̂_l‖²` and their total.
pub fn loss_between_kernels<T: Scalar>(khat: &[DMatrix<T>], s: &KernelCombinationWeights<T>) -> Result<(Vec<T>, T)> {
    check_views(khat, s)?;
    let per_view: Vec<T> = (0..khat.len())
        .map(|m| (&khat[m] - hull_combination(khat, s, m)).norm_squared())
        .collect();
    let total = per_view.iter().fold(T::zero(), |acc, v| acc + *v);
    Ok((per_view, total))
}

/// `Σ_m ‖(A_m − Σ_{l≠m} s_ml A_l)` restricted to rows `I_m`‖².
pub fn loss_between_weights<T: Scalar>(a: &[DMatrix<T>], s: &KernelCombinationWeights<T>, masks: &[ViewMask]) -> Result<T> {
    check_views(a, s)?;
    if masks.len() != a.len() {
        return Err(MkcError::Shape(format!("{} masks for {} views", masks.len(), a.len())));
    }
    Ok((0..a.len()).fold(T::zero(), |acc, m| {
        let mut e = &a[m] - hull_combination(a, s, m);
        mask_rows(&mut e, &masks[m]);
        acc + e.norm_squared()
    }))
}

/// `Σ_{i∈I} ‖A_i‖₂`.
pub fn l21_norm<T: Scalar>(a: &DMatrix<T>, mask: &ViewMask) -> T {
    mask.known().iter().fold(T::zero(), |acc, &i| acc + a.row(i).norm())
}
