//! Smooth objective terms and their gradients.
//!
//! Reconstruction weights are stored as full `n × n` matrices per view with
//! every row outside the view's known set held at zero. Only the known rows
//! `A_I` enter the reconstruction `K̂ = A_Iᵀ K_II A_I`.

use nalgebra::DMatrix;

use crate::dataset::MultiViewDataset;
use crate::kernel::{symmetrize, ViewMask};
use crate::scalar::Scalar;
use crate::solvers::KernelCombinationWeights;

/// Observed data of one view in solver-friendly form.
#[derive(Debug, Clone)]
pub struct ViewData<T: Scalar> {
    pub mask: ViewMask,
    /// Known block `K_II`, ordered like `mask.known()`.
    pub k: DMatrix<T>,
}

impl<T: Scalar> ViewData<T> {
    pub fn known(&self) -> &[usize] {
        self.mask.known()
    }

    pub fn n(&self) -> usize {
        self.mask.n()
    }
}

pub fn views_from<T: Scalar>(ds: &MultiViewDataset<T>) -> Vec<ViewData<T>> {
    ds.kernels()
        .iter()
        .map(|k| ViewData {
            mask: k.mask().clone(),
            k: k.known_block(),
        })
        .collect()
}

pub(crate) fn submatrix<T: Scalar>(a: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| a[(rows[r], cols[c])])
}

pub(crate) fn rows_of<T: Scalar>(a: &DMatrix<T>, rows: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), a.ncols(), |r, c| a[(rows[r], c)])
}

/// Zeroes every row of `m` outside `mask`.
pub(crate) fn mask_rows<T: Scalar>(m: &mut DMatrix<T>, mask: &ViewMask) {
    for i in 0..m.nrows() {
        if !mask.is_known(i) {
            m.row_mut(i).fill(T::zero());
        }
    }
}

/// `K̂ = A_Iᵀ K_II A_I`, exactly symmetric.
pub fn reconstruct<T: Scalar>(view: &ViewData<T>, a: &DMatrix<T>) -> DMatrix<T> {
    let w = rows_of(a, view.known());
    let kw = &view.k * &w;
    symmetrize(&(w.transpose() * kw))
}

/// `‖[A_Iᵀ K A_I]_II − K_II‖²`: only the `I × I` block of `A` matters.
pub fn within_value<T: Scalar>(view: &ViewData<T>, a: &DMatrix<T>) -> T {
    let b = submatrix(a, view.known(), view.known());
    let kb = &view.k * &b;
    (b.transpose() * kb - &view.k).norm_squared()
}

/// Gradient of [`within_value`] with respect to the full `n × n` matrix `A`.
pub fn within_gradient<T: Scalar>(view: &ViewData<T>, a: &DMatrix<T>) -> DMatrix<T> {
    let idx = view.known();
    let b = submatrix(a, idx, idx);
    let kb = &view.k * &b;
    let r = b.transpose() * &kb - &view.k;
    let g = kb * r * T::lit(4.0);
    let mut out = DMatrix::zeros(view.n(), view.n());
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate() {
            out[(i, j)] = g[(p, q)];
        }
    }
    out
}

/// `Σ_{l≠m} s_ml X_l`.
pub fn hull_combination<T: Scalar>(items: &[DMatrix<T>], s: &KernelCombinationWeights<T>, m: usize) -> DMatrix<T> {
    let mut acc = DMatrix::zeros(items[m].nrows(), items[m].ncols());
    for (l, x) in items.iter().enumerate() {
        let w = s.get(m, l);
        if l != m && w != T::zero() {
            acc += x * w;
        }
    }
    acc
}

/// Per-view residuals `E_v = P_v (A_v − Σ_{l≠v} s_vl A_l)` of the weight hull.
pub fn weight_residuals<T: Scalar>(
    views: &[ViewData<T>],
    a: &[DMatrix<T>],
    s: &KernelCombinationWeights<T>,
) -> Vec<DMatrix<T>> {
    (0..a.len())
        .map(|v| {
            let mut e = &a[v] - hull_combination(a, s, v);
            mask_rows(&mut e, &views[v].mask);
            e
        })
        .collect()
}

/// Per-view residuals `E_v = K̂_v − Σ_{l≠v} s_vl K̂_l` of the kernel hull.
pub fn kernel_residuals<T: Scalar>(khat: &[DMatrix<T>], s: &KernelCombinationWeights<T>) -> Vec<DMatrix<T>> {
    (0..khat.len())
        .map(|v| &khat[v] - hull_combination(khat, s, v))
        .collect()
}

/// `Σ_v ‖E_v‖²`.
pub fn residual_total<T: Scalar>(residuals: &[DMatrix<T>]) -> T {
    residuals.iter().fold(T::zero(), |acc, e| acc + e.norm_squared())
}

/// `∂/∂X_m Σ_v ‖E_v‖² = 2 (E_m − Σ_{v≠m} s_vm E_v)` for residuals linear in `X_m`.
pub fn hull_gradient<T: Scalar>(residuals: &[DMatrix<T>], s: &KernelCombinationWeights<T>, m: usize) -> DMatrix<T> {
    let mut g = residuals[m].clone();
    for (v, e) in residuals.iter().enumerate() {
        let w = s.get(v, m);
        if v != m && w != T::zero() {
            g -= e * w;
        }
    }
    g * T::lit(2.0)
}

/// Smooth part of the heterogeneous-embedding objective:
/// `Σ_m within_m + c1 Σ_m ‖P_m(A_m − Σ s_ml A_l)‖²`.
pub fn embd_ht_smooth<T: Scalar>(views: &[ViewData<T>], a: &[DMatrix<T>], s: &KernelCombinationWeights<T>, c1: T) -> T {
    let within = views
        .iter()
        .zip(a)
        .fold(T::zero(), |acc, (v, a)| acc + within_value(v, a));
    within + c1 * residual_total(&weight_residuals(views, a, s))
}

/// Gradient of [`embd_ht_smooth`] with respect to `A_m` (rows outside `I_m` zero).
pub fn embd_ht_gradient<T: Scalar>(
    views: &[ViewData<T>],
    a: &[DMatrix<T>],
    s: &KernelCombinationWeights<T>,
    c1: T,
    m: usize,
) -> DMatrix<T> {
    let residuals = weight_residuals(views, a, s);
    let mut g = within_gradient(&views[m], &a[m]) + hull_gradient(&residuals, s, m) * c1;
    mask_rows(&mut g, &views[m].mask);
    g
}

/// Smooth part of the kernel-approximation objective:
/// `Σ_m within_m + c1 Σ_m ‖K̂_m − Σ s_ml K̂_l‖²` with `K̂ = A_Iᵀ K A_I`.
pub fn app_smooth<T: Scalar>(views: &[ViewData<T>], a: &[DMatrix<T>], s: &KernelCombinationWeights<T>, c1: T) -> T {
    let khat: Vec<_> = views.iter().zip(a).map(|(v, a)| reconstruct(v, a)).collect();
    let within = views
        .iter()
        .zip(a)
        .fold(T::zero(), |acc, (v, a)| acc + within_value(v, a));
    within + c1 * residual_total(&kernel_residuals(&khat, s))
}

/// Gradient of the kernel-hull term `c1 Σ_v ‖E_v‖²` with respect to `A_m`,
/// given the current reconstructions.
pub(crate) fn app_hull_gradient<T: Scalar>(
    view: &ViewData<T>,
    a_m: &DMatrix<T>,
    khat: &[DMatrix<T>],
    s: &KernelCombinationWeights<T>,
    c1: T,
    m: usize,
) -> DMatrix<T> {
    let residuals = kernel_residuals(khat, s);
    let g_k = symmetrize(&hull_gradient(&residuals, s, m));
    let w = rows_of(a_m, view.known());
    let gw = (&view.k * w) * g_k * (T::lit(2.0) * c1);
    let mut out = DMatrix::zeros(view.n(), view.n());
    for (p, &i) in view.known().iter().enumerate() {
        out.row_mut(i).copy_from(&gw.row(p));
    }
    out
}

/// Gradient of [`app_smooth`] with respect to `A_m`.
pub fn app_gradient<T: Scalar>(
    views: &[ViewData<T>],
    a: &[DMatrix<T>],
    s: &KernelCombinationWeights<T>,
    c1: T,
    m: usize,
) -> DMatrix<T> {
    let khat: Vec<_> = views.iter().zip(a).map(|(v, a)| reconstruct(v, a)).collect();
    within_gradient(&views[m], &a[m]) + app_hull_gradient(&views[m], &a[m], &khat, s, c1, m)
}

/// Shared-weight objective: `Σ_v within_v(A)`.
pub fn embd_hm_smooth<T: Scalar>(views: &[ViewData<T>], a: &DMatrix<T>) -> T {
    views.iter().fold(T::zero(), |acc, v| acc + within_value(v, a))
}

pub fn embd_hm_gradient<T: Scalar>(views: &[ViewData<T>], a: &DMatrix<T>) -> DMatrix<T> {
    let mut g = DMatrix::zeros(a.nrows(), a.ncols());
    for v in views {
        g += within_gradient(v, a);
    }
    g
}

/// `‖P_II(X − K)‖²`: squared error on the observed block of a full estimate.
pub fn observed_error<T: Scalar>(view: &ViewData<T>, x: &DMatrix<T>) -> T {
    let idx = view.known();
    (submatrix(x, idx, idx) - &view.k).norm_squared()
}

/// SDP objective `Σ_v ‖P_v(X_v − K_v)‖² + c Σ_v ‖X_v − Σ s_vl X_l‖²`.
pub fn sdp_objective<T: Scalar>(views: &[ViewData<T>], x: &[DMatrix<T>], s: &KernelCombinationWeights<T>, c: T) -> T {
    let fit = views
        .iter()
        .zip(x)
        .fold(T::zero(), |acc, (v, x)| acc + observed_error(v, x));
    fit + c * residual_total(&kernel_residuals(x, s))
}

/// Gradient of [`sdp_objective`] with respect to `X_m`.
pub fn sdp_gradient<T: Scalar>(
    views: &[ViewData<T>],
    x: &[DMatrix<T>],
    s: &KernelCombinationWeights<T>,
    c: T,
    m: usize,
) -> DMatrix<T> {
    let view = &views[m];
    let mut g = hull_gradient(&kernel_residuals(x, s), s, m) * c;
    let two = T::lit(2.0);
    for (p, &i) in view.known().iter().enumerate() {
        for (q, &j) in view.known().iter().enumerate() {
            g[(i, j)] += two * (x[m][(i, j)] - view.k[(p, q)]);
        }
    }
    g
}
