//! Moves along the null space of an observed kernel block.
//!
//! Adding `N z` to a column of `A_II`, with `K N = 0`, leaves `A_IIᵀ K A_II`
//! unchanged. On that affine set what remains of the objective is a
//! separable quadratic plus the ℓ2,1 norm, which is decreased here by
//! reweighted least squares: `‖x‖ ≤ ‖x‖²/(2r) + r/2` for the current row
//! norm `r`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::scalar::Scalar;

/// Orthonormal basis of the numerical null space of `K_II`.
#[derive(Debug, Clone)]
pub(crate) struct NullBasis<T: Scalar> {
    basis: DMatrix<T>,
}

impl<T: Scalar> NullBasis<T> {
    /// Eigenvectors with eigenvalue at most `rel_tol · λ_max`; `None` when there are none.
    pub fn new(k: &DMatrix<T>, rel_tol: T) -> Option<Self> {
        if k.nrows() == 0 {
            return None;
        }
        let eig = SymmetricEigen::new(k.clone());
        let top = eig.eigenvalues.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        let cols: Vec<usize> = (0..k.nrows())
            .filter(|&j| eig.eigenvalues[j] <= rel_tol * top)
            .collect();
        if cols.is_empty() {
            return None;
        }
        let basis = DMatrix::from_fn(k.nrows(), cols.len(), |i, c| eig.eigenvectors[(i, cols[c])]);
        Some(Self { basis })
    }

    #[cfg(test)]
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Basis of the joint null space of several kernel blocks acting on
    /// subsets of `rows`: `{δ : K_v δ[I_v] = 0 for every (I_v, K_v)}`.
    /// `rel_tol` applies to the squared, per-block normalised kernels.
    pub fn joint(rows: &[usize], blocks: &[(&[usize], &DMatrix<T>)], rel_tol: T) -> Option<Self> {
        let p = rows.len();
        let mut pos = vec![usize::MAX; rows.iter().max().map_or(0, |m| m + 1)];
        for (r, &i) in rows.iter().enumerate() {
            pos[i] = r;
        }
        // Σ_v E_vᵀ K_v² E_v has the joint null space of the stacked constraints.
        let mut gram = DMatrix::zeros(p, p);
        for (idx, k) in blocks {
            let k2 = *k * *k;
            let top = k2.amax().max(T::lit(f64::MIN_POSITIVE));
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    gram[(pos[i], pos[j])] += k2[(a, b)] / top;
                }
            }
        }
        Self::new(&gram, rel_tol)
    }
}

/// Columns that move together along one null basis.
pub(crate) struct ColumnGroup<'a, T: Scalar> {
    pub cols: Vec<usize>,
    pub basis: &'a NullBasis<T>,
}

/// Row-separable quadratic `Σ_i q_i‖x_i‖² − 2⟨b_i, x_i⟩ + c2 w_i‖x_i‖` over `rows`.
pub(crate) struct RowProblem<'a, T: Scalar> {
    pub rows: &'a [usize],
    pub q: &'a [T],
    /// Full `n × n`; only `rows` are read. `None` means zero.
    pub b: Option<&'a DMatrix<T>>,
    /// ℓ2,1 multiplier of each row, indexed like `q`.
    pub weights: &'a [T],
    pub c2: T,
}

/// Reweighted least-squares sweeps on `problem.rows` of `x`.
///
/// Each group's columns move along its null basis (indexed by position in
/// `rows`); columns in `free` move without constraint and every other
/// column is held.
pub(crate) fn reweighted_sweeps<T: Scalar>(
    x: &DMatrix<T>,
    problem: &RowProblem<'_, T>,
    groups: &[ColumnGroup<'_, T>],
    free: &[usize],
    sweeps: usize,
) -> DMatrix<T> {
    let rows = problem.rows;
    let p = rows.len();
    let half = T::lit(0.5);
    let mut out = x.clone();
    for _ in 0..sweeps {
        let norms: Vec<T> = rows.iter().map(|&i| out.row(i).norm()).collect();
        let biggest = norms.iter().fold(T::zero(), |acc, v| acc.max(*v));
        if biggest == T::zero() {
            break;
        }
        let floor = biggest * T::lit(1e-8);
        let omega: Vec<T> = norms
            .iter()
            .enumerate()
            .map(|(r, v)| problem.q[rows[r]] + problem.c2 * problem.weights[rows[r]] * half / v.max(floor))
            .collect();
        let target = |r: usize, j: usize| match problem.b {
            Some(b) => b[(rows[r], j)] / omega[r],
            None => T::zero(),
        };
        for &j in free {
            for r in 0..p {
                out[(rows[r], j)] = target(r, j);
            }
        }
        // z = (NᵀΩN)⁻¹ NᵀΩ (t − x) per column.
        for group in groups {
            let nb = &group.basis.basis;
            let weighted = DMatrix::from_fn(p, nb.ncols(), |r, c| nb[(r, c)] * omega[r]);
            let gram = nb.transpose() * &weighted;
            let Some(chol) = gram.cholesky() else { continue };
            let cols = &group.cols;
            let gap = DMatrix::from_fn(p, cols.len(), |r, c| target(r, cols[c]) - out[(rows[r], cols[c])]);
            let step = nb * chol.solve(&(weighted.transpose() * gap));
            for (c, &j) in cols.iter().enumerate() {
                for r in 0..p {
                    out[(rows[r], j)] += step[(r, c)];
                }
            }
        }
    }
    out
}
