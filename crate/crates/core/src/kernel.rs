//! Kernel matrices, view masks and the kernel functions used to build them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{MkcError, Result};
use crate::scalar::Scalar;

/// Relative asymmetry accepted when wrapping a matrix; larger gaps are an error.
const SYMMETRY_TOL: f64 = 1e-9;

/// Symmetric `n × n` Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<T: Scalar> {
    values: DMatrix<T>,
    psd_tol: T,
}

impl<T: Scalar> KernelMatrix<T> {
    /// Wraps `values`, rejecting non-square, non-finite or visibly asymmetric
    /// input. Rounding-level asymmetry is removed by averaging with the
    /// transpose, so the stored matrix is exactly symmetric.
    pub fn new(values: DMatrix<T>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(MkcError::Shape(format!(
                "kernel matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite_value()) {
            let n = values.nrows().max(1);
            return Err(MkcError::NonFinite(format!(
                "kernel entry ({}, {})",
                pos % n,
                pos / n
            )));
        }
        let scale = values
            .iter()
            .fold(1.0f64, |acc, v| acc.max(v.to_f64_lossy().abs()));
        let n = values.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let gap = (values[(i, j)] - values[(j, i)]).to_f64_lossy().abs();
                if gap > SYMMETRY_TOL * scale {
                    return Err(MkcError::Asymmetric { i, j, gap });
                }
            }
        }
        Ok(Self {
            values: symmetrize(&values),
            psd_tol: T::lit(1e-9),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            values: DMatrix::identity(n, n),
            psd_tol: T::lit(1e-9),
        }
    }

    pub fn with_psd_tol(mut self, tol: T) -> Self {
        self.psd_tol = tol;
        self
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<T> {
        self.values
    }

    pub fn psd_tol(&self) -> T {
        self.psd_tol
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[(i, j)]
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> T {
        self.values
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(T::max_value().unwrap_or_else(|| T::lit(f64::MAX)), |a, b| a.min(b))
    }

    /// PSD up to `psd_tol` relative to the spectral scale.
    pub fn is_psd(&self) -> bool {
        if self.n() == 0 {
            return true;
        }
        let eig = self.values.clone().symmetric_eigenvalues();
        let max = eig.iter().copied().fold(T::zero(), |a, b| a.max(b.abs()));
        let min = eig.iter().copied().fold(T::zero(), |a, b| a.min(b));
        min >= -self.psd_tol * max.max(T::one())
    }
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::lit(0.5);
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j {
            m[(i, i)]
        } else {
            (m[(i, j)] + m[(j, i)]) * half
        }
    })
}

/// Kernel function applied to raw per-view features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Linear,
    /// `exp(-‖x - y‖² / (2 width²))`
    Gaussian { width: f64 },
    /// `|x ∧ y| / |x ∨ y|` on binary vectors.
    Jaccard,
}

impl KernelKind {
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(MkcError::InvalidInput(format!(
                "gaussian width must be positive, got {width}"
            )));
        }
        Ok(Self::Gaussian { width })
    }

    /// Kernel value between two feature rows of equal length.
    pub fn evaluate<T: Scalar>(&self, x: &[T], y: &[T]) -> Result<T> {
        debug_assert_eq!(x.len(), y.len());
        match *self {
            KernelKind::Linear => Ok(x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + *a * *b)),
            KernelKind::Gaussian { width } => {
                let d2 = x
                    .iter()
                    .zip(y)
                    .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b));
                let w = T::lit(width);
                Ok((-d2 / (T::lit(2.0) * w * w)).exp())
            }
            KernelKind::Jaccard => {
                let mut inter = 0usize;
                let mut union = 0usize;
                for (a, b) in x.iter().zip(y) {
                    let a = binary(*a)?;
                    let b = binary(*b)?;
                    inter += usize::from(a && b);
                    union += usize::from(a || b);
                }
                if union == 0 {
                    return Err(MkcError::InvalidInput(
                        "jaccard kernel undefined for two all-zero rows".into(),
                    ));
                }
                Ok(T::from_usize(inter).unwrap() / T::from_usize(union).unwrap())
            }
        }
    }
}

fn binary<T: Scalar>(v: T) -> Result<bool> {
    if v == T::zero() {
        Ok(false)
    } else if v == T::one() {
        Ok(true)
    } else {
        Err(MkcError::InvalidInput(format!(
            "jaccard kernel requires binary features, found {v}"
        )))
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Linear => write!(f, "linear"),
            KernelKind::Gaussian { width } => write!(f, "gaussian:{width}"),
            KernelKind::Jaccard => write!(f, "jaccard"),
        }
    }
}

impl FromStr for KernelKind {
    type Err = MkcError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "linear" => Ok(Self::Linear),
            "jaccard" => Ok(Self::Jaccard),
            _ => match s.strip_prefix("gaussian:") {
                Some(w) => {
                    let width = w
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| MkcError::InvalidInput(format!("gaussian width `{w}`: {e}")))?;
                    Self::gaussian(width)
                }
                None => Err(MkcError::InvalidInput(format!("unknown kernel kind `{s}`"))),
            },
        }
    }
}

/// Gram matrix of the rows of `x` under `kind`.
pub fn compute_kernel<T: Scalar>(kind: KernelKind, x: &DMatrix<T>) -> Result<KernelMatrix<T>> {
    if let Some(pos) = x.iter().position(|v| !v.is_finite_value()) {
        return Err(MkcError::NonFinite(format!("feature entry {pos}")));
    }
    let n = x.nrows();
    let values = match kind {
        KernelKind::Linear => symmetrize(&(x * x.transpose())),
        _ => {
            if kind == KernelKind::Jaccard {
                for i in 0..n {
                    let row: Vec<T> = x.row(i).iter().copied().collect();
                    for v in &row {
                        binary(*v)?;
                    }
                    if row.iter().all(|v| *v == T::zero()) {
                        return Err(MkcError::InvalidInput(format!(
                            "jaccard kernel undefined for all-zero row {i}"
                        )));
                    }
                }
            }
            let rows: Vec<Vec<T>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
            let mut k = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = if i == j && matches!(kind, KernelKind::Gaussian { .. }) {
                        T::one()
                    } else {
                        kind.evaluate(&rows[i], &rows[j])?
                    };
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
            k
        }
    };
    KernelMatrix::new(values)
}

/// Cosine normalisation `k_ij / sqrt(k_ii k_jj)`; the diagonal becomes exactly 1.
pub fn normalize_kernel<T: Scalar>(k: &KernelMatrix<T>) -> Result<KernelMatrix<T>> {
    let n = k.n();
    let diag: Vec<T> = (0..n).map(|i| k.get(i, i)).collect();
    if let Some(i) = diag.iter().position(|d| *d <= T::zero()) {
        return Err(MkcError::InvalidInput(format!(
            "cannot normalise: diagonal entry {i} is {} (must be > 0)",
            diag[i]
        )));
    }
    let scale: Vec<T> = diag.iter().map(|d| d.sqrt()).collect();
    let values = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            T::one()
        } else {
            k.get(i, j) / (scale[i] * scale[j])
        }
    });
    Ok(KernelMatrix {
        values,
        psd_tol: k.psd_tol,
    })
}

/// Sorted set of indices observed in one view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewMask {
    n: usize,
    known: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl ViewMask {
    pub fn new(n: usize, mut known: Vec<usize>) -> Result<Self> {
        known.sort_unstable();
        if known.is_empty() {
            return Err(MkcError::InvalidMask("a view must observe at least one sample".into()));
        }
        if let Some(w) = known.windows(2).find(|w| w[0] == w[1]) {
            return Err(MkcError::InvalidMask(format!("duplicate index {}", w[0])));
        }
        if let Some(&last) = known.last() {
            if last >= n {
                return Err(MkcError::IndexOutOfRange { index: last, n });
            }
        }
        let mut position = vec![None; n];
        for (p, &i) in known.iter().enumerate() {
            position[i] = Some(p);
        }
        Ok(Self { n, known, position })
    }

    pub fn full(n: usize) -> Self {
        Self::new(n, (0..n).collect()).expect("full mask of a non-empty index set")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn known(&self) -> &[usize] {
        &self.known
    }

    pub fn known_count(&self) -> usize {
        self.known.len()
    }

    pub fn missing(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.position[i].is_none()).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.n - self.known.len()
    }

    pub fn is_known(&self, i: usize) -> bool {
        self.position.get(i).map_or(false, Option::is_some)
    }

    /// Position of sample `i` within the known block.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.position.get(i).copied().flatten()
    }

    pub fn is_full(&self) -> bool {
        self.known.len() == self.n
    }
}

/// A view's kernel with only the `I × I` block observed.
///
/// Entries touching a missing sample are never read: they are stored as zero
/// and every accessor goes through the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedKernel<T: Scalar> {
    values: DMatrix<T>,
    mask: ViewMask,
}

impl<T: Scalar> ObservedKernel<T> {
    /// Builds from the known block alone (`|I| × |I|`, ordered like `mask.known()`).
    pub fn from_known_block(block: &DMatrix<T>, mask: ViewMask) -> Result<Self> {
        let p = mask.known_count();
        if block.nrows() != p || block.ncols() != p {
            return Err(MkcError::Shape(format!(
                "known block is {}x{}, mask has {p} known samples",
                block.nrows(),
                block.ncols()
            )));
        }
        let block = KernelMatrix::new(block.clone())?;
        let n = mask.n();
        let mut values = DMatrix::zeros(n, n);
        for (a, &i) in mask.known().iter().enumerate() {
            for (b, &j) in mask.known().iter().enumerate() {
                values[(i, j)] = block.get(a, b);
            }
        }
        Ok(Self { values, mask })
    }

    pub fn n(&self) -> usize {
        self.mask.n()
    }

    pub fn mask(&self) -> &ViewMask {
        &self.mask
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        (self.mask.is_known(i) && self.mask.is_known(j)).then(|| self.values[(i, j)])
    }

    /// Observed block, rows and columns ordered like `mask().known()`.
    pub fn known_block(&self) -> DMatrix<T> {
        let idx = self.mask.known();
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.values[(idx[a], idx[b])])
    }

    /// Full matrix with unknown entries zeroed.
    pub fn zero_filled(&self) -> &DMatrix<T> {
        &self.values
    }
}

/// Hides every row and column of `full` that `mask` does not observe.
pub fn apply_mask<T: Scalar>(full: &KernelMatrix<T>, mask: &ViewMask) -> Result<ObservedKernel<T>> {
    if full.n() != mask.n() {
        return Err(MkcError::Shape(format!(
            "kernel is {}x{}, mask covers {} samples",
            full.n(),
            full.n(),
            mask.n()
        )));
    }
    let n = full.n();
    let values = DMatrix::from_fn(n, n, |i, j| {
        if mask.is_known(i) && mask.is_known(j) {
            full.get(i, j)
        } else {
            T::zero()
        }
    });
    Ok(ObservedKernel {
        values,
        mask: mask.clone(),
    })
}
