use std::fmt;

use crate::error::{MkcError, Result};
use crate::kernel::{KernelMatrix, ViewMask};
use crate::numerics::symmetric_eigenvalues_desc;
use crate::scalar::Scalar;

/// Average relative error of a view, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AreValue {
    Percent(f64),
    /// The view has nothing to evaluate.
    NoMissingRows,
}

impl AreValue {
    pub fn percent(self) -> Option<f64> {
        match self {
            AreValue::Percent(p) => Some(p),
            AreValue::NoMissingRows => None,
        }
    }
}

impl fmt::Display for AreValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AreValue::Percent(p) => write!(f, "{p:.4}"),
            AreValue::NoMissingRows => f.write_str("no missing rows"),
        }
    }
}

/// `100 / |rows| · Σ_t ‖k̂_t − k_t‖ / ‖k_t‖` over the given rows.
pub fn are_rows<T: Scalar>(pred: &KernelMatrix<T>, truth: &KernelMatrix<T>, rows: &[usize]) -> Result<AreValue> {
    let n = truth.n();
    if pred.n() != n {
        return Err(MkcError::Shape(format!("prediction is {}x{0}, truth is {n}x{n}", pred.n())));
    }
    if rows.is_empty() {
        return Ok(AreValue::NoMissingRows);
    }
    let mut total = 0.0;
    for &t in rows {
        if t >= n {
            return Err(MkcError::IndexOutOfRange { index: t, n });
        }
        let norm = truth.values().row(t).norm().to_f64_lossy();
        if norm == 0.0 {
            return Err(MkcError::ZeroNormRow { row: t });
        }
        let err = (pred.values().row(t) - truth.values().row(t)).norm().to_f64_lossy();
        total += err / norm;
    }
    Ok(AreValue::Percent(100.0 * total / rows.len() as f64))
}

/// ARE over the rows missing from `mask`.
pub fn are<T: Scalar>(pred: &KernelMatrix<T>, truth: &KernelMatrix<T>, mask: &ViewMask) -> Result<AreValue> {
    if mask.n() != truth.n() {
        return Err(MkcError::Shape(format!("mask covers {} samples, truth {}", mask.n(), truth.n())));
    }
    are_rows(pred, truth, &mask.missing())
}

/// Eigenvalues in descending order.
pub fn eigenspectrum<T: Scalar>(k: &KernelMatrix<T>) -> Result<Vec<T>> {
    symmetric_eigenvalues_desc(k.values())
}

/// Mean and sample standard deviation; zero spread for fewer than two values.
pub fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, sd))
}
