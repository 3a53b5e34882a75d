//! Multi-view kernel completion solvers.
//!
//! Four variants share one block-coordinate skeleton: per outer iteration,
//! update each view's variables with a (proximal or projected) gradient step
//! chosen by backtracking, then refit every row of the view-combination
//! matrix `S` on the simplex.
//!
//! | method    | per-view variable | between-view coupling        |
//! |-----------|-------------------|------------------------------|
//! | `EmbdHt`  | weights `A_m`     | `A_m ≈ Σ s_ml A_l` (rows I_m)  |
//! | `App`     | weights `A_m`     | `K̂_m ≈ Σ s_ml K̂_l`           |
//! | `EmbdHm`  | one shared `A`    | none (weights tied)          |
//! | `Sdp`     | kernel `K̂_m ⪰ 0`  | `K̂_m ≈ Σ s_ml K̂_l`           |

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;

use crate::dataset::MultiViewDataset;
use crate::error::{MkcError, Result};
use crate::kernel::{KernelMatrix, ViewMask};
use crate::numerics::LineSearchConfig;
use crate::scalar::Scalar;

mod embd;
mod hm;
mod accel;
mod nullspace;
pub mod losses;
pub mod objective;
mod sdp;

pub use embd::{fit_app, fit_embd_ht};
pub use hm::fit_embd_hm;
pub use losses::{l21_norm, loss_between_kernels, loss_between_weights, loss_within, reconstruct_kernel};
pub use sdp::fit_sdp;

/// Row-norm threshold below which a reconstruction row counts as zero.
pub const BASIS_ROW_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Sdp,
    EmbdHt,
    App,
    EmbdHm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::EmbdHt, Method::App, Method::Sdp, Method::EmbdHm];

    pub fn label(self) -> &'static str {
        match self {
            Method::Sdp => "MKC_sdp",
            Method::EmbdHt => "MKC_embd(ht)",
            Method::App => "MKC_app",
            Method::EmbdHm => "MKC_embd(hm)",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sdp => "sdp",
            Method::EmbdHt => "embd-ht",
            Method::App => "app",
            Method::EmbdHm => "embd-hm",
        })
    }
}

impl FromStr for Method {
    type Err = MkcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sdp" => Ok(Method::Sdp),
            "embd-ht" | "embd_ht" => Ok(Method::EmbdHt),
            "app" => Ok(Method::App),
            "embd-hm" | "embd_hm" => Ok(Method::EmbdHm),
            other => Err(MkcError::InvalidInput(format!("unknown completion method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T: Scalar> {
    pub method: Method,
    /// Coupling weight of the SDP variant.
    pub c: T,
    /// Between-view coupling weight of the embedding variants.
    pub c1: T,
    /// ℓ2,1 weight of the embedding variants.
    pub c2: T,
    pub max_outer_iters: usize,
    /// Stop once the relative change of the objective drops below this.
    pub rel_tol: T,
    pub seed: u64,
    /// Overwrite the observed block of each output with the observed values.
    pub clamp_known_output: bool,
    pub line_search: LineSearchConfig<T>,
    /// Projected-gradient steps per view per outer iteration (SDP only).
    pub sdp_inner_iters: usize,
    /// Gradient-mapping tolerance ending the SDP inner loop early.
    pub sdp_inner_tol: T,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            c: T::one(),
            c1: T::one(),
            c2: T::one(),
            max_outer_iters: 500,
            rel_tol: T::lit(1e-6),
            seed: 0,
            clamp_known_output: true,
            line_search: LineSearchConfig::default(),
            sdp_inner_iters: 5,
            sdp_inner_tol: T::lit(1e-6),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite_value() {
                Ok(())
            } else {
                Err(MkcError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        match self.method {
            Method::Sdp => positive("c", self.c)?,
            Method::EmbdHm => positive("c2", self.c2)?,
            Method::EmbdHt | Method::App => {
                positive("c1", self.c1)?;
                positive("c2", self.c2)?;
            }
        }
        positive("rel_tol", self.rel_tol)?;
        if self.max_outer_iters == 0 {
            return Err(MkcError::Config("max_outer_iters must be at least 1".into()));
        }
        if self.method == Method::Sdp && self.sdp_inner_iters == 0 {
            return Err(MkcError::Config("sdp_inner_iters must be at least 1".into()));
        }
        self.line_search.validate()
    }
}

/// Per-view reconstruction weights `A^(m)`; rows outside a view's known set are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionWeights<T: Scalar> {
    matrices: Vec<DMatrix<T>>,
    masks: Vec<ViewMask>,
}

impl<T: Scalar> ReconstructionWeights<T> {
    pub fn new(matrices: Vec<DMatrix<T>>, masks: Vec<ViewMask>) -> Result<Self> {
        if matrices.len() != masks.len() {
            return Err(MkcError::Shape(format!(
                "{} weight matrices for {} masks",
                matrices.len(),
                masks.len()
            )));
        }
        for (v, (a, mask)) in matrices.iter().zip(&masks).enumerate() {
            if a.shape() != (mask.n(), mask.n()) {
                return Err(MkcError::Shape(format!("weights of view {v} are {:?}", a.shape())));
            }
        }
        Ok(Self { matrices, masks })
    }

    pub fn views(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, view: usize) -> &DMatrix<T> {
        &self.matrices[view]
    }

    pub fn matrices(&self) -> &[DMatrix<T>] {
        &self.matrices
    }

    pub fn mask(&self, view: usize) -> &ViewMask {
        &self.masks[view]
    }

    /// Known samples whose reconstruction row is non-zero.
    pub fn basis_set(&self, view: usize) -> Vec<usize> {
        let a = &self.matrices[view];
        self.masks[view]
            .known()
            .iter()
            .copied()
            .filter(|&i| a.row(i).norm() > T::lit(BASIS_ROW_TOL))
            .collect()
    }
}

/// `M × M` matrix of convex-combination weights; row `m` mixes the other views.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCombinationWeights<T: Scalar> {
    s: DMatrix<T>,
}

impl<T: Scalar> KernelCombinationWeights<T> {
    /// Zero diagonal, `1/(M−1)` elsewhere.
    pub fn uniform(m: usize) -> Self {
        let w = if m > 1 {
            T::one() / T::from_usize(m - 1).unwrap()
        } else {
            T::zero()
        };
        Self {
            s: DMatrix::from_fn(m, m, |i, j| if i == j { T::zero() } else { w }),
        }
    }

    pub fn new(s: DMatrix<T>) -> Result<Self> {
        let out = Self { s };
        out.check()?;
        Ok(out)
    }

    /// Simplex rows with zero diagonal, within `1e-9`.
    pub fn check(&self) -> Result<()> {
        let m = self.s.nrows();
        if self.s.ncols() != m {
            return Err(MkcError::Shape(format!("S must be square, got {:?}", self.s.shape())));
        }
        if m < 2 {
            return Ok(());
        }
        let tol = T::lit(1e-9);
        for i in 0..m {
            if self.s[(i, i)] != T::zero() {
                return Err(MkcError::InvalidInput(format!("S[{i}][{i}] must be zero")));
            }
            let row = self.s.row(i);
            if row.iter().any(|v| *v < -tol) || (row.sum() - T::one()).abs() > tol {
                return Err(MkcError::InvalidInput(format!("row {i} of S is not on the simplex")));
            }
        }
        Ok(())
    }

    pub fn views(&self) -> usize {
        self.s.nrows()
    }

    pub fn get(&self, m: usize, l: usize) -> T {
        self.s[(m, l)]
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.s
    }

    /// Weights of row `m` over the other views, in view order.
    pub fn others(&self, m: usize) -> Vec<T> {
        (0..self.views()).filter(|&l| l != m).map(|l| self.s[(m, l)]).collect()
    }

    pub(crate) fn set_others(&mut self, m: usize, weights: &[T]) {
        let mut it = weights.iter();
        for l in 0..self.views() {
            self.s[(m, l)] = if l == m { T::zero() } else { *it.next().unwrap() };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry<T: Scalar> {
    pub iteration: usize,
    pub objective: T,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult<T: Scalar> {
    pub method: String,
    /// Completed kernels, one per view.
    pub kernels: Vec<KernelMatrix<T>>,
    pub weights: Option<ReconstructionWeights<T>>,
    pub s: Option<KernelCombinationWeights<T>>,
    /// Objective after initialisation (iteration 0) and after every outer iteration.
    pub trace: Vec<TraceEntry<T>>,
    pub iterations: usize,
    pub converged: bool,
    pub seconds: f64,
}

/// Runs the solver selected by `cfg.method`.
pub fn complete<T: Scalar>(ds: &MultiViewDataset<T>, cfg: &SolverConfig<T>) -> Result<CompletionResult<T>> {
    match cfg.method {
        Method::EmbdHt => fit_embd_ht(ds, cfg),
        Method::App => fit_app(ds, cfg),
        Method::Sdp => fit_sdp(ds, cfg),
        Method::EmbdHm => fit_embd_hm(ds, cfg),
    }
}

pub(crate) fn check_method<T: Scalar>(cfg: &SolverConfig<T>, expected: Method) -> Result<()> {
    if cfg.method != expected {
        return Err(MkcError::Config(format!(
            "configuration is for `{}`, solver is `{expected}`",
            cfg.method
        )));
    }
    cfg.validate()
}

/// Outer-loop bookkeeping shared by every solver.
pub(crate) struct Progress<T: Scalar> {
    start: Instant,
    pub trace: Vec<TraceEntry<T>>,
    rel_tol: T,
}

impl<T: Scalar> Progress<T> {
    pub fn new(initial: T, rel_tol: T) -> Result<Self> {
        let mut p = Self {
            start: Instant::now(),
            trace: Vec::new(),
            rel_tol,
        };
        p.record(0, initial)?;
        Ok(p)
    }

    /// Records the objective after `iteration`; returns whether it has converged.
    pub fn record(&mut self, iteration: usize, objective: T) -> Result<bool> {
        if !objective.is_finite_value() {
            return Err(MkcError::Divergence {
                iteration,
                value: objective.to_f64_lossy(),
            });
        }
        let converged = match self.trace.last() {
            Some(prev) => {
                let change = (prev.objective - objective).abs();
                let scale = prev.objective.abs().max(objective.abs());
                change <= self.rel_tol * scale
            }
            None => false,
        };
        self.trace.push(TraceEntry {
            iteration,
            objective,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        });
        if iteration > 0 {
            log::debug!("iteration {iteration}: objective {objective:e}");
        }
        Ok(converged)
    }

    pub fn seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Wraps raw reconstructions into kernels, optionally restoring observed blocks.
pub(crate) fn finish_kernels<T: Scalar>(
    ds: &MultiViewDataset<T>,
    estimates: Vec<DMatrix<T>>,
    clamp: bool,
) -> Result<Vec<KernelMatrix<T>>> {
    estimates
        .into_iter()
        .enumerate()
        .map(|(v, mut k)| {
            if clamp {
                let obs = ds.kernel(v);
                for &i in obs.mask().known() {
                    for &j in obs.mask().known() {
                        k[(i, j)] = obs.get(i, j).unwrap();
                    }
                }
            }
            KernelMatrix::new(crate::kernel::symmetrize(&k))
        })
        .collect()
}

/// Convert a line-search failure on a non-finite current value into a
/// divergence report for `iteration`.
pub(crate) fn as_divergence(err: MkcError, iteration: usize) -> MkcError {
    match err {
        MkcError::NonFinite(_) => MkcError::Divergence {
            iteration,
            value: f64::NAN,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("knn".parse::<Method>().is_err());
    }

    #[test]
    fn uniform_s_is_valid() {
        let s = KernelCombinationWeights::<f64>::uniform(4);
        s.check().unwrap();
        assert_eq!(s.others(2), vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn s_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 1.0, 0.0]);
        assert!(KernelCombinationWeights::new(bad).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 0.7, 1.0, 0.0]);
        assert!(KernelCombinationWeights::new(bad).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::<f64>::new(Method::EmbdHt);
        cfg.validate().unwrap();
        cfg.c1 = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SolverConfig::<f64>::new(Method::Sdp);
        cfg.c = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn basis_set_lists_non_zero_known_rows() {
        let mask = ViewMask::new(3, vec![0, 2]).unwrap();
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let w = ReconstructionWeights::new(vec![a], vec![mask]).unwrap();
        assert_eq!(w.basis_set(0), vec![0]);
    }
}
