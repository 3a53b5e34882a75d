use nalgebra::DMatrix;

use crate::error::{MkcError, Result};
use crate::kernel::{apply_mask, KernelKind, KernelMatrix, ObservedKernel, ViewMask};
use crate::scalar::Scalar;

/// Tolerance for the observed block agreeing with the ground-truth kernel.
const TRUTH_AGREEMENT_TOL: f64 = 1e-9;

/// `M` partially observed kernels over a common set of `N` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset<T: Scalar> {
    n: usize,
    kernels: Vec<ObservedKernel<T>>,
    truth: Option<Vec<KernelMatrix<T>>>,
    features: Option<Vec<DMatrix<T>>>,
    kinds: Option<Vec<KernelKind>>,
}

impl<T: Scalar> MultiViewDataset<T> {
    pub fn new(kernels: Vec<ObservedKernel<T>>) -> Result<Self> {
        let n = kernels
            .first()
            .map(ObservedKernel::n)
            .ok_or_else(|| MkcError::InvalidInput("a dataset needs at least one view".into()))?;
        if let Some(v) = kernels.iter().position(|k| k.n() != n) {
            return Err(MkcError::Shape(format!(
                "view {v} has {} samples, view 0 has {n}",
                kernels[v].n()
            )));
        }
        if let Some(i) = (0..n).find(|&i| kernels.iter().all(|k| !k.mask().is_known(i))) {
            return Err(MkcError::InvalidMask(format!("sample {i} is missing from every view")));
        }
        Ok(Self {
            n,
            kernels,
            truth: None,
            features: None,
            kinds: None,
        })
    }

    /// Observes `truth[v]` through `masks[v]` and keeps the truth for evaluation.
    pub fn from_truth(truth: Vec<KernelMatrix<T>>, masks: Vec<ViewMask>) -> Result<Self> {
        if truth.len() != masks.len() {
            return Err(MkcError::Shape(format!(
                "{} truth kernels but {} masks",
                truth.len(),
                masks.len()
            )));
        }
        let kernels = truth
            .iter()
            .zip(&masks)
            .map(|(k, m)| apply_mask(k, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kernels)?.with_truth(truth)
    }

    /// Every view fully observed.
    pub fn complete(truth: Vec<KernelMatrix<T>>) -> Result<Self> {
        let masks = truth.iter().map(|k| ViewMask::full(k.n())).collect();
        Self::from_truth(truth, masks)
    }

    pub fn with_truth(mut self, truth: Vec<KernelMatrix<T>>) -> Result<Self> {
        if truth.len() != self.m() {
            return Err(MkcError::Shape(format!(
                "{} truth kernels for {} views",
                truth.len(),
                self.m()
            )));
        }
        for (v, (t, obs)) in truth.iter().zip(&self.kernels).enumerate() {
            if t.n() != self.n {
                return Err(MkcError::Shape(format!(
                    "truth kernel {v} is {}x{}, dataset has {} samples",
                    t.n(),
                    t.n(),
                    self.n
                )));
            }
            for &i in obs.mask().known() {
                for &j in obs.mask().known() {
                    let gap = (t.get(i, j) - obs.get(i, j).unwrap()).to_f64_lossy().abs();
                    if gap > TRUTH_AGREEMENT_TOL {
                        return Err(MkcError::InvalidInput(format!(
                            "truth kernel {v} disagrees with the observed block at ({i}, {j}) by {gap:e}"
                        )));
                    }
                }
            }
        }
        self.truth = Some(truth);
        Ok(self)
    }

    /// Attaches raw per-view features and the kernel function of each view.
    pub fn with_features(mut self, features: Vec<DMatrix<T>>, kinds: Vec<KernelKind>) -> Result<Self> {
        if features.len() != self.m() || kinds.len() != self.m() {
            return Err(MkcError::Shape(format!(
                "{} feature matrices and {} kernel kinds for {} views",
                features.len(),
                kinds.len(),
                self.m()
            )));
        }
        if let Some(v) = features.iter().position(|x| x.nrows() != self.n) {
            return Err(MkcError::Shape(format!(
                "features of view {v} have {} rows, dataset has {} samples",
                features[v].nrows(),
                self.n
            )));
        }
        self.features = Some(features);
        self.kinds = Some(kinds);
        Ok(self)
    }

    pub fn with_kinds(mut self, kinds: Vec<KernelKind>) -> Result<Self> {
        if kinds.len() != self.m() {
            return Err(MkcError::Shape(format!("{} kernel kinds for {} views", kinds.len(), self.m())));
        }
        self.kinds = Some(kinds);
        Ok(self)
    }

    /// Same truth, features and kinds observed through new masks.
    pub fn remask(&self, masks: Vec<ViewMask>) -> Result<Self> {
        let truth = self
            .truth
            .clone()
            .ok_or_else(|| MkcError::InvalidInput("re-masking requires ground-truth kernels".into()))?;
        let mut ds = Self::from_truth(truth, masks)?;
        ds.features = self.features.clone();
        ds.kinds = self.kinds.clone();
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.kernels.len()
    }

    pub fn kernels(&self) -> &[ObservedKernel<T>] {
        &self.kernels
    }

    pub fn kernel(&self, view: usize) -> &ObservedKernel<T> {
        &self.kernels[view]
    }

    pub fn mask(&self, view: usize) -> &ViewMask {
        self.kernels[view].mask()
    }

    pub fn masks(&self) -> impl Iterator<Item = &ViewMask> {
        self.kernels.iter().map(ObservedKernel::mask)
    }

    pub fn truth(&self) -> Option<&[KernelMatrix<T>]> {
        self.truth.as_deref()
    }

    pub fn features(&self) -> Option<&[DMatrix<T>]> {
        self.features.as_deref()
    }

    pub fn kinds(&self) -> Option<&[KernelKind]> {
        self.kinds.as_deref()
    }

    /// Views in which sample `i` is observed.
    pub fn views_of(&self, i: usize) -> Vec<usize> {
        (0..self.m()).filter(|&v| self.mask(v).is_known(i)).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.masks().all(ViewMask::is_full)
    }
}
