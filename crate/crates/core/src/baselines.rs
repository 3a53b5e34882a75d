//! Nearest-neighbour imputation in feature space.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::dataset::MultiViewDataset;
use crate::error::{MkcError, Result};
use crate::kernel::{compute_kernel, KernelKind};
use crate::scalar::Scalar;
use crate::solvers::{finish_kernels, CompletionResult, TraceEntry};

/// Guard added to neighbour distances before inverting them.
const DISTANCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnConfig {
    pub k: usize,
    /// Inverse-distance weights instead of a plain average.
    pub weighted: bool,
}

impl KnnConfig {
    pub fn new(k: usize, weighted: bool) -> Result<Self> {
        if k == 0 {
            return Err(MkcError::Config("k must be at least 1".into()));
        }
        Ok(Self { k, weighted })
    }

    pub fn name(&self) -> &'static str {
        if self.weighted {
            "wknn"
        } else {
            "knn"
        }
    }
}

/// Squared distance between samples `i` and `j` over the views both observe.
fn overlap_distance2<T: Scalar>(ds: &MultiViewDataset<T>, features: &[DMatrix<T>], i: usize, j: usize) -> Option<T> {
    let mut shared = false;
    let mut d2 = T::zero();
    for (v, x) in features.iter().enumerate() {
        if ds.mask(v).is_known(i) && ds.mask(v).is_known(j) {
            shared = true;
            d2 += (x.row(i) - x.row(j)).norm_squared();
        }
    }
    shared.then_some(d2)
}

/// Features of view `m` with every missing row imputed from its neighbours.
pub fn impute_features<T: Scalar>(ds: &MultiViewDataset<T>, m: usize, cfg: &KnnConfig) -> Result<DMatrix<T>> {
    let features = ds
        .features()
        .ok_or_else(|| MkcError::InvalidInput("nearest-neighbour imputation needs raw features".into()))?;
    let mask = ds.mask(m);
    let mut out = features[m].clone();
    for i in mask.missing() {
        let mut candidates: Vec<(T, usize)> = mask
            .known()
            .iter()
            .filter_map(|&j| overlap_distance2(ds, features, i, j).map(|d2| (d2.sqrt(), j)))
            .collect();
        if candidates.len() < cfg.k {
            return Err(MkcError::NotEnoughNeighbours(format!(
                "sample {i} has {} candidates in view {m}, k = {}",
                candidates.len(),
                cfg.k
            )));
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        candidates.truncate(cfg.k);

        let weights: Vec<T> = candidates
            .iter()
            .map(|(d, _)| {
                if cfg.weighted {
                    T::one() / (*d + T::lit(DISTANCE_EPS))
                } else {
                    T::one()
                }
            })
            .collect();
        let total = weights.iter().fold(T::zero(), |acc, w| acc + *w);
        let mut row = features[m].row(candidates[0].1) * T::zero();
        for ((_, j), w) in candidates.iter().zip(&weights) {
            row += features[m].row(*j) * (*w / total);
        }
        out.row_mut(i).copy_from(&row);
    }
    if ds.kinds().map(|k| k[m]) == Some(KernelKind::Jaccard) {
        binarize_rows(&mut out, mask.missing());
    }
    Ok(out)
}

/// Thresholds imputed rows at one half, keeping at least the largest entry set.
fn binarize_rows<T: Scalar>(x: &mut DMatrix<T>, rows: Vec<usize>) {
    let half = T::lit(0.5);
    for i in rows {
        let mut best = 0;
        for c in 0..x.ncols() {
            if x[(i, c)] > x[(i, best)] {
                best = c;
            }
        }
        let mut any = false;
        for c in 0..x.ncols() {
            let on = x[(i, c)] >= half;
            any |= on;
            x[(i, c)] = if on { T::one() } else { T::zero() };
        }
        if !any && x.ncols() > 0 {
            x[(i, best)] = T::one();
        }
    }
}

/// Imputes missing feature rows of every view and recomputes the kernels.
/// Observed kernel entries are kept as they are.
pub fn knn_impute<T: Scalar>(ds: &MultiViewDataset<T>, cfg: &KnnConfig) -> Result<CompletionResult<T>> {
    let start = Instant::now();
    let kinds = ds
        .kinds()
        .ok_or_else(|| MkcError::InvalidInput("nearest-neighbour imputation needs the kernel kind of every view".into()))?;
    let estimates = (0..ds.m())
        .map(|m| {
            let x = impute_features(ds, m, cfg)?;
            Ok(compute_kernel(kinds[m], &x)?.into_values())
        })
        .collect::<Result<Vec<_>>>()?;
    let kernels = finish_kernels(ds, estimates, true)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(CompletionResult {
        method: cfg.name().to_string(),
        kernels,
        weights: None,
        s: None,
        trace: vec![TraceEntry {
            iteration: 0,
            objective: T::zero(),
            wall_ms: seconds * 1e3,
        }],
        iterations: 0,
        converged: true,
        seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelMatrix, ViewMask};

    /// Two views of 1-D features; sample 3 is missing from view 1.
    fn dataset(view1: [f64; 4]) -> MultiViewDataset<f64> {
        let f0 = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 5.0, 0.9]);
        let f1 = DMatrix::from_column_slice(4, 1, &view1);
        let truth: Vec<KernelMatrix<f64>> = [&f0, &f1]
            .iter()
            .map(|x| compute_kernel(KernelKind::Linear, x).unwrap())
            .collect();
        let masks = vec![ViewMask::full(4), ViewMask::new(4, vec![0, 1, 2]).unwrap()];
        MultiViewDataset::from_truth(truth, masks)
            .unwrap()
            .with_features(vec![f0, f1], vec![KernelKind::Linear; 2])
            .unwrap()
    }

    #[test]
    fn nearest_neighbour_copies_row() {
        let ds = dataset([0.0, 7.0, 3.0, 0.0]);
        let x = impute_features(&ds, 1, &KnnConfig::new(1, false).unwrap()).unwrap();
        assert_eq!(x[(3, 0)], 7.0);
    }

    #[test]
    fn two_neighbours_average() {
        let ds = dataset([0.0, 2.0, 3.0, 0.0]);
        let x = impute_features(&ds, 1, &KnnConfig::new(2, false).unwrap()).unwrap();
        assert_eq!(x[(3, 0)], 1.0);
    }

    #[test]
    fn equidistant_neighbours_weighting_is_irrelevant() {
        let f0 = DMatrix::from_column_slice(3, 1, &[0.0, 2.0, 1.0]);
        let f1 = DMatrix::from_column_slice(3, 1, &[4.0, 8.0, 0.0]);
        let truth = vec![
            compute_kernel(KernelKind::Linear, &f0).unwrap(),
            compute_kernel(KernelKind::Linear, &f1).unwrap(),
        ];
        let masks = vec![ViewMask::full(3), ViewMask::new(3, vec![0, 1]).unwrap()];
        let ds = MultiViewDataset::from_truth(truth, masks)
            .unwrap()
            .with_features(vec![f0, f1], vec![KernelKind::Linear; 2])
            .unwrap();
        let plain = knn_impute(&ds, &KnnConfig::new(2, false).unwrap()).unwrap();
        let weighted = knn_impute(&ds, &KnnConfig::new(2, true).unwrap()).unwrap();
        assert_eq!(plain.kernels, weighted.kernels);
        assert_eq!(plain.kernels[1].get(2, 2), 36.0);
    }

    #[test]
    fn known_block_untouched() {
        let ds = dataset([0.0, 7.0, 3.0, 0.0]);
        let out = knn_impute(&ds, &KnnConfig::new(2, true).unwrap()).unwrap();
        for &i in ds.mask(1).known() {
            for &j in ds.mask(1).known() {
                assert_eq!(out.kernels[1].get(i, j), ds.kernel(1).get(i, j).unwrap());
            }
        }
    }

    #[test]
    fn too_few_candidates() {
        let ds = dataset([0.0, 7.0, 3.0, 0.0]);
        assert!(matches!(
            knn_impute(&ds, &KnnConfig::new(4, false).unwrap()),
            Err(MkcError::NotEnoughNeighbours(_))
        ));
        assert!(KnnConfig::new(0, false).is_err());
    }

    #[test]
    fn gaussian_views_stay_in_unit_interval() {
        let f0 = DMatrix::from_fn(6, 2, |i, j| ((i * 2 + j) as f64).sin());
        let f1 = DMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64 * 0.7).cos() * 3.0);
        let kind = KernelKind::gaussian(1.0).unwrap();
        let truth = vec![compute_kernel(kind, &f0).unwrap(), compute_kernel(kind, &f1).unwrap()];
        let masks = vec![ViewMask::full(6), ViewMask::new(6, vec![0, 1, 2, 3]).unwrap()];
        let ds = MultiViewDataset::from_truth(truth, masks)
            .unwrap()
            .with_features(vec![f0, f1], vec![kind; 2])
            .unwrap();
        let out = knn_impute(&ds, &KnnConfig::new(3, true).unwrap()).unwrap();
        assert!(out.kernels[1].values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
