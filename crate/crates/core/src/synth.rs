//! Synthetic multi-view datasets and missing-view induction.
//!
//! Every toy dataset has five views over `n` samples. The first
//! `basis_count` samples of each view are drawn uniformly from `[-1, 1)^d`
//! (`d = 5` for views 0–1, `d = 10` for views 2–4); every other sample is a
//! random non-negative mixture of them, `X = A · X_basis`, with one mixing
//! matrix shared by views {0, 1} and another by views {2, 3, 4}.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::MultiViewDataset;
use crate::error::{MkcError, Result};
use crate::kernel::{compute_kernel, KernelKind, ViewMask};
use crate::scalar::Scalar;

pub const TOY_VIEWS: usize = 5;
const VIEW_DIMS: [usize; TOY_VIEWS] = [5, 5, 10, 10, 10];
/// Views sharing a mixing matrix.
const MIXING_GROUP: [usize; TOY_VIEWS] = [0, 0, 1, 1, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ToyName {
    /// Linear kernel in every view.
    Toyl,
    /// Gaussian kernel of width 1 in every view.
    Toyg1,
    /// Gaussian kernel of width 0.1 in every view.
    Toyg01,
    /// Linear kernel in views 0–2, Gaussian of width 1 in views 3–4.
    Toylg1,
}

impl ToyName {
    pub const ALL: [ToyName; 4] = [ToyName::Toyl, ToyName::Toyg1, ToyName::Toyg01, ToyName::Toylg1];

    pub fn kinds(self) -> [KernelKind; TOY_VIEWS] {
        let g1 = KernelKind::Gaussian { width: 1.0 };
        match self {
            ToyName::Toyl => [KernelKind::Linear; TOY_VIEWS],
            ToyName::Toyg1 => [g1; TOY_VIEWS],
            ToyName::Toyg01 => [KernelKind::Gaussian { width: 0.1 }; TOY_VIEWS],
            ToyName::Toylg1 => [
                KernelKind::Linear,
                KernelKind::Linear,
                KernelKind::Linear,
                g1,
                g1,
            ],
        }
    }

    /// Upper-case display label, e.g. `TOYG0.1`.
    pub fn label(self) -> &'static str {
        match self {
            ToyName::Toyl => "TOYL",
            ToyName::Toyg1 => "TOYG1",
            ToyName::Toyg01 => "TOYG0.1",
            ToyName::Toylg1 => "TOYLG1",
        }
    }
}

impl fmt::Display for ToyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToyName::Toyl => "toyl",
            ToyName::Toyg1 => "toyg1",
            ToyName::Toyg01 => "toyg0.1",
            ToyName::Toylg1 => "toylg1",
        })
    }
}

impl FromStr for ToyName {
    type Err = MkcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "toyl" => Ok(ToyName::Toyl),
            "toyg1" => Ok(ToyName::Toyg1),
            "toyg0.1" | "toyg01" => Ok(ToyName::Toyg01),
            "toylg1" => Ok(ToyName::Toylg1),
            other => Err(MkcError::InvalidInput(format!("unknown toy recipe `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyRecipe {
    pub name: ToyName,
    pub n: usize,
    pub basis_count: usize,
    pub seed: u64,
}

impl ToyRecipe {
    pub fn new(name: ToyName, seed: u64) -> Self {
        Self {
            name,
            n: 100,
            basis_count: 10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.basis_count == 0 || self.basis_count >= self.n {
            return Err(MkcError::Config(format!(
                "basis_count must be in 1..n, got {} for n = {}",
                self.basis_count, self.n
            )));
        }
        Ok(())
    }
}

/// Raw ingredients of a toy dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyParts<T: Scalar> {
    /// Basis samples per view, `basis_count × d`.
    pub basis: Vec<DMatrix<T>>,
    /// Mixing matrix per view, `(n − basis_count) × basis_count`.
    pub mixing: Vec<DMatrix<T>>,
    /// Full features per view, `n × d`: basis rows first, mixtures after.
    pub features: Vec<DMatrix<T>>,
}

/// Draws the basis samples and mixing matrices of `recipe`.
pub fn generate_toy_parts<T: Scalar>(recipe: &ToyRecipe) -> Result<ToyParts<T>> {
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let b = recipe.basis_count;
    let rest = recipe.n - b;
    let basis: Vec<DMatrix<T>> = VIEW_DIMS
        .iter()
        .map(|&d| DMatrix::from_fn(b, d, |_, _| T::lit(rng.gen_range(-1.0..1.0))))
        .collect();
    let groups: Vec<DMatrix<T>> = (0..2)
        .map(|_| DMatrix::from_fn(rest, b, |_, _| T::lit(rng.gen_range(0.0..1.0))))
        .collect();
    let mixing: Vec<DMatrix<T>> = MIXING_GROUP.iter().map(|&g| groups[g].clone()).collect();
    let features = basis
        .iter()
        .zip(&mixing)
        .map(|(xb, a)| {
            let mixed = a * xb;
            DMatrix::from_fn(recipe.n, xb.ncols(), |i, j| {
                if i < b {
                    xb[(i, j)]
                } else {
                    mixed[(i - b, j)]
                }
            })
        })
        .collect();
    Ok(ToyParts {
        basis,
        mixing,
        features,
    })
}

/// Fully observed toy dataset with truth kernels, features and kernel kinds.
pub fn generate_toy<T: Scalar>(recipe: &ToyRecipe) -> Result<MultiViewDataset<T>> {
    let parts = generate_toy_parts::<T>(recipe)?;
    let kinds = recipe.name.kinds().to_vec();
    let truth = parts
        .features
        .iter()
        .zip(&kinds)
        .map(|(x, kind)| compute_kernel(*kind, x))
        .collect::<Result<Vec<_>>>()?;
    MultiViewDataset::complete(truth)?.with_features(parts.features, kinds)
}

/// How missing views are introduced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissingnessPlan {
    /// Fraction of eligible (non-anchor) points that lose views.
    pub affected_fraction: f64,
    pub views_removed_per_point: usize,
    /// Leading fraction of sample indices that is never touched.
    pub anchor_fraction: f64,
    /// Smallest number of observed samples any view may be left with.
    pub min_known_per_view: usize,
    pub seed: u64,
}

impl Default for MissingnessPlan {
    fn default() -> Self {
        Self {
            affected_fraction: 0.5,
            views_removed_per_point: 1,
            anchor_fraction: 0.1,
            min_known_per_view: 10,
            seed: 0,
        }
    }
}

impl MissingnessPlan {
    pub fn validate(&self, views: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.affected_fraction) {
            return Err(MkcError::Config(format!(
                "affected_fraction must be in [0, 1], got {}",
                self.affected_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.anchor_fraction) {
            return Err(MkcError::Config(format!(
                "anchor_fraction must be in [0, 1), got {}",
                self.anchor_fraction
            )));
        }
        if self.views_removed_per_point == 0 || self.views_removed_per_point >= views {
            return Err(MkcError::InfeasiblePlan(format!(
                "cannot remove {} of {views} views per point: every point must keep at least one view",
                self.views_removed_per_point
            )));
        }
        Ok(())
    }

    pub fn anchor_count(&self, n: usize) -> usize {
        (self.anchor_fraction * n as f64).round() as usize
    }
}

/// Masks produced by removing views from points of each partition
/// independently. Anchors (the leading `anchor_fraction · n` indices) are
/// never selected.
pub fn plan_masks(n: usize, views: usize, plan: &MissingnessPlan, partitions: &[Vec<usize>]) -> Result<Vec<ViewMask>> {
    plan.validate(views)?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let anchors = plan.anchor_count(n);
    let mut known = vec![vec![true; n]; views];
    for part in partitions {
        let mut eligible: Vec<usize> = part.iter().copied().filter(|&i| i >= anchors && i < n).collect();
        eligible.sort_unstable();
        eligible.shuffle(&mut rng);
        let count = (plan.affected_fraction * eligible.len() as f64).round() as usize;
        let mut chosen: Vec<usize> = eligible[..count].to_vec();
        chosen.sort_unstable();
        for i in chosen {
            for v in sample(&mut rng, views, plan.views_removed_per_point).into_iter() {
                known[v][i] = false;
            }
        }
    }
    known
        .into_iter()
        .enumerate()
        .map(|(v, flags)| {
            let idx: Vec<usize> = (0..n).filter(|&i| flags[i]).collect();
            if idx.len() < plan.min_known_per_view {
                return Err(MkcError::InfeasiblePlan(format!(
                    "view {v} would keep {} observed samples, fewer than {}",
                    idx.len(),
                    plan.min_known_per_view
                )));
            }
            ViewMask::new(n, idx)
        })
        .collect()
}

/// Removes views from `ds` (which must carry ground truth) treating all
/// samples as one partition.
pub fn induce_missing<T: Scalar>(ds: &MultiViewDataset<T>, plan: &MissingnessPlan) -> Result<MultiViewDataset<T>> {
    let all: Vec<usize> = (0..ds.n()).collect();
    induce_missing_in(ds, plan, &[all])
}

/// Like [`induce_missing`], selecting affected points per partition.
pub fn induce_missing_in<T: Scalar>(
    ds: &MultiViewDataset<T>,
    plan: &MissingnessPlan,
    partitions: &[Vec<usize>],
) -> Result<MultiViewDataset<T>> {
    if ds.truth().is_none() {
        return Err(MkcError::InvalidInput("inducing missing views requires ground truth".into()));
    }
    let masks = plan_masks(ds.n(), ds.m(), plan, partitions)?;
    ds.remask(masks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_names_parse() {
        for name in ToyName::ALL {
            assert_eq!(name.to_string().parse::<ToyName>().unwrap(), name);
        }
        assert!("toyx".parse::<ToyName>().is_err());
    }

    #[test]
    fn mixing_matrices_are_shared_within_groups() {
        let parts = generate_toy_parts::<f64>(&ToyRecipe::new(ToyName::Toyl, 3)).unwrap();
        assert_eq!(parts.mixing[0], parts.mixing[1]);
        assert_eq!(parts.mixing[2], parts.mixing[3]);
        assert_eq!(parts.mixing[3], parts.mixing[4]);
        assert_ne!(parts.mixing[1], parts.mixing[2]);
        assert_eq!(parts.mixing[0].shape(), (90, 10));
        assert_eq!(parts.features[0].shape(), (100, 5));
        assert_eq!(parts.features[4].shape(), (100, 10));
        assert!(parts.basis.iter().all(|b| b.iter().all(|v| (-1.0..1.0).contains(v))));
    }

    #[test]
    fn toyg1_has_unit_diagonal() {
        let ds = generate_toy::<f64>(&ToyRecipe::new(ToyName::Toyg1, 5)).unwrap();
        for k in ds.truth().unwrap() {
            assert!((0..k.n()).all(|i| k.get(i, i) == 1.0));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let r = ToyRecipe::new(ToyName::Toylg1, 11);
        assert_eq!(generate_toy::<f64>(&r).unwrap(), generate_toy::<f64>(&r).unwrap());
        let other = ToyRecipe { seed: 12, ..r };
        assert_ne!(generate_toy::<f64>(&r).unwrap(), generate_toy::<f64>(&other).unwrap());
    }

    #[test]
    fn zero_fraction_plan_is_a_no_op() {
        let ds = generate_toy::<f64>(&ToyRecipe::new(ToyName::Toyl, 1)).unwrap();
        let plan = MissingnessPlan {
            affected_fraction: 0.0,
            ..MissingnessPlan::default()
        };
        assert!(induce_missing(&ds, &plan).unwrap().is_complete());
    }

    #[test]
    fn one_view_removed_per_affected_point() {
        let ds = generate_toy::<f64>(&ToyRecipe::new(ToyName::Toyl, 1)).unwrap();
        let plan = MissingnessPlan {
            affected_fraction: 0.6,
            views_removed_per_point: 1,
            ..MissingnessPlan::default()
        };
        let out = induce_missing(&ds, &plan).unwrap();
        let mut affected = 0;
        for i in 0..100 {
            let missing = 5 - out.views_of(i).len();
            assert!(missing <= 1);
            if i < 10 {
                assert_eq!(missing, 0, "anchor {i} lost a view");
            }
            affected += missing;
        }
        assert_eq!(affected, 54);
    }

    #[test]
    fn removing_every_view_is_rejected() {
        let ds = generate_toy::<f64>(&ToyRecipe::new(ToyName::Toyl, 1)).unwrap();
        let plan = MissingnessPlan {
            views_removed_per_point: 5,
            ..MissingnessPlan::default()
        };
        assert!(matches!(induce_missing(&ds, &plan), Err(MkcError::InfeasiblePlan(_))));
    }

    #[test]
    fn too_few_known_points_is_infeasible() {
        let ds = generate_toy::<f64>(&ToyRecipe::new(ToyName::Toyl, 1)).unwrap();
        let plan = MissingnessPlan {
            affected_fraction: 1.0,
            views_removed_per_point: 4,
            anchor_fraction: 0.0,
            min_known_per_view: 30,
            seed: 2,
        };
        assert!(matches!(induce_missing(&ds, &plan), Err(MkcError::InfeasiblePlan(_))));
    }
}
