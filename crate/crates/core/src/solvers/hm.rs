use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::accel::{accelerated_step, composite, Block, Momentum};
use super::nullspace::{reweighted_sweeps, ColumnGroup, NullBasis, RowProblem};
use super::objective::{embd_hm_gradient, embd_hm_smooth, reconstruct, views_from, ViewData};
use super::{check_method, finish_kernels, CompletionResult, Method, Progress, ReconstructionWeights, SolverConfig};
use crate::dataset::MultiViewDataset;
use crate::error::Result;
use crate::scalar::Scalar;

/// Relative eigenvalue cut-off of the joint null space, on the squared scale.
const JOINT_NULL_TOL: f64 = 1e-12;
const NULL_SWEEPS: usize = 1;

/// Number of views observing each sample; the ℓ2,1 weight of its row.
fn row_weights<T: Scalar>(views: &[ViewData<T>], n: usize) -> Vec<T> {
    (0..n)
        .map(|i| T::from_usize(views.iter().filter(|v| v.mask.is_known(i)).count()).unwrap())
        .collect()
}

struct SharedBlock<'a, T: Scalar> {
    views: &'a [ViewData<T>],
    weights: Vec<T>,
}

impl<T: Scalar> Block<T> for SharedBlock<'_, T> {
    fn value(&self, x: &DMatrix<T>) -> T {
        embd_hm_smooth(self.views, x)
    }

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T> {
        embd_hm_gradient(self.views, x)
    }

    fn row_weights(&self) -> &[T] {
        &self.weights
    }
}

/// Columns grouped by the set of views observing them, each with the joint
/// null basis of those views' kernel blocks.
fn column_patterns<T: Scalar>(views: &[ViewData<T>], rows: &[usize]) -> Vec<(Vec<usize>, Option<NullBasis<T>>)> {
    let n = rows.iter().max().map_or(0, |m| m + 1).max(views.first().map_or(0, |v| v.n()));
    let mut patterns: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for j in 0..n {
        let seen: Vec<usize> = (0..views.len()).filter(|&v| views[v].mask.is_known(j)).collect();
        patterns.entry(seen).or_default().push(j);
    }
    patterns
        .into_iter()
        .map(|(seen, cols)| {
            let blocks: Vec<(&[usize], &DMatrix<T>)> = seen.iter().map(|&v| (views[v].known(), &views[v].k)).collect();
            (cols, NullBasis::joint(rows, &blocks, T::lit(JOINT_NULL_TOL)))
        })
        .collect()
}

/// Homogeneous embeddings: one weight matrix shared by every view, no `S`.
pub fn fit_embd_hm<T: Scalar>(ds: &MultiViewDataset<T>, cfg: &SolverConfig<T>) -> Result<CompletionResult<T>> {
    check_method(cfg, Method::EmbdHm)?;
    let views = views_from(ds);
    let n = ds.n();
    let weights = row_weights(&views, n);

    let mut a = DMatrix::identity(n, n);
    let rows: Vec<usize> = (0..n).filter(|&i| weights[i] > T::zero()).collect();
    let patterns = column_patterns(&views, &rows);
    let zero = vec![T::zero(); n];
    let block = SharedBlock { views: &views, weights };
    let mut progress = Progress::new(composite(&block, &a, cfg.c2), cfg.rel_tol)?;
    let mut momentum = Momentum::new(&cfg.line_search);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=cfg.max_outer_iters {
        let current = composite(&block, &a, cfg.c2);
        let step = accelerated_step(&block, &a, current, cfg.c2, &mut momentum, &cfg.line_search);
        if step.moved {
            a = step.x;
        }
        let groups: Vec<ColumnGroup<'_, T>> = patterns
            .iter()
            .filter_map(|(cols, basis)| basis.as_ref().map(|basis| ColumnGroup { cols: cols.clone(), basis }))
            .collect();
        let problem = RowProblem {
            rows: &rows,
            q: &zero,
            b: None,
            weights: &block.weights,
            c2: cfg.c2,
        };
        let candidate = reweighted_sweeps(&a, &problem, &groups, &[], NULL_SWEEPS);
        let mut objective = composite(&block, &a, cfg.c2);
        let moved = composite(&block, &candidate, cfg.c2);
        if moved < objective {
            a = candidate;
            objective = moved;
        }
        iterations = iter;
        if progress.record(iter, objective)? {
            converged = true;
            break;
        }
    }

    let estimates = views.iter().map(|v| reconstruct(v, &a)).collect();
    let kernels = finish_kernels(ds, estimates, cfg.clamp_known_output)?;
    let masks: Vec<_> = views.iter().map(|v| v.mask.clone()).collect();
    let per_view = vec![a; masks.len()];
    Ok(CompletionResult {
        method: cfg.method.to_string(),
        kernels,
        weights: Some(ReconstructionWeights::new(per_view, masks)?),
        s: None,
        seconds: progress.seconds(),
        trace: progress.trace,
        iterations,
        converged,
    })
}
