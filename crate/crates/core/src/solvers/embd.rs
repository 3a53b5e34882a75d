use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::accel::{accelerated_step, composite, Block, Momentum};
use super::nullspace::{reweighted_sweeps, ColumnGroup, NullBasis, RowProblem};
use super::objective::{
    app_smooth, embd_ht_smooth, hull_combination, mask_rows, reconstruct, rows_of, submatrix, views_from, within_gradient,
    within_value, ViewData,
};
use super::{
    check_method, finish_kernels, CompletionResult, KernelCombinationWeights, Method, Progress, ReconstructionWeights,
    SolverConfig,
};
use crate::dataset::MultiViewDataset;
use crate::error::Result;
use crate::kernel::ViewMask;
use crate::kernel::symmetrize;
use crate::numerics::{solve_simplex_ls, SimplexQPProblem};
use crate::scalar::Scalar;
use crate::solvers::losses::l21_norm;

/// Relative eigenvalue cut-off of the null-space moves.
const NULL_TOL: f64 = 1e-10;
const NULL_SWEEPS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coupling {
    /// Hull on the reconstruction weights.
    Weights,
    /// Hull on the reconstructed kernels.
    Kernels,
}

/// Heterogeneous embeddings: per-view weights coupled through a weight hull.
pub fn fit_embd_ht<T: Scalar>(ds: &MultiViewDataset<T>, cfg: &SolverConfig<T>) -> Result<CompletionResult<T>> {
    check_method(cfg, Method::EmbdHt)?;
    fit(ds, cfg, Coupling::Weights)
}

/// Per-view weights coupled through a hull on the reconstructed kernels.
pub fn fit_app<T: Scalar>(ds: &MultiViewDataset<T>, cfg: &SolverConfig<T>) -> Result<CompletionResult<T>> {
    check_method(cfg, Method::App)?;
    fit(ds, cfg, Coupling::Kernels)
}

/// `A_II = I`, `A_{I,Iᶜ} ~ U(−1, 1)`, all other rows zero.
pub(crate) fn initial_weights<T: Scalar>(view: &ViewData<T>, seed: u64) -> DMatrix<T> {
    let n = view.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(n, n);
    for &i in view.known() {
        a[(i, i)] = T::one();
        for t in view.mask.missing() {
            a[(i, t)] = T::lit(rng.gen_range(-1.0..1.0));
        }
    }
    a
}

fn objective<T: Scalar>(
    views: &[ViewData<T>],
    a: &[DMatrix<T>],
    s: &KernelCombinationWeights<T>,
    cfg: &SolverConfig<T>,
    coupling: Coupling,
) -> T {
    let smooth = match coupling {
        Coupling::Weights => embd_ht_smooth(views, a, s, cfg.c1),
        Coupling::Kernels => app_smooth(views, a, s, cfg.c1),
    };
    let l21 = views
        .iter()
        .zip(a)
        .fold(T::zero(), |acc, (v, a)| acc + l21_norm(a, &v.mask));
    smooth + cfg.c2 * l21
}

/// `A_m` with the other views and `S` held fixed, weight hull.
struct WeightBlock<'a, T: Scalar> {
    view: &'a ViewData<T>,
    c1: T,
    /// `P_m Σ_{l≠m} s_ml A_l`.
    target: DMatrix<T>,
    /// `(s_vm, P_v (A_v − Σ_{l≠v,m} s_vl A_l), mask of v)` for every `v ≠ m` with `s_vm ≠ 0`.
    coupled: Vec<(T, DMatrix<T>, &'a ViewMask)>,
    weights: Vec<T>,
    curvature: DMatrix<T>,
    /// `c1 κ_i`: per-row curvature of the hull term.
    row_q: Vec<T>,
    /// `c1 b`, the linear part of the hull term per row.
    row_b: DMatrix<T>,
}

impl<'a, T: Scalar> WeightBlock<'a, T> {
    fn new(views: &'a [ViewData<T>], a: &[DMatrix<T>], s: &KernelCombinationWeights<T>, c1: T, m: usize) -> Self {
        let view = &views[m];
        let n = view.n();
        let mut target = hull_combination(a, s, m);
        mask_rows(&mut target, &view.mask);
        let mut coupled = Vec::new();
        let mut kappa = vec![T::one(); n];
        for v in 0..a.len() {
            let w = s.get(v, m);
            if v == m || w == T::zero() {
                continue;
            }
            let mut d = a[v].clone();
            for (l, al) in a.iter().enumerate() {
                if l != v && l != m && s.get(v, l) != T::zero() {
                    d -= al * s.get(v, l);
                }
            }
            mask_rows(&mut d, &views[v].mask);
            for (i, k) in kappa.iter_mut().enumerate() {
                if views[v].mask.is_known(i) {
                    *k += w * w;
                }
            }
            coupled.push((w, d, &views[v].mask));
        }
        let mut row_b = target.clone();
        for (w, d, _) in &coupled {
            row_b += d * *w;
        }
        let row_b = row_b * c1;
        let row_q: Vec<T> = kappa.iter().map(|k| *k * c1).collect();
        let weights = (0..n)
            .map(|i| if view.mask.is_known(i) { T::one() } else { T::zero() })
            .collect();
        let two = T::lit(2.0);
        let curvature = DMatrix::from_fn(n, n, |i, t| {
            if view.mask.is_known(i) && !view.mask.is_known(t) {
                two * c1 * kappa[i]
            } else {
                T::zero()
            }
        });
        Self {
            view,
            c1,
            target,
            coupled,
            weights,
            curvature,
            row_q,
            row_b,
        }
    }

    fn coupled_residual(&self, w: T, d: &DMatrix<T>, mask: &ViewMask, x: &DMatrix<T>) -> DMatrix<T> {
        let mut e = d - x * w;
        mask_rows(&mut e, mask);
        e
    }
}

impl<T: Scalar> Block<T> for WeightBlock<'_, T> {
    fn value(&self, x: &DMatrix<T>) -> T {
        let mut hull = (x - &self.target).norm_squared();
        for (w, d, mask) in &self.coupled {
            hull += self.coupled_residual(*w, d, mask, x).norm_squared();
        }
        within_value(self.view, x) + self.c1 * hull
    }

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut g = x - &self.target;
        for (w, d, mask) in &self.coupled {
            g -= self.coupled_residual(*w, d, mask, x) * *w;
        }
        let mut g = within_gradient(self.view, x) + g * (T::lit(2.0) * self.c1);
        mask_rows(&mut g, &self.view.mask);
        g
    }

    fn row_weights(&self) -> &[T] {
        &self.weights
    }

    fn fixed_curvature(&self) -> Option<&DMatrix<T>> {
        Some(&self.curvature)
    }
}

/// `A_m` with the other views and `S` held fixed, kernel hull.
struct KernelBlock<'a, T: Scalar> {
    view: &'a ViewData<T>,
    c1: T,
    /// `Σ_{l≠m} s_ml K̂_l`.
    target: DMatrix<T>,
    /// `(s_vm, K̂_v − Σ_{l≠v,m} s_vl K̂_l)`.
    coupled: Vec<(T, DMatrix<T>)>,
    weights: Vec<T>,
}

impl<'a, T: Scalar> KernelBlock<'a, T> {
    fn new(views: &'a [ViewData<T>], khat: &[DMatrix<T>], s: &KernelCombinationWeights<T>, c1: T, m: usize) -> Self {
        let view = &views[m];
        let target = hull_combination(khat, s, m);
        let mut coupled = Vec::new();
        for v in 0..khat.len() {
            let w = s.get(v, m);
            if v == m || w == T::zero() {
                continue;
            }
            let mut d = khat[v].clone();
            for (l, kl) in khat.iter().enumerate() {
                if l != v && l != m && s.get(v, l) != T::zero() {
                    d -= kl * s.get(v, l);
                }
            }
            coupled.push((w, d));
        }
        let weights = (0..view.n())
            .map(|i| if view.mask.is_known(i) { T::one() } else { T::zero() })
            .collect();
        Self {
            view,
            c1,
            target,
            coupled,
            weights,
        }
    }
}

impl<T: Scalar> Block<T> for KernelBlock<'_, T> {
    fn value(&self, x: &DMatrix<T>) -> T {
        let khat = reconstruct(self.view, x);
        let idx = self.view.known();
        let within = (submatrix(&khat, idx, idx) - &self.view.k).norm_squared();
        let mut hull = (&khat - &self.target).norm_squared();
        for (w, d) in &self.coupled {
            hull += (d - &khat * *w).norm_squared();
        }
        within + self.c1 * hull
    }

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let idx = self.view.known();
        let w = rows_of(x, idx);
        let kw = &self.view.k * &w;
        let khat = symmetrize(&(w.transpose() * &kw));
        let mut g = &khat - &self.target;
        for (s, d) in &self.coupled {
            g -= (d - &khat * *s) * *s;
        }
        // Both terms are 4 K W (·): the hull residual and, on I × I, the within residual.
        let mut inner = symmetrize(&g) * self.c1;
        for (p, &i) in idx.iter().enumerate() {
            for (q, &j) in idx.iter().enumerate() {
                inner[(i, j)] += khat[(i, j)] - self.view.k[(p, q)];
            }
        }
        let gw = kw * inner * T::lit(4.0);
        let mut out = DMatrix::zeros(self.view.n(), self.view.n());
        for (p, &i) in idx.iter().enumerate() {
            out.row_mut(i).copy_from(&gw.row(p));
        }
        out
    }

    fn row_weights(&self) -> &[T] {
        &self.weights
    }
}

struct NullMove<'a, T: Scalar> {
    problem: RowProblem<'a, T>,
    group: ColumnGroup<'a, T>,
    free: Vec<usize>,
}

/// Accelerated proximal step on one view's weights followed by a null-space
/// move, each kept only if it lowers the block objective. `None` if neither does.
fn update_block<T: Scalar, B: Block<T>>(
    block: &B,
    x: &DMatrix<T>,
    cfg: &SolverConfig<T>,
    momentum: &mut Momentum<T>,
    null: Option<NullMove<'_, T>>,
) -> Option<DMatrix<T>> {
    let current = composite(block, x, cfg.c2);
    let step = accelerated_step(block, x, current, cfg.c2, momentum, &cfg.line_search);
    let (mut best, value) = if step.moved {
        (Some(step.x), step.objective)
    } else {
        (None, current)
    };
    if let Some(null) = null {
        let base = best.as_ref().unwrap_or(x);
        let candidate = reweighted_sweeps(base, &null.problem, &[null.group], &null.free, NULL_SWEEPS);
        let moved = composite(block, &candidate, cfg.c2);
        if moved < value {
            best = Some(candidate);
        }
    }
    best
}

/// Refits row `m` of `S` on the simplex, warm-started at its current value.
fn update_s_row<T: Scalar>(
    views: &[ViewData<T>],
    a: &[DMatrix<T>],
    khat: &[DMatrix<T>],
    s: &mut KernelCombinationWeights<T>,
    coupling: Coupling,
    m: usize,
) -> Result<()> {
    let others: Vec<usize> = (0..a.len()).filter(|&l| l != m).collect();
    let warm = s.others(m);
    let solution = match coupling {
        Coupling::Weights => {
            let masked: Vec<DMatrix<T>> = a
                .iter()
                .map(|a| {
                    let mut a = a.clone();
                    mask_rows(&mut a, &views[m].mask);
                    a
                })
                .collect();
            let problem = SimplexQPProblem {
                targets: others.iter().map(|&l| &masked[l]).collect(),
                reference: &masked[m],
            };
            solve_simplex_ls(&problem, Some(&warm))?
        }
        Coupling::Kernels => {
            let problem = SimplexQPProblem {
                targets: others.iter().map(|&l| &khat[l]).collect(),
                reference: &khat[m],
            };
            solve_simplex_ls(&problem, Some(&warm))?
        }
    };
    s.set_others(m, &solution.weights);
    Ok(())
}

fn fit<T: Scalar>(ds: &MultiViewDataset<T>, cfg: &SolverConfig<T>, coupling: Coupling) -> Result<CompletionResult<T>> {
    let views = views_from(ds);
    let m_views = views.len();
    let mut a: Vec<DMatrix<T>> = views
        .iter()
        .enumerate()
        .map(|(v, view)| initial_weights(view, cfg.seed.wrapping_add(v as u64)))
        .collect();
    let mut s = KernelCombinationWeights::uniform(m_views);
    let mut khat: Vec<DMatrix<T>> = match coupling {
        Coupling::Kernels => views.iter().zip(&a).map(|(v, a)| reconstruct(v, a)).collect(),
        Coupling::Weights => Vec::new(),
    };
    let mut progress = Progress::new(objective(&views, &a, &s, cfg, coupling), cfg.rel_tol)?;
    let nulls: Vec<Option<NullBasis<T>>> = views.iter().map(|v| NullBasis::new(&v.k, T::lit(NULL_TOL))).collect();
    let mut momentum: Vec<Momentum<T>> = (0..m_views).map(|_| Momentum::new(&cfg.line_search)).collect();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=cfg.max_outer_iters {
        for m in 0..m_views {
            let known = views[m].known();
            let next = match coupling {
                Coupling::Weights => {
                    let block = WeightBlock::new(&views, &a, &s, cfg.c1, m);
                    let problem = RowProblem {
                        rows: known,
                        q: &block.row_q,
                        b: Some(&block.row_b),
                        weights: &block.weights,
                        c2: cfg.c2,
                    };
                    let null = nulls[m].as_ref().map(|basis| NullMove {
                        problem,
                        group: ColumnGroup { cols: known.to_vec(), basis },
                        free: views[m].mask.missing(),
                    });
                    update_block(&block, &a[m], cfg, &mut momentum[m], null)
                }
                Coupling::Kernels => {
                    let block = KernelBlock::new(&views, &khat, &s, cfg.c1, m);
                    let zero = vec![T::zero(); views[m].n()];
                    let problem = RowProblem {
                        rows: known,
                        q: &zero,
                        b: None,
                        weights: &block.weights,
                        c2: cfg.c2,
                    };
                    let null = nulls[m].as_ref().map(|basis| NullMove {
                        problem,
                        group: ColumnGroup { cols: (0..views[m].n()).collect(), basis },
                        free: Vec::new(),
                    });
                    update_block(&block, &a[m], cfg, &mut momentum[m], null)
                }
            };
            if let Some(x) = next {
                a[m] = x;
            }
            if coupling == Coupling::Kernels {
                khat[m] = reconstruct(&views[m], &a[m]);
            }
        }
        if m_views > 1 {
            for m in 0..m_views {
                update_s_row(&views, &a, &khat, &mut s, coupling, m)?;
            }
        }
        iterations = iter;
        if progress.record(iter, objective(&views, &a, &s, cfg, coupling))? {
            converged = true;
            break;
        }
    }

    let estimates = match coupling {
        Coupling::Kernels => khat.iter().map(symmetrize).collect(),
        Coupling::Weights => views.iter().zip(&a).map(|(v, a)| reconstruct(v, a)).collect(),
    };
    let kernels = finish_kernels(ds, estimates, cfg.clamp_known_output)?;
    let masks = views.iter().map(|v| v.mask.clone()).collect();
    Ok(CompletionResult {
        method: cfg.method.to_string(),
        kernels,
        weights: Some(ReconstructionWeights::new(a, masks)?),
        s: Some(s),
        seconds: progress.seconds(),
        trace: progress.trace,
        iterations,
        converged,
    })
}
