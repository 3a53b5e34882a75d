use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::{kernel_residuals, observed_error, residual_total, sdp_gradient, views_from, ViewData};
use super::{as_divergence, check_method, finish_kernels, CompletionResult, KernelCombinationWeights, Method, Progress, SolverConfig};
use crate::dataset::MultiViewDataset;
use crate::error::Result;
use crate::kernel::symmetrize;
use crate::numerics::{backtracking_step, project_psd, solve_simplex_ls, LineSearchConfig, SimplexQPProblem};
use crate::scalar::Scalar;

/// Known block copied, unknown entries `U(−1, 1)`, then symmetrised and projected.
fn initial_kernel<T: Scalar>(view: &ViewData<T>, seed: u64) -> Result<DMatrix<T>> {
    let n = view.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, n, |_, _| T::lit(rng.gen_range(-1.0..1.0)));
    for (p, &i) in view.known().iter().enumerate() {
        for (q, &j) in view.known().iter().enumerate() {
            x[(i, j)] = view.k[(p, q)];
        }
    }
    project_psd(&symmetrize(&x))
}

fn objective<T: Scalar>(x: &[DMatrix<T>], s: &KernelCombinationWeights<T>, c: T, fit: &[T]) -> T {
    let fit = fit.iter().fold(T::zero(), |acc, v| acc + *v);
    fit + c * residual_total(&kernel_residuals(x, s))
}

/// Kernel-space completion: every estimate is kept on the PSD cone.
pub fn fit_sdp<T: Scalar>(ds: &MultiViewDataset<T>, cfg: &SolverConfig<T>) -> Result<CompletionResult<T>> {
    check_method(cfg, Method::Sdp)?;
    let views = views_from(ds);
    let m_views = views.len();
    let mut x = views
        .iter()
        .enumerate()
        .map(|(v, view)| initial_kernel(view, cfg.seed.wrapping_add(v as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut s = KernelCombinationWeights::uniform(m_views);
    let mut fit: Vec<T> = views.iter().zip(&x).map(|(v, x)| observed_error(v, x)).collect();
    let mut current = objective(&x, &s, cfg.c, &fit);
    let mut progress = Progress::new(current, cfg.rel_tol)?;
    let mut converged = false;
    let mut iterations = 0;
    let two = T::lit(2.0);

    for iter in 1..=cfg.max_outer_iters {
        for m in 0..m_views {
            // Lipschitz constant of the gradient in X_m.
            let reverse = (0..m_views)
                .filter(|&v| v != m)
                .fold(T::zero(), |acc, v| acc + s.get(v, m) * s.get(v, m));
            let lipschitz = two * (T::one() + cfg.c * (T::one() + reverse));
            let ls = LineSearchConfig {
                initial_step: T::one() / lipschitz,
                ..cfg.line_search
            };
            for _ in 0..cfg.sdp_inner_iters {
                let grad = sdp_gradient(&views, &x, &s, cfg.c, m);
                let point = x[m].clone();
                let mut trial_x = x.clone();
                let mut trial_fit = fit.clone();
                let outcome = backtracking_step(
                    |cand| {
                        trial_x[m] = cand.clone();
                        trial_fit[m] = observed_error(&views[m], cand);
                        objective(&trial_x, &s, cfg.c, &trial_fit)
                    },
                    &point,
                    current,
                    &grad,
                    // Projection failures surface as a non-finite candidate and are rejected.
                    |p, _| project_psd(&p).unwrap_or_else(|_| DMatrix::from_element(p.nrows(), p.ncols(), T::lit(f64::NAN))),
                    &ls,
                )
                .map_err(|e| as_divergence(e, iter))?;
                if outcome.step == T::zero() {
                    break;
                }
                let residual = (&outcome.point - &point).amax() / outcome.step;
                fit[m] = observed_error(&views[m], &outcome.point);
                x[m] = outcome.point;
                current = outcome.objective;
                if residual <= cfg.sdp_inner_tol {
                    break;
                }
            }
        }
        if m_views > 1 {
            for m in 0..m_views {
                let others: Vec<usize> = (0..m_views).filter(|&l| l != m).collect();
                let problem = SimplexQPProblem {
                    targets: others.iter().map(|&l| &x[l]).collect(),
                    reference: &x[m],
                };
                let solution = solve_simplex_ls(&problem, Some(&s.others(m)))?;
                s.set_others(m, &solution.weights);
            }
            current = objective(&x, &s, cfg.c, &fit);
        }
        iterations = iter;
        if progress.record(iter, current)? {
            converged = true;
            break;
        }
    }

    let kernels = finish_kernels(ds, x, cfg.clamp_known_output)?;
    Ok(CompletionResult {
        method: cfg.method.to_string(),
        kernels,
        weights: None,
        s: Some(s),
        seconds: progress.seconds(),
        trace: progress.trace,
        iterations,
        converged,
    })
}
