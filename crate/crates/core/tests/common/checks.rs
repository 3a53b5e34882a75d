//! Checks shared by the individual suites and the acceptance report. Each
//! returns the measured quantity or a description of the first violation.

use mkc::eval::are;
use mkc::kernel::{compute_kernel, KernelKind, ViewMask};
use mkc::numerics::{project_psd, project_simplex, prox_l21_row, solve_simplex_ls, SimplexQPProblem};
use mkc::solvers::complete;
use mkc::solvers::objective::{
    app_gradient, app_smooth, embd_hm_gradient, embd_hm_smooth, embd_ht_gradient, embd_ht_smooth, sdp_gradient,
    sdp_objective, views_from, ViewData,
};
use mkc::{Dataset64, KernelCombinationWeights, Method, SolverConfig};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{min_eigenvalue, random_dataset};

pub type Check<T = ()> = Result<T, String>;

fn prox_objective(x: &[f64], delta: &[f64], t: f64) -> f64 {
    let fit: f64 = x.iter().zip(delta).map(|(a, b)| (a - b).powi(2)).sum();
    0.5 * fit + t * x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Golden-section search of `f` on `[lo, hi]`.
fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-13 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

/// Largest deviation of the group prox from a line-search minimiser on random 3-D cases.
pub fn prox_vs_numerical(cases: usize, seed: u64) -> Check<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let delta: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let t = rng.gen_range(0.0..4.0);
        let got = prox_l21_row(&delta, t);
        // The minimiser is a non-negative multiple of delta.
        let alpha = golden(
            |a| prox_objective(&delta.iter().map(|d| a * d).collect::<Vec<_>>(), &delta, t),
            0.0,
            1.0,
        );
        let gap = got
            .iter()
            .zip(&delta)
            .map(|(g, d)| (g - alpha * d).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
        let best = prox_objective(&got, &delta, t);
        for _ in 0..20 {
            let probe: Vec<f64> = got.iter().map(|v| v + rng.gen_range(-1e-3..1e-3)).collect();
            if prox_objective(&probe, &delta, t) < best - 1e-12 {
                return Err(format!("a perturbation of prox({delta:?}, {t}) scores lower"));
            }
        }
    }
    if worst <= 1e-6 {
        Ok(worst)
    } else {
        Err(format!("largest deviation {worst:e}"))
    }
}

/// `x_i = max(v_i − τ, 0)` with `τ` found by bisection on `Σ x_i = 1`.
fn simplex_kkt(v: &[f64]) -> Vec<f64> {
    let mass = |tau: f64| v.iter().map(|x| (x - tau).max(0.0)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

pub fn simplex_vs_kkt(cases: usize, seed: u64) -> Check<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let k = 1 + case % 8;
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let got = project_simplex(&v);
        let oracle = simplex_kkt(&v);
        let gap = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
        if (got.iter().sum::<f64>() - 1.0).abs() > 1e-12 || got.iter().any(|x| *x < 0.0) {
            return Err(format!("projection of {v:?} is off the simplex: {got:?}"));
        }
    }
    if worst <= 1e-9 {
        Ok(worst)
    } else {
        Err(format!("largest deviation {worst:e}"))
    }
}

/// Cyclic Jacobi eigen-decomposition: `(eigenvalues, eigenvectors as columns)`.
fn jacobi(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = 0.5 * (2.0 * a[(p, q)]).atan2(a[(q, q)] - a[(p, p)]);
                let (s, c) = theta.sin_cos();
                let mut rot = DMatrix::identity(n, n);
                rot[(p, p)] = c;
                rot[(q, q)] = c;
                rot[(p, q)] = s;
                rot[(q, p)] = -s;
                a = rot.transpose() * &a * &rot;
                v = &v * &rot;
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

fn clip_by_brute_force(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = jacobi(m);
    let clipped = DMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|v| v.max(0.0))));
    &vectors * clipped * vectors.transpose()
}

pub fn psd_vs_brute_force(cases: usize, seed: u64) -> Check<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let n = 2 + case % 2;
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        let m = (&raw + raw.transpose()) * 0.5;
        let got = project_psd(&m).map_err(|e| e.to_string())?;
        worst = worst.max((&got - clip_by_brute_force(&m)).amax());
        // No nearby PSD matrix is closer.
        let best = (&m - &got).norm();
        for _ in 0..10 {
            let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.05..0.05));
            let probe = project_psd(&(&got + &g * g.transpose())).map_err(|e| e.to_string())?;
            if (&m - &probe).norm() < best - 1e-10 {
                return Err(format!("a PSD matrix near the projection of {m} is closer"));
            }
        }
    }
    if worst <= 1e-8 {
        Ok(worst)
    } else {
        Err(format!("largest deviation {worst:e}"))
    }
}

fn mixture_error(targets: &[DMatrix<f64>], reference: &DMatrix<f64>, s: &[f64]) -> f64 {
    let mut mix = DMatrix::zeros(reference.nrows(), reference.ncols());
    for (t, w) in targets.iter().zip(s) {
        mix += t * *w;
    }
    (reference - mix).norm_squared()
}

/// Compares the simplex least-squares solver with an exhaustive grid of
/// spacing 1e-4 on 2- and 3-target problems.
pub fn simplex_ls_vs_grid(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-4;
    let ticks = 10_000usize;
    for case in 0..cases {
        let k = if case % 3 == 2 { 3 } else { 2 };
        let targets: Vec<DMatrix<f64>> = (0..k)
            .map(|_| DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let reference = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let problem = SimplexQPProblem {
            targets: targets.iter().collect(),
            reference: &reference,
        };
        let got = solve_simplex_ls(&problem, None).map_err(|e| e.to_string())?;

        // Gram form keeps the grid cheap.
        let gram = DMatrix::from_fn(k, k, |a, b| targets[a].dot(&targets[b]));
        let lin: Vec<f64> = (0..k).map(|a| targets[a].dot(&reference)).collect();
        let constant = reference.norm_squared();
        let value = |s: &[f64]| {
            let mut q = constant;
            for a in 0..k {
                q -= 2.0 * lin[a] * s[a];
                for b in 0..k {
                    q += gram[(a, b)] * s[a] * s[b];
                }
            }
            q
        };
        let mut best = (f64::INFINITY, vec![0.0; k]);
        let mut consider = |s: Vec<f64>| {
            let v = value(&s);
            if v < best.0 {
                best = (v, s);
            }
        };
        if k == 2 {
            for i in 0..=ticks {
                consider(vec![i as f64 * step, (ticks - i) as f64 * step]);
            }
        } else {
            for i in 0..=ticks {
                for j in 0..=ticks - i {
                    consider(vec![i as f64 * step, j as f64 * step, (ticks - i - j) as f64 * step]);
                }
            }
        }
        let solver_value = mixture_error(&targets, &reference, &got.weights);
        if solver_value > best.0 + 1e-10 {
            return Err(format!("case {case}: solver {solver_value} above grid {}", best.0));
        }
        let curvature = SymmetricEigen::new(gram.clone()).eigenvalues.min();
        let gap = got.weights.iter().zip(&best.1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if curvature > 0.1 && gap > 1e-3 {
            return Err(format!("case {case}: weights {:?} far from grid {:?}", got.weights, best.1));
        }
        let mut corners: Vec<Vec<f64>> = (0..k)
            .map(|v| (0..k).map(|l| if l == v { 1.0 } else { 0.0 }).collect())
            .collect();
        corners.push(vec![1.0 / k as f64; k]);
        if corners
            .iter()
            .any(|c| solver_value > mixture_error(&targets, &reference, c) + 1e-12)
        {
            return Err(format!("case {case}: a vertex or the barycentre beats the solver"));
        }
    }
    Ok(())
}

pub fn invariant_config(method: Method, seed: u64) -> SolverConfig<f64> {
    let mut cfg = SolverConfig::new(method);
    cfg.c = 0.5;
    cfg.c1 = 1.0;
    cfg.c2 = 0.1;
    cfg.max_outer_iters = 30;
    cfg.rel_tol = 1e-12;
    cfg.seed = seed;
    cfg.clamp_known_output = false;
    cfg
}

/// PSD outputs, simplex `S` rows and a non-increasing trace for every method.
pub fn solver_invariants(ds: &Dataset64, seed: u64) -> Check {
    for method in [Method::Sdp, Method::EmbdHt, Method::App, Method::EmbdHm] {
        let res = complete(ds, &invariant_config(method, seed)).map_err(|e| format!("{method}: {e}"))?;
        for (v, k) in res.kernels.iter().enumerate() {
            let low = min_eigenvalue(k);
            if low < -1e-9 {
                return Err(format!("{method} view {v}: min eigenvalue {low:e}"));
            }
        }
        if let Some(s) = &res.s {
            let s = s.matrix();
            for m in 0..s.nrows() {
                if s[(m, m)] != 0.0 || s.row(m).iter().any(|x| *x < 0.0) || (s.row(m).sum() - 1.0).abs() > 1e-9 {
                    return Err(format!("{method}: row {m} of S is {}", s.row(m)));
                }
            }
        }
        for pair in res.trace.windows(2) {
            if pair[1].objective > pair[0].objective + 1e-10 * pair[0].objective.abs().max(1.0) {
                return Err(format!(
                    "{method}: objective rose from {:e} to {:e} at iteration {}",
                    pair[0].objective, pair[1].objective, pair[1].iteration
                ));
            }
        }
    }
    Ok(())
}

/// Seeded small instances: `n` in 8..14, two or three views.
pub fn invariant_instances(count: usize) -> Check {
    for i in 0..count as u64 {
        let ds = random_dataset(1000 + i, 8 + (i as usize % 6), 2 + (i as usize % 2), 3);
        solver_invariants(&ds, i).map_err(|e| format!("instance {i}: {e}"))?;
    }
    Ok(())
}

fn random_weights(views: &[ViewData<f64>], rng: &mut ChaCha8Rng) -> Vec<DMatrix<f64>> {
    views
        .iter()
        .map(|v| {
            let n = v.n();
            DMatrix::from_fn(n, n, |i, _| if v.mask.is_known(i) { rng.gen_range(-0.5..0.5) } else { 0.0 })
        })
        .collect()
}

fn random_s(m: usize, rng: &mut ChaCha8Rng) -> KernelCombinationWeights<f64> {
    let mut s = DMatrix::zeros(m, m);
    for i in 0..m {
        let raw: Vec<f64> = (0..m).map(|j| if i == j { 0.0 } else { rng.gen_range(0.1..1.0) }).collect();
        let total: f64 = raw.iter().sum();
        for j in 0..m {
            s[(i, j)] = raw[j] / total;
        }
    }
    KernelCombinationWeights::new(s).unwrap()
}

/// Central differences of `f` at `x`, entry by entry.
fn numeric_gradient(x: &DMatrix<f64>, f: impl Fn(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let h = 1e-5;
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        let mut up = x.clone();
        let mut down = x.clone();
        up[(i, j)] += h;
        down[(i, j)] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

/// Largest gap relative to `max(1, ‖numeric‖∞)`.
fn relative_gap(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    (analytic - numeric).amax() / numeric.amax().max(1.0)
}

fn with_block(a: &[DMatrix<f64>], m: usize, block: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let mut out = a.to_vec();
    out[m] = block.clone();
    out
}

/// Worst relative gradient error over all four objectives at `n = 8`, `M = 3`.
pub fn gradient_check(instances: u64) -> Check<f64> {
    let mut worst: f64 = 0.0;
    let mut record = |name: &str, gap: f64| -> Check {
        worst = worst.max(gap);
        if gap > 1e-4 {
            Err(format!("{name}: relative gradient error {gap:e}"))
        } else {
            Ok(())
        }
    };
    for seed in 0..instances {
        let ds = random_dataset(100 + seed, 8, 3, 3);
        let views = views_from(&ds);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_weights(&views, &mut rng);
        let s = random_s(3, &mut rng);
        for m in 0..3 {
            let g = embd_ht_gradient(&views, &a, &s, 0.7, m);
            let mut fd = numeric_gradient(&a[m], |x| embd_ht_smooth(&views, &with_block(&a, m, x), &s, 0.7));
            // Rows outside the view are not variables.
            for i in 0..8 {
                if !views[m].mask.is_known(i) {
                    fd.row_mut(i).fill(0.0);
                }
            }
            record("embd-ht", relative_gap(&g, &fd))?;

            let g = app_gradient(&views, &a, &s, 0.7, m);
            let fd = numeric_gradient(&a[m], |x| app_smooth(&views, &with_block(&a, m, x), &s, 0.7));
            record("app", relative_gap(&g, &fd))?;

            let x: Vec<DMatrix<f64>> = (0..3)
                .map(|_| DMatrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0)))
                .collect();
            let g = sdp_gradient(&views, &x, &s, 0.3, m);
            let fd = numeric_gradient(&x[m], |y| sdp_objective(&views, &with_block(&x, m, y), &s, 0.3));
            record("sdp", relative_gap(&g, &fd))?;
        }
        let shared = DMatrix::from_fn(8, 8, |_, _| rng.gen_range(-0.5..0.5));
        let g = embd_hm_gradient(&views, &shared);
        let fd = numeric_gradient(&shared, |x| embd_hm_smooth(&views, x));
        record("embd-hm", relative_gap(&g, &fd))?;
    }
    Ok(worst)
}

/// Ten points, two identical linear views; view 1 misses the last point,
/// whose feature vector lies in the span of the other nine.
pub fn twin_views() -> Dataset64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = DMatrix::from_fn(10, 3, |_, _| rng.gen_range(-1.0..1.0));
    let k = compute_kernel(KernelKind::Linear, &x).unwrap();
    let masks = vec![ViewMask::full(10), ViewMask::new(10, (0..9).collect()).unwrap()];
    Dataset64::from_truth(vec![k.clone(), k], masks).unwrap()
}

pub fn recovery_config(method: Method) -> SolverConfig<f64> {
    let mut cfg = SolverConfig::new(method);
    cfg.c = 10.0;
    cfg.c1 = 10.0;
    cfg.c2 = 1e-4;
    cfg.max_outer_iters = 2000;
    cfg.rel_tol = 1e-12;
    cfg
}

/// ARE (percent) of the missing row of view 1.
pub fn recovery_error(method: Method) -> Check<f64> {
    let ds = twin_views();
    let res = complete(&ds, &recovery_config(method)).map_err(|e| e.to_string())?;
    let truth = ds.truth().unwrap();
    are(&res.kernels[1], &truth[1], ds.mask(1))
        .map_err(|e| e.to_string())?
        .percent()
        .ok_or_else(|| "view 1 has no missing rows".to_string())
}
