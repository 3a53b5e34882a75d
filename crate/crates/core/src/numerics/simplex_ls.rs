use nalgebra::{DMatrix, DVector};

use super::project_simplex;
use crate::error::{MkcError, Result};
use crate::scalar::Scalar;

/// `min_s ‖reference − Σ_l s_l · targets[l]‖²_F` over the probability simplex.
#[derive(Debug, Clone)]
pub struct SimplexQPProblem<'a, T: Scalar> {
    pub targets: Vec<&'a DMatrix<T>>,
    pub reference: &'a DMatrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexLsSolution<T: Scalar> {
    pub weights: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    /// `‖s − Π(s − ∇f(s))‖∞` at the returned point.
    pub kkt_residual: T,
}

/// Fixed-point tolerance on the projected-gradient residual.
const KKT_TOL: f64 = 1e-6;
const MAX_ITERS: usize = 200_000;

/// Projected gradient with step `1/L` on the Gram form of the problem.
///
/// The iteration is monotone, so starting from `warm_start` never returns a
/// worse objective than the warm start itself.
pub fn solve_simplex_ls<T: Scalar>(
    problem: &SimplexQPProblem<'_, T>,
    warm_start: Option<&[T]>,
) -> Result<SimplexLsSolution<T>> {
    let k = problem.targets.len();
    if k == 0 {
        return Err(MkcError::Shape("simplex least squares needs at least one target".into()));
    }
    let shape = problem.reference.shape();
    if let Some(l) = problem.targets.iter().position(|t| t.shape() != shape) {
        return Err(MkcError::Shape(format!(
            "target {l} is {:?}, reference is {:?}",
            problem.targets[l].shape(),
            shape
        )));
    }
    let gram = DMatrix::from_fn(k, k, |a, b| problem.targets[a].dot(problem.targets[b]));
    let linear = DVector::from_fn(k, |a, _| problem.targets[a].dot(problem.reference));
    let constant = problem.reference.norm_squared();
    let objective = |s: &DVector<T>| {
        let quad = (&gram * s).dot(s);
        (quad - (linear.dot(s) * T::lit(2.0)) + constant).max(T::zero())
    };

    let mut s = match warm_start {
        Some(w) if w.len() == k => DVector::from_vec(project_simplex(w)),
        Some(w) => {
            return Err(MkcError::Shape(format!(
                "warm start has {} weights for {k} targets",
                w.len()
            )))
        }
        None => DVector::from_element(k, T::one() / T::from_usize(k).unwrap()),
    };
    if k == 1 {
        return Ok(SimplexLsSolution {
            objective: objective(&s),
            weights: s.iter().copied().collect(),
            iterations: 0,
            kkt_residual: T::zero(),
        });
    }

    let lipschitz = gram
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(T::zero(), |a, b| a.max(b))
        * T::lit(2.0);
    let tol = T::lit(KKT_TOL);
    let gradient = |s: &DVector<T>| (&gram * s - &linear) * T::lit(2.0);
    let residual = |s: &DVector<T>, g: &DVector<T>| {
        let p = project_simplex((s - g).as_slice());
        s.iter()
            .zip(&p)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    };

    let mut g = gradient(&s);
    let mut res = residual(&s, &g);
    let mut iterations = 0;
    if lipschitz > T::zero() {
        let step = T::one() / lipschitz;
        while res > tol && iterations < MAX_ITERS {
            s = DVector::from_vec(project_simplex((&s - &g * step).as_slice()));
            g = gradient(&s);
            res = residual(&s, &g);
            iterations += 1;
        }
    }
    Ok(SimplexLsSolution {
        objective: objective(&s),
        weights: s.iter().copied().collect(),
        iterations,
        kkt_residual: res,
    })
}
