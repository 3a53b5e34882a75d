//! Accelerated proximal gradient on one block of variables.
//!
//! Each call makes one step from the extrapolated point
//! `y = x + β (x − x_prev)`. When the result does not decrease the composite
//! objective, momentum is dropped and a plain proximal step from `x` is
//! taken instead, so accepted iterates never increase the objective.

use nalgebra::DMatrix;

use crate::numerics::{prox_l21_row, prox_l21_row_scaled, LineSearchConfig};
use crate::scalar::Scalar;

/// Smooth part, its gradient, and the row weights of the ℓ2,1 term.
pub(crate) trait Block<T: Scalar> {
    fn value(&self, x: &DMatrix<T>) -> T;
    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T>;
    /// Multiplier of `c2` on each row's norm; zero rows are held at zero.
    fn row_weights(&self) -> &[T];
    /// Entrywise curvature used instead of the step-size metric where positive.
    fn fixed_curvature(&self) -> Option<&DMatrix<T>> {
        None
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Momentum<T: Scalar> {
    prev: Option<DMatrix<T>>,
    t: T,
    /// Current inverse step size.
    lipschitz: T,
}

impl<T: Scalar> Momentum<T> {
    pub fn new(cfg: &LineSearchConfig<T>) -> Self {
        Self {
            prev: None,
            t: T::one(),
            lipschitz: T::one() / cfg.initial_step,
        }
    }

    pub fn reset(&mut self) {
        self.prev = None;
        self.t = T::one();
    }
}

fn regulariser<T: Scalar>(x: &DMatrix<T>, weights: &[T], c2: T) -> T {
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != T::zero())
        .fold(T::zero(), |acc, (i, w)| acc + *w * x.row(i).norm())
        * c2
}

/// `prox` of the weighted ℓ2,1 term in the metric `diag(d)` (`d = L` where no curvature is fixed).
fn prox_step<T: Scalar>(
    y: &DMatrix<T>,
    g: &DMatrix<T>,
    lipschitz: T,
    fixed: Option<&DMatrix<T>>,
    weights: &[T],
    c2: T,
) -> (DMatrix<T>, DMatrix<T>) {
    let (n, k) = y.shape();
    let d = match fixed {
        Some(c) => c.map(|v| if v > T::zero() { v } else { lipschitz }),
        None => DMatrix::from_element(n, k, lipschitz),
    };
    let mut z = DMatrix::zeros(n, k);
    for i in 0..n {
        if weights[i] == T::zero() && y.row(i).iter().all(|v| *v == T::zero()) && g.row(i).iter().all(|v| *v == T::zero()) {
            continue;
        }
        let zi: Vec<T> = (0..k).map(|j| y[(i, j)] - g[(i, j)] / d[(i, j)]).collect();
        let out = if fixed.is_some() {
            let di: Vec<T> = (0..k).map(|j| d[(i, j)]).collect();
            prox_l21_row_scaled(&zi, &di, c2 * weights[i])
        } else {
            prox_l21_row(&zi, c2 * weights[i] / lipschitz)
        };
        for (j, v) in out.into_iter().enumerate() {
            z[(i, j)] = v;
        }
    }
    (z, d)
}

/// Result of one block step.
pub(crate) struct BlockStep<T: Scalar> {
    pub x: DMatrix<T>,
    pub objective: T,
    pub moved: bool,
}

/// One accelerated step on `block` from `x`, whose composite objective is `current`.
pub(crate) fn accelerated_step<T: Scalar, B: Block<T>>(
    block: &B,
    x: &DMatrix<T>,
    current: T,
    c2: T,
    state: &mut Momentum<T>,
    cfg: &LineSearchConfig<T>,
) -> BlockStep<T> {
    let half = T::lit(0.5);
    let weights = block.row_weights();
    let t_next = (T::one() + (T::one() + T::lit(4.0) * state.t * state.t).sqrt()) * half;
    let extrapolated = state.prev.as_ref().map(|p| {
        let beta = (state.t - T::one()) / t_next;
        x + (x - p) * beta
    });

    let mut starts: Vec<(DMatrix<T>, bool)> = Vec::with_capacity(2);
    if let Some(y) = extrapolated {
        starts.push((y, true));
    }
    starts.push((x.clone(), false));

    for (y, with_momentum) in starts {
        let fy = block.value(&y);
        if !fy.is_finite_value() {
            continue;
        }
        let gy = block.gradient(&y);
        // Let the step grow back slowly after a hard region.
        let mut lipschitz = state.lipschitz * cfg.shrink.sqrt();
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let (z, d) = prox_step(&y, &gy, lipschitz, block.fixed_curvature(), weights, c2);
            let diff = &z - &y;
            let model = fy + gy.dot(&diff) + half * d.component_mul(&diff).dot(&diff);
            let fz = block.value(&z);
            if fz.is_finite_value() && fz <= model + T::lit(1e-12) * fy.abs().max(T::one()) {
                accepted = Some((z, fz));
                break;
            }
            lipschitz = lipschitz / cfg.shrink;
        }
        state.lipschitz = lipschitz;
        let Some((z, fz)) = accepted else { continue };
        let objective = fz + regulariser(&z, weights, c2);
        if objective <= current {
            if with_momentum {
                state.t = t_next;
            } else {
                state.t = (T::one() + (T::one() + T::lit(4.0)).sqrt()) * half;
            }
            state.prev = Some(x.clone());
            return BlockStep {
                x: z,
                objective,
                moved: true,
            };
        }
        state.reset();
    }
    state.reset();
    BlockStep {
        x: x.clone(),
        objective: current,
        moved: false,
    }
}

/// Composite objective of `block` at `x`.
pub(crate) fn composite<T: Scalar, B: Block<T>>(block: &B, x: &DMatrix<T>, c2: T) -> T {
    block.value(x) + regulariser(x, block.row_weights(), c2)
}
