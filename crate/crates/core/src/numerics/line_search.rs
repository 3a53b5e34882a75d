use nalgebra::DMatrix;

use crate::error::{MkcError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig<T: Scalar> {
    pub initial_step: T,
    /// Factor in (0, 1) applied after each rejected trial.
    pub shrink: T,
    pub max_backtracks: usize,
    /// `σ` in `F(x⁺) ≤ F(x) − σ/(2λ)·‖x⁺ − x‖²`; zero gives plain monotone acceptance.
    pub sufficient_decrease: T,
}

impl<T: Scalar> Default for LineSearchConfig<T> {
    fn default() -> Self {
        Self {
            initial_step: T::one(),
            shrink: T::lit(0.5),
            max_backtracks: 50,
            sufficient_decrease: T::lit(1e-4),
        }
    }
}

impl<T: Scalar> LineSearchConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > T::zero())
            || !(self.shrink > T::zero() && self.shrink < T::one())
            || self.max_backtracks == 0
            || self.sufficient_decrease < T::zero()
        {
            return Err(MkcError::Config(format!("invalid line search settings: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T: Scalar> {
    pub point: DMatrix<T>,
    /// Accepted step size; zero when every trial was rejected.
    pub step: T,
    /// Composite objective at `point`.
    pub objective: T,
    pub trials: usize,
}

/// One proximal-gradient step `x⁺ = prox(x − λ g, λ)` with backtracking on λ.
///
/// `objective` evaluates the composite objective (smooth part plus
/// regulariser) and `current` is its value at `x`. The largest λ of the
/// schedule `initial_step · shrinkᵏ` meeting the decrease condition wins; if
/// none does, `x` is returned unchanged with step zero. Non-finite trial
/// values count as rejections.
pub fn backtracking_step<T, F, P>(
    mut objective: F,
    x: &DMatrix<T>,
    current: T,
    grad: &DMatrix<T>,
    mut prox: P,
    cfg: &LineSearchConfig<T>,
) -> Result<StepOutcome<T>>
where
    T: Scalar,
    F: FnMut(&DMatrix<T>) -> T,
    P: FnMut(DMatrix<T>, T) -> DMatrix<T>,
{
    if !current.is_finite_value() {
        return Err(MkcError::NonFinite(format!("objective at the current point is {current}")));
    }
    let mut step = cfg.initial_step;
    for trial in 1..=cfg.max_backtracks {
        let candidate = prox(x - grad * step, step);
        let value = objective(&candidate);
        if value.is_finite_value() {
            let slack = if cfg.sufficient_decrease > T::zero() {
                cfg.sufficient_decrease * (&candidate - x).norm_squared() / (T::lit(2.0) * step)
            } else {
                T::zero()
            };
            if value <= current - slack {
                return Ok(StepOutcome {
                    point: candidate,
                    step,
                    objective: value,
                    trials: trial,
                });
            }
        }
        step *= cfg.shrink;
    }
    Ok(StepOutcome {
        point: x.clone(),
        step: T::zero(),
        objective: current,
        trials: cfg.max_backtracks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn zero_gradient_applies_prox_only() {
        let x = scalar(2.0);
        let out = backtracking_step(
            |p: &DMatrix<f64>| p[(0, 0)].abs(),
            &x,
            2.0,
            &scalar(0.0),
            |p, step| p.map(|v| v.signum() * (v.abs() - step).max(0.0)),
            &LineSearchConfig::default(),
        )
        .unwrap();
        assert_eq!(out.step, 1.0);
        assert_eq!(out.point, scalar(1.0));
    }

    #[test]
    fn quadratic_descends() {
        let f = |p: &DMatrix<f64>| p[(0, 0)] * p[(0, 0)];
        let x = scalar(1.0);
        let out = backtracking_step(f, &x, 1.0, &scalar(2.0), |p, _| p, &LineSearchConfig::default()).unwrap();
        assert!(out.point[(0, 0)] < 1.0);
        assert!(out.objective < 1.0);
        assert_eq!(out.step, 0.5);
    }

    #[test]
    fn nothing_acceptable_returns_the_input() {
        let x = scalar(1.0);
        let f = |p: &DMatrix<f64>| if p[(0, 0)] == 1.0 { 1.0 } else { f64::INFINITY };
        let out = backtracking_step(f, &x, 1.0, &scalar(1.0), |p, _| p, &LineSearchConfig::default()).unwrap();
        assert_eq!(out.point, x);
        assert_eq!(out.step, 0.0);
    }

    #[test]
    fn non_finite_current_value_is_an_error() {
        let x = scalar(1.0);
        let r = backtracking_step(|_: &DMatrix<f64>| 0.0, &x, f64::NAN, &scalar(1.0), |p, _| p, &LineSearchConfig::default());
        assert!(r.is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LineSearchConfig::<f64>::default().validate().is_ok());
        let bad = LineSearchConfig {
            shrink: 1.0,
            ..LineSearchConfig::<f64>::default()
        };
        assert!(bad.validate().is_err());
    }
}
