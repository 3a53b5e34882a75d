use nalgebra::DMatrix;

use crate::scalar::Scalar;

/// Group soft-threshold: the minimiser of `½‖x − delta‖² + threshold·‖x‖₂`.
///
/// Returns `max(0, 1 − threshold/‖delta‖) · delta`, and the zero vector when
/// `‖delta‖ ≤ threshold` (including `delta = 0`).
pub fn prox_l21_row<T: Scalar>(delta: &[T], threshold: T) -> Vec<T> {
    let norm = delta.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt();
    if norm <= threshold || norm == T::zero() {
        return vec![T::zero(); delta.len()];
    }
    let factor = T::one() - threshold / norm;
    delta.iter().map(|v| *v * factor).collect()
}

/// Group soft-threshold in a diagonal metric: the minimiser of
/// `½ Σ_j d_j (x_j − z_j)² + threshold·‖x‖₂` for positive weights `d`.
///
/// With equal weights `d_j = 1/λ` this is `prox_l21_row(z, λ·threshold)`.
pub fn prox_l21_row_scaled<T: Scalar>(z: &[T], d: &[T], threshold: T) -> Vec<T> {
    debug_assert_eq!(z.len(), d.len());
    let dz: Vec<T> = z.iter().zip(d).map(|(z, d)| *z * *d).collect();
    let dz_norm2 = dz.iter().fold(T::zero(), |acc, v| acc + *v * *v);
    if dz_norm2.sqrt() <= threshold || dz_norm2 == T::zero() {
        return vec![T::zero(); z.len()];
    }
    if threshold == T::zero() {
        return z.to_vec();
    }
    // Entries sharing a metric weight contribute through their summed squares.
    let mut groups: Vec<(T, T)> = Vec::new();
    for (v, d) in dz.iter().zip(d) {
        match groups.iter_mut().find(|(g, _)| *g == *d) {
            Some((_, s)) => *s += *v * *v,
            None => groups.push((*d, *v * *v)),
        }
    }
    // r = ‖x‖ solves Σ_j (d_j z_j / (d_j r + t))² = 1; the left side is convex
    // and decreasing in r, so Newton from r = 0 increases monotonically to the root.
    let mut r = T::zero();
    for _ in 0..100 {
        let mut f = -T::one();
        let mut df = T::zero();
        for (d, s) in &groups {
            let den = *d * r + threshold;
            let q = *s / (den * den);
            f += q;
            df -= T::lit(2.0) * q * *d / den;
        }
        let next = r - f / df;
        if !(next > r) || next - r <= T::lit(f64::EPSILON) * next {
            r = r.max(next);
            break;
        }
        r = next;
    }
    z.iter()
        .zip(d)
        .map(|(z, d)| *z * (*d * r) / (*d * r + threshold))
        .collect()
}

/// Applies [`prox_l21_row`] in place to every row `i` of `m` with threshold
/// `thresholds[i]`.
pub fn prox_l21_rows<T: Scalar>(m: &mut DMatrix<T>, thresholds: &[T]) {
    debug_assert_eq!(m.nrows(), thresholds.len());
    for (i, &t) in thresholds.iter().enumerate() {
        let mut row = m.row_mut(i);
        let norm = row.norm();
        if norm <= t || norm == T::zero() {
            row.fill(T::zero());
        } else {
            row *= T::one() - t / norm;
        }
    }
}

/// `Σᵢ wᵢ ‖row_i‖₂`.
pub fn l21_norm_rows<T: Scalar>(m: &DMatrix<T>, weights: &[T]) -> T {
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != T::zero())
        .fold(T::zero(), |acc, (i, w)| acc + *w * m.row(i).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(prox_l21_row(&[3.0, 4.0], 5.0), vec![0.0, 0.0]);
        assert_eq!(prox_l21_row(&[3.0, 4.0], 2.5), vec![1.5, 2.0]);
        assert_eq!(prox_l21_row(&[0.0, 0.0], 0.0), vec![0.0, 0.0]);
        assert_eq!(prox_l21_row(&[0.0, 0.0], 3.0), vec![0.0, 0.0]);
        assert_eq!(prox_l21_row(&[1.0f32, 0.0], 0.0), vec![1.0, 0.0]);
    }

    #[test]
    fn row_variant_matches_vector_variant() {
        let mut m = DMatrix::from_row_slice(3, 2, &[3.0, 4.0, 0.3, 0.4, -1.0, 2.0]);
        let expected: Vec<Vec<f64>> = (0..3)
            .map(|i| prox_l21_row(&[m[(i, 0)], m[(i, 1)]], 1.0))
            .collect();
        prox_l21_rows(&mut m, &[1.0, 1.0, 1.0]);
        for i in 0..3 {
            assert!((m[(i, 0)] - expected[i][0]).abs() < 1e-15);
            assert!((m[(i, 1)] - expected[i][1]).abs() < 1e-15);
        }
        assert_eq!(l21_norm_rows(&DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]), &[1.0, 1.0]), 5.0);
    }

    #[test]
    fn scaled_variant_with_equal_weights() {
        let z = [3.0f64, -1.0, 2.0];
        let a = prox_l21_row_scaled(&z, &[2.0; 3], 1.5);
        let b = prox_l21_row(&z, 0.75);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        assert_eq!(prox_l21_row_scaled(&z, &[1.0, 1.0, 1.0], 10.0), vec![0.0; 3]);
    }

    #[test]
    fn scaled_variant_satisfies_optimality() {
        let z = [1.0f64, -2.0, 0.5, 3.0];
        let d = [0.1, 5.0, 1.0, 40.0];
        let t = 2.0;
        let x = prox_l21_row_scaled(&z, &d, t);
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm > 0.0);
        for j in 0..4 {
            let g = d[j] * (x[j] - z[j]) + t * x[j] / norm;
            assert!(g.abs() < 1e-12, "stationarity residual {g}");
        }
    }

    proptest! {
        #[test]
        fn shrinkage_never_grows_the_row(v in prop::collection::vec(-5.0f64..5.0, 1..6), t in 0.0f64..4.0) {
            let out = prox_l21_row(&v, t);
            let n_in: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n_out: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(n_out <= n_in + 1e-12);
            prop_assert!((n_out - (n_in - t).max(0.0)).abs() < 1e-9);
        }
    }
}
