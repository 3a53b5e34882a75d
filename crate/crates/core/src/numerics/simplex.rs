use crate::scalar::Scalar;

/// Euclidean projection onto the probability simplex `{x ≥ 0, Σx = 1}`.
///
/// Sort-based threshold search: `x = max(v − θ, 0)` with the unique `θ`
/// making the result sum to one.
pub fn project_simplex<T: Scalar>(v: &[T]) -> Vec<T> {
    assert!(!v.is_empty(), "cannot project an empty vector onto the simplex");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = T::zero();
    let mut theta = T::zero();
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - T::one()) / T::from_usize(k + 1).unwrap();
        if u - candidate > T::zero() {
            theta = candidate;
        }
    }
    let mut out: Vec<T> = v.iter().map(|&x| (x - theta).max(T::zero())).collect();
    // Remove the rounding drift of the cumulative sum.
    let total = out.iter().fold(T::zero(), |a, b| a + *b);
    if total > T::zero() {
        for x in &mut out {
            *x /= total;
        }
    }
    out
}
