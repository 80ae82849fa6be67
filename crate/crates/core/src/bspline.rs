//! Cardinal B-splines on the integer knots `0, 1, ..., order`.

use crate::scalar::Real;

/// `B_order(x)`, supported on `[0, order)`, via the Cox–de Boor recursion.
/// Order 1 is the indicator of `[0, 1)`.
pub fn cardinal_bspline<T: Real>(order: usize, x: T) -> T {
    let kf = T::from_usize(order).unwrap();
    if x < T::zero() || x >= kf {
        return T::zero();
    }
    let cell = x.floor().to_usize().unwrap_or(0);
    // values[i] holds B_m(x - i) for the current order m
    let mut values = vec![T::zero(); order + 1];
    values[cell] = T::one();
    for m in 2..=order {
        let mf = T::from_usize(m).unwrap();
        let mut next = vec![T::zero(); order + 1];
        for i in 0..=order {
            let t = x - T::from_usize(i).unwrap();
            // B_m(t) = (t B_{m-1}(t) + (m - t) B_{m-1}(t - 1)) / (m - 1)
            next[i] = (t * values[i] + (mf - t) * b_shift(&values, i)) / (mf - T::one());
        }
        values = next;
    }
    values[0]
}

#[inline]
fn b_shift<T: Real>(values: &[T], i: usize) -> T {
    values.get(i + 1).copied().unwrap_or_else(T::zero)
}

/// `∫ B_k(x) B_k(x - n) dx = B_{2k}(k + n)` for `|n| < k`.
pub fn autocorrelation<T: Real>(order: usize) -> Vec<T> {
    (0..order)
        .map(|n| cardinal_bspline::<T>(2 * order, T::from_usize(order + n).unwrap()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders_match_closed_forms() {
        for i in 0..40 {
            let x = -0.5 + i as f64 * 0.1;
            let hat = if (0.0..1.0).contains(&x) {
                x
            } else if (1.0..2.0).contains(&x) {
                2.0 - x
            } else {
                0.0
            };
            assert!((cardinal_bspline(2, x) - hat).abs() < 1e-14, "x={x}");
            let quad = if (0.0..1.0).contains(&x) {
                x * x / 2.0
            } else if (1.0..2.0).contains(&x) {
                (-2.0 * x * x + 6.0 * x - 3.0) / 2.0
            } else if (2.0..3.0).contains(&x) {
                (3.0 - x) * (3.0 - x) / 2.0
            } else {
                0.0
            };
            assert!((cardinal_bspline(3, x) - quad).abs() < 1e-14, "x={x}");
        }
        assert_eq!(cardinal_bspline(1, 0.0), 1.0);
        assert_eq!(cardinal_bspline(1, 1.0), 0.0);
    }

    #[test]
    fn partition_of_unity() {
        for order in 1..=6 {
            for i in 0..20 {
                let x = 0.05 * i as f64 + 7.0;
                let s: f64 = (0..20).map(|l| cardinal_bspline(order, x - l as f64)).sum();
                assert!((s - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn hat_autocorrelation() {
        let a = autocorrelation::<f64>(2);
        assert!((a[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((a[1] - 1.0 / 6.0).abs() < 1e-15);
    }
}
