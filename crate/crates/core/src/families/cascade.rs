//! Cascade iteration of the refinement relation and the two-scale wavelet.

use crate::error::{Error, Result};
use crate::families::filter::FilterPair;
use crate::grid::{DecayHint, DyadicGrid, SampledFunction};
use crate::scalar::Real;

/// Tabulates `φ = √2 Σ h_k φ(2x - k)` on the level-`level` grid over the
/// filter's support by fixed-point iteration from the indicator of `[0, 1)`.
/// Stops once successive iterates differ by less than `1e-9` in sup norm.
pub fn cascade_scaling<T: Real>(
    filter: &FilterPair<T>,
    iterations: usize,
    level: i32,
) -> Result<SampledFunction<T>> {
    cascade_to_tolerance(filter, iterations, level, T::tol(1e-9))
}

pub(crate) fn cascade_to_tolerance<T: Real>(
    filter: &FilterPair<T>,
    iterations: usize,
    level: i32,
    tolerance: T,
) -> Result<SampledFunction<T>> {
    filter.check()?;
    if iterations == 0 {
        return Err(Error::InvalidArgument(
            "cascade needs at least one iteration".into(),
        ));
    }
    if level < 3 {
        return Err(Error::GridTooCoarse(format!(
            "cascade level {level} is below the minimum of 3"
        )));
    }
    let (lo, hi) = filter.index_range();
    let grid = DyadicGrid::new(T::from_int(lo), T::from_int(hi), level)?;
    let n = grid.count();
    let per_unit = 1usize << level;
    let start = if lo <= 0 && hi >= 1 {
        (-lo) as usize * per_unit
    } else {
        0
    };
    let mut current = vec![T::zero(); n];
    for v in current.iter_mut().skip(start).take(per_unit) {
        *v = T::one();
    }
    let taps: Vec<T> = filter.lowpass().iter().map(|&h| h * T::SQRT_2()).collect();
    let mut next = vec![T::zero(); n];
    let mut residual = T::infinity();
    for _ in 0..iterations {
        for (i, out) in next.iter_mut().enumerate() {
            // φ(2x_i - k) sits at index 2i - t 2^L for tap t
            let mut acc = T::zero();
            for (t, &h) in taps.iter().enumerate() {
                let shift = t * per_unit;
                if 2 * i >= shift {
                    let idx = 2 * i - shift;
                    if idx < n {
                        acc += h * current[idx];
                    }
                }
            }
            *out = acc;
        }
        residual = next
            .iter()
            .zip(&current)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        std::mem::swap(&mut current, &mut next);
        if residual < tolerance {
            return finish(grid, current, tolerance);
        }
    }
    Err(Error::NonConvergence {
        what: "cascade iteration",
        iterations,
        residual: residual.to_f64_lossy(),
    })
}

fn finish<T: Real>(
    grid: DyadicGrid<T>,
    mut values: Vec<T>,
    tolerance: T,
) -> Result<SampledFunction<T>> {
    let n = values.len();
    // a compactly supported refinable function vanishes at its support ends
    // unless it is the box function; the iteration only approaches that zero
    let snap = tolerance * T::lit(1e3);
    for i in [0, n - 1] {
        if values[i].abs() < snap {
            values[i] = T::zero();
        }
    }
    let decay = if values[0] == T::zero() && values[n - 1] == T::zero() {
        DecayHint::Compact
    } else {
        DecayHint::None
    };
    SampledFunction::new(grid, values, decay, crate::grid::Interpolation::Linear)
}

/// `ψ(x) = √2 Σ g_k φ(2x - k)` tabulated at the level of `phi`.
pub fn derive_wavelet<T: Real>(
    filter: &FilterPair<T>,
    phi: &SampledFunction<T>,
) -> Result<SampledFunction<T>> {
    let level = phi.grid().level();
    if level < 1 {
        return Err(Error::GridTooCoarse(
            "derive_wavelet needs phi tabulated at level >= 1 to evaluate phi(2x - k)".into(),
        ));
    }
    let (a, b) = phi.support();
    let (lo, hi) = filter.index_range();
    let half = T::lit(0.5);
    let grid = DyadicGrid::new(
        (a + T::from_int(lo)) * half,
        (b + T::from_int(hi)) * half,
        level,
    )?;
    let taps: Vec<(T, T)> = filter
        .highpass()
        .iter()
        .enumerate()
        .map(|(t, &g)| (T::from_int(lo + t as i64), g * T::SQRT_2()))
        .collect();
    let two = T::lit(2.0);
    let mut values: Vec<T> = grid
        .points()
        .map(|x| taps.iter().map(|&(k, g)| g * phi.eval(two * x - k)).sum())
        .collect();
    let n = values.len();
    let decay = match phi.decay() {
        DecayHint::Compact => {
            values[0] = T::zero();
            values[n - 1] = T::zero();
            DecayHint::Compact
        }
        other => other,
    };
    SampledFunction::new(grid, values, decay, phi.interpolation())
}
