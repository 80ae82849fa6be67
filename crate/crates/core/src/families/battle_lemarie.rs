//! Battle–Lemarié spline scaling functions.
//!
//! The order-`k` cardinal B-spline is orthonormalised in frequency:
//! `φ̂ = B̂_k / sqrt(A)` with `A(ξ) = Σ_n a_n e^{-inξ}` the symbol of the
//! B-spline autocorrelation. Hence `φ = Σ_l c_l B_k(x - l)` where `c_l` are the
//! Fourier coefficients of `A^{-1/2}`, and the lowpass symbol is
//! `m0(ω) = ((1 + e^{-iω}) / 2)^k sqrt(A(ω) / A(2ω))`.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::bspline::{autocorrelation, cardinal_bspline};
use crate::error::{Error, Result};
use crate::families::filter::FilterPair;
use crate::grid::{DecayHint, DyadicGrid, Interpolation, SampledFunction};
use crate::quadrature::fit_line;
use crate::scalar::Real;

/// Length of the periodic frequency grid used for all coefficient sequences.
pub const SPECTRAL_GRID: usize = 1 << 14;

/// Ingredients of an order-`k` Battle–Lemarié family.
#[derive(Clone, Debug)]
pub struct BattleLemarie<T: Real> {
    pub order: usize,
    pub phi: SampledFunction<T>,
    pub filter: FilterPair<T>,
    /// Exponential decay rate of the spline coefficients `c_l`.
    pub decay_rate: T,
}

/// `A(ω) = a_0 + 2 Σ_{n≥1} a_n cos(nω)`.
pub fn autocorrelation_symbol<T: Real>(a: &[T], omega: T) -> T {
    a.iter().enumerate().fold(T::zero(), |acc, (n, &an)| {
        if n == 0 {
            acc + an
        } else {
            acc + T::lit(2.0) * an * (T::from_usize(n).unwrap() * omega).cos()
        }
    })
}

/// Fourier coefficients `x_n = (1/N) Σ_j s(ω_j) e^{i n ω_j}` for
/// `n ∈ [-N/2, N/2)`, returned with index `n + N/2`.
fn fourier_coefficients<T: Real>(symbol: impl Fn(T) -> Complex<T>) -> Vec<Complex<T>> {
    let n = SPECTRAL_GRID;
    let step = T::lit(2.0) * T::PI() / T::from_usize(n).unwrap();
    let mut buf: Vec<Complex<T>> = (0..n)
        .map(|j| symbol(T::from_usize(j).unwrap() * step))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = T::one() / T::from_usize(n).unwrap();
    let half = n / 2;
    (0..n).map(|i| buf[(i + half) % n] * scale).collect()
}

/// Indices (relative to the centred layout) of the first and last entries
/// whose magnitude reaches `threshold`.
fn significant_span<T: Real>(values: &[T], threshold: T) -> (usize, usize) {
    let first = values
        .iter()
        .position(|v| v.abs() >= threshold)
        .unwrap_or(0);
    let last = values
        .iter()
        .rposition(|v| v.abs() >= threshold)
        .unwrap_or(0);
    (first, last)
}

/// Builds the order-`k` family, `k ∈ 1..=4`, tabulated at `level`.
pub fn battle_lemarie<T: Real>(order: usize, level: i32) -> Result<BattleLemarie<T>> {
    if !(1..=4).contains(&order) {
        return Err(Error::ParamOutOfRange {
            family: "battle_lemarie",
            param: order as i64,
            range: "1..=4",
        });
    }
    if order == 1 {
        // A ≡ 1: the box function and the Haar filter
        let t = T::FRAC_1_SQRT_2();
        return Ok(BattleLemarie {
            order,
            phi: super::haar_phi(level)?,
            filter: FilterPair::conjugate_mirror(vec![t, t], 0)?,
            decay_rate: T::infinity(),
        });
    }
    let a = autocorrelation::<T>(order);
    let half = SPECTRAL_GRID as i64 / 2;

    let c: Vec<T> = fourier_coefficients(|w: T| {
        Complex::new(autocorrelation_symbol(&a, w).sqrt().recip(), T::zero())
    })
    .into_iter()
    .map(|z| z.re)
    .collect();
    let c_max = c.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let (c_first, c_last) = significant_span(&c, c_max * T::tol(1e-13));
    let l_min = c_first as i64 - half;
    let l_max = c_last as i64 - half;
    let coeffs = &c[c_first..=c_last];

    // near a simple zero of A the symbol behaves like (ω - ω0)^{-1/2}, so
    // c_l ~ l^{-1/2} e^{-a l}; the prefactor is removed before the fit
    let decay_rate = {
        let centre = (-l_min) as usize;
        let (xs, ys): (Vec<T>, Vec<T>) = (1..=(l_max as usize))
            .filter_map(|l| {
                let v = coeffs[centre + l].abs();
                let lf = T::from_usize(l).unwrap();
                (v > c_max * T::tol(1e-11)).then(|| (lf, (v * lf.sqrt()).ln()))
            })
            .unzip();
        -fit_line(&xs, &ys)?.slope
    };

    let kf = order as i64;
    let grid = DyadicGrid::new(T::from_int(l_min), T::from_int(l_max + kf), level)?;
    let values: Vec<T> = grid
        .points()
        .map(|x| {
            let cell = x.floor().to_i64().unwrap();
            ((cell - kf + 1).max(l_min)..=cell.min(l_max))
                .map(|l| coeffs[(l - l_min) as usize] * cardinal_bspline(order, x - T::from_int(l)))
                .sum()
        })
        .collect();
    let phi = SampledFunction::new(
        grid,
        values,
        DecayHint::Exponential { rate: decay_rate },
        Interpolation::Linear,
    )?;

    let h: Vec<T> = fourier_coefficients(|w: T| {
        let base =
            (Complex::new(T::one(), T::zero()) + Complex::from_polar(T::one(), -w)) * T::lit(0.5);
        let ratio = autocorrelation_symbol(&a, w) / autocorrelation_symbol(&a, w + w);
        base.powi(order as i32) * ratio.sqrt() * T::SQRT_2()
    })
    .into_iter()
    .map(|z| z.re)
    .collect();
    let (h_first, h_last) = significant_span(&h, T::tol(1e-16));
    let filter = FilterPair::conjugate_mirror(h[h_first..=h_last].to_vec(), h_first as i64 - half)?;

    Ok(BattleLemarie {
        order,
        phi,
        filter,
        decay_rate,
    })
}
