//! Conjugate-mirror filter pairs and the Daubechies filter solve.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::scalar::Real;

/// Lowpass/highpass taps of an orthonormal two-scale relation. `lowpass[i]`
/// is `h_{offset + i}`; the highpass taps share the same index range and are
/// the conjugate mirror `g_i = (-1)^i h_{M-1-i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FilterPair<T: Real> {
    lowpass: Vec<T>,
    highpass: Vec<T>,
    offset: i64,
}

impl<T: Real> FilterPair<T> {
    /// Builds the pair from lowpass taps and validates orthonormality.
    /// Odd-length inputs are padded with a trailing zero tap so that the
    /// mirror keeps an odd shift.
    pub fn conjugate_mirror(mut lowpass: Vec<T>, offset: i64) -> Result<Self> {
        if lowpass.is_empty() {
            return Err(Error::FilterNotOrthonormal("empty filter".into()));
        }
        if lowpass.len() % 2 == 1 {
            lowpass.push(T::zero());
        }
        let m = lowpass.len();
        let highpass = (0..m)
            .map(|i| {
                let v = lowpass[m - 1 - i];
                if i % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let pair = Self {
            lowpass,
            highpass,
            offset,
        };
        pair.check()?;
        Ok(pair)
    }

    pub fn lowpass(&self) -> &[T] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[T] {
        &self.highpass
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    /// Global index range `offset ..= offset + M - 1`.
    pub fn index_range(&self) -> (i64, i64) {
        (self.offset, self.offset + self.lowpass.len() as i64 - 1)
    }

    /// Largest violation of `Σ h = √2` and `Σ h_k h_{k+2m} = δ_m`.
    pub fn orthonormality_defect(&self) -> T {
        let h = &self.lowpass;
        let sum: T = h.iter().copied().sum();
        let mut worst = (sum - T::SQRT_2()).abs();
        for m in 0..h.len().div_ceil(2) {
            let s: T = (0..h.len().saturating_sub(2 * m))
                .map(|k| h[k] * h[k + 2 * m])
                .sum();
            let target = if m == 0 { T::one() } else { T::zero() };
            worst = worst.max((s - target).abs());
        }
        worst
    }

    pub fn check(&self) -> Result<()> {
        let defect = self.orthonormality_defect();
        if defect > T::tol(1e-12) {
            return Err(Error::FilterNotOrthonormal(format!(
                "defect {defect:e} exceeds 1e-12"
            )));
        }
        Ok(())
    }

    /// `m0(ω) = 2^{-1/2} Σ h_k e^{-ikω}`.
    pub fn lowpass_symbol(&self, omega: T) -> Complex<T> {
        symbol(&self.lowpass, self.offset, omega) / T::SQRT_2()
    }

    /// `2^{-1/2} Σ g_k e^{-ikω}`.
    pub fn highpass_symbol(&self, omega: T) -> Complex<T> {
        symbol(&self.highpass, self.offset, omega) / T::SQRT_2()
    }
}

fn symbol<T: Real>(taps: &[T], offset: i64, omega: T) -> Complex<T> {
    taps.iter()
        .enumerate()
        .fold(Complex::new(T::zero(), T::zero()), |acc, (i, &h)| {
            let k = T::from_int(offset + i as i64);
            acc + Complex::from_polar(h, -k * omega)
        })
}

/// Daubechies extremal-phase filter with `n` vanishing moments (length `2n`).
///
/// An initial guess comes from spectrally factoring the halfband polynomial
/// `Σ_{k<n} C(n-1+k, k) y^k`; Newton iteration on the orthonormality and
/// vanishing-moment equations then polishes the taps.
pub fn daubechies<T: Real>(n: usize) -> Result<FilterPair<T>> {
    if !(1..=10).contains(&n) {
        return Err(Error::ParamOutOfRange {
            family: "daubechies",
            param: n as i64,
            range: "1..=10",
        });
    }
    if n == 1 {
        let t = T::FRAC_1_SQRT_2();
        return FilterPair::conjugate_mirror(vec![t, t], 0);
    }
    let guess = spectral_factor::<T>(n)?;
    let taps = newton_polish(n, guess)?;
    FilterPair::conjugate_mirror(taps, 0)
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn spectral_factor<T: Real>(n: usize) -> Result<Vec<T>> {
    // halfband polynomial coefficients, lowest degree first
    let q: Vec<T> = (0..n as u64)
        .map(|k| T::lit(binomial(n as u64 - 1 + k, k)))
        .collect();
    let y_roots = polynomial_roots(&q)?;
    let one = Complex::new(T::one(), T::zero());
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    // polynomial in w = e^{-iω}, lowest degree first
    let mut poly = vec![one];
    for _ in 0..n {
        poly = poly_mul(&poly, &[one, one]);
    }
    for y in y_roots {
        // z + 1/z = 2 - 4y
        let b = Complex::new(two, T::zero()) - y * four;
        let disc = (b * b - Complex::new(four, T::zero())).sqrt();
        let z1 = (b + disc) / two;
        let z2 = (b - disc) / two;
        let z = if z1.norm() < z2.norm() { z1 } else { z2 };
        poly = poly_mul(&poly, &[-z, one]);
    }
    let mut taps: Vec<T> = poly.iter().map(|c| c.re).collect();
    taps.reverse();
    let s: T = taps.iter().copied().sum();
    Ok(taps.into_iter().map(|t| t * T::SQRT_2() / s).collect())
}

fn poly_mul<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Roots of a real polynomial (coefficients lowest degree first) by the
/// Aberth–Ehrlich iteration.
pub(crate) fn polynomial_roots<T: Real>(coeffs: &[T]) -> Result<Vec<Complex<T>>> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let c: Vec<Complex<T>> = coeffs
        .iter()
        .map(|&v| Complex::new(v / lead, T::zero()))
        .collect();
    let eval = |z: Complex<T>| -> (Complex<T>, Complex<T>) {
        let mut p = Complex::new(T::zero(), T::zero());
        let mut dp = Complex::new(T::zero(), T::zero());
        for &a in c.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    };
    // Cauchy bound for the initial circle
    let radius = T::one() + c[..deg].iter().fold(T::zero(), |m, a| m.max(a.norm()));
    let mut z: Vec<Complex<T>> = (0..deg)
        .map(|k| {
            let angle = T::lit(2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64);
            Complex::from_polar(radius * T::lit(0.5), angle)
        })
        .collect();
    for _ in 0..500 {
        let mut moved = T::zero();
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == T::zero() {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex::new(T::zero(), T::zero());
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    s += Complex::new(T::one(), T::zero()) / (z[i] - zj);
                }
            }
            let step = ratio / (Complex::new(T::one(), T::zero()) - ratio * s);
            z[i] -= step;
            moved = moved.max(step.norm() / z[i].norm().max(T::one()));
        }
        if moved < T::epsilon() * T::lit(4.0) {
            return Ok(z);
        }
    }
    Err(Error::NonConvergence {
        what: "polynomial root finding",
        iterations: 500,
        residual: f64::NAN,
    })
}

/// Newton iteration on the `2n` equations: `Σh = √2`, `Σ h_k h_{k+2m} = δ_m`
/// for `m < n`, and `Σ (-1)^k (k-c)^p h_k = 0` for `1 <= p < n`.
fn newton_polish<T: Real>(n: usize, mut h: Vec<T>) -> Result<Vec<T>> {
    let len = 2 * n;
    let centre = T::lit((len as f64 - 1.0) / 2.0);
    let scale = T::lit(len as f64);
    let t = |k: usize| (T::from_usize(k).unwrap() - centre) / scale;
    let sign = |k: usize| {
        if k.is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        }
    };
    let residual = |h: &[T]| -> Vec<T> {
        let mut r = Vec::with_capacity(len);
        r.push(h.iter().copied().sum::<T>() - T::SQRT_2());
        for m in 0..n {
            let s: T = (0..len - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
            r.push(if m == 0 { s - T::one() } else { s });
        }
        for p in 1..n {
            r.push((0..len).map(|k| sign(k) * t(k).powi(p as i32) * h[k]).sum());
        }
        r
    };
    let mut best = T::infinity();
    for _ in 0..30 {
        let r = residual(&h);
        let norm = r.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let stalled = !(norm < best) && best < T::tol(1e-13);
        if norm < T::epsilon() * T::lit(8.0) || stalled {
            break;
        }
        best = best.min(norm);
        let mut jac = vec![T::zero(); len * len];
        jac[..len].fill(T::one());
        for m in 0..n {
            let row = 1 + m;
            for i in 0..len {
                let mut d = T::zero();
                if i + 2 * m < len {
                    d += h[i + 2 * m];
                }
                if i >= 2 * m {
                    d += h[i - 2 * m];
                }
                jac[row * len + i] = d;
            }
        }
        for p in 1..n {
            let row = n + p;
            for i in 0..len {
                jac[row * len + i] = sign(i) * t(i).powi(p as i32);
            }
        }
        let step = solve_dense(jac, r.iter().map(|v| -*v).collect())?;
        for (hi, s) in h.iter_mut().zip(step) {
            *hi += s;
        }
    }
    Ok(h)
}
