//! Fourier spectra of scaling functions and wavelets, and the
//! homogeneous-Sobolev criterion integrals near the origin.
//!
//! Convention: the unitary transform `F(ξ) = (2π)^{-1/2} ∫ f(x) e^{-iξx} dx`,
//! so that `2π |φ̂(0)|² = 1` for every scaling function.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bspline::autocorrelation;
use crate::error::{Error, Result};
use crate::export::{Cell, CsvTable};
use crate::families::battle_lemarie::autocorrelation_symbol;
use crate::families::{FamilyName, FilterPair, MraFamily};
use crate::grid::{Interpolation, SampledFunction};
use crate::scalar::{sin_over, Real};

/// Smallest `|ξ|` the criteria integrate down to.
pub const XI_MIN: f64 = 1e-4;
/// Simpson panels per dyadic shell.
pub const SHELL_PANELS: usize = 16;
/// A shell-to-shell ratio above this counts as non-decaying.
pub const DIVERGENCE_RATIO: f64 = 0.95;
/// Periodisation cut-off `|m| <= 64` in closed-form spline spectra.
pub const PERIODIZATION_TERMS: i64 = 64;
/// Bisection interval for the critical order.
pub const S_RANGE: (f64, f64) = (0.1, 8.0);
/// Bisection steps after the two endpoint verdicts.
pub const BISECTION_STEPS: usize = 8;

/// A power spectrum `|F(ξ)|²` of a real function under the unitary convention.
pub trait Spectrum<T: Real>: Sync {
    fn power(&self, xi: T) -> T;

    /// `1 - 2π |F(ξ)|²`; implementations override this where the difference
    /// can be formed without cancellation.
    fn unit_defect(&self, xi: T) -> T {
        T::one() - T::lit(2.0) * T::PI() * self.power(xi)
    }

    /// Smallest `|ξ| > 0` at which the spectrum is resolved.
    fn resolution(&self) -> T;
}

/// Multiplier relating a sample sum to the transform of the reconstruction:
/// `sinc²(ξh/2)` for linear interpolation, `e^{-iξh/2} sinc(ξh/2)` for steps.
fn reconstruction_factor<T: Real>(interp: Interpolation, xi: T, h: T) -> Complex<T> {
    let half = xi * h * T::lit(0.5);
    match interp {
        Interpolation::Linear => Complex::new(sin_over(half).powi(2), T::zero()),
        Interpolation::Step => Complex::from_polar(sin_over(half), -half),
    }
}

/// Spectrum tabulated on a uniform symmetric frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SampledSpectrum<T: Real> {
    pub xi: Vec<T>,
    pub re: Vec<T>,
    pub im: Vec<T>,
    pub convention: String,
}

pub const UNITARY_CONVENTION: &str =
    "unitary: F(xi) = (2 pi)^(-1/2) * integral f(x) exp(-i xi x) dx";

impl<T: Real> SampledSpectrum<T> {
    pub fn value(&self, i: usize) -> Complex<T> {
        Complex::new(self.re[i], self.im[i])
    }

    pub fn spacing(&self) -> T {
        self.xi[1] - self.xi[0]
    }

    /// `Σ |F(ξ_m)|² Δξ`.
    pub fn energy(&self) -> T {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| *r * *r + *i * *i)
            .sum::<T>()
            * self.spacing()
    }

    /// `max_m |F(-ξ_m) - conj F(ξ_m)|`.
    pub fn hermitian_defect(&self) -> T {
        let n = self.xi.len();
        (0..n)
            .map(|i| (self.value(n - 1 - i) - self.value(i).conj()).norm())
            .fold(T::zero(), T::max)
    }

    /// Rows `xi, re, im`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["xi", "re", "im"]);
        for i in 0..self.xi.len() {
            t.push(vec![
                Cell::float(self.xi[i]),
                Cell::float(self.re[i]),
                Cell::float(self.im[i]),
            ]);
        }
        t
    }
}

impl<T: Real> Spectrum<T> for SampledSpectrum<T> {
    /// Linear interpolation of `|F|²` between grid frequencies; zero outside.
    fn power(&self, xi: T) -> T {
        let d = self.spacing();
        let pos = (xi - self.xi[0]) / d;
        let i = pos.floor();
        let Some(i) = i.to_usize().filter(|&i| i + 1 < self.xi.len()) else {
            return T::zero();
        };
        let t = pos - T::from_usize(i).unwrap();
        let p0 = self.value(i).norm_sqr();
        let p1 = self.value(i + 1).norm_sqr();
        p0 + (p1 - p0) * t
    }

    fn resolution(&self) -> T {
        self.spacing()
    }
}

/// Discrete transform of `f` zero-padded by `pad_factor`, evaluated on the
/// symmetric grid `ξ_m = 2π m / (N h)`, `|m| < N/2`. The phase of the grid
/// offset and the interpolation kernel are applied, so each value is the
/// transform of the tabulated reconstruction.
pub fn fourier_transform<T: Real>(
    f: &SampledFunction<T>,
    pad_factor: usize,
) -> Result<SampledSpectrum<T>> {
    if pad_factor < 4 {
        return Err(Error::InvalidArgument(format!(
            "pad factor must be at least 4, got {pad_factor}"
        )));
    }
    let grid = f.grid();
    if grid.count() < 2 {
        return Err(Error::GridTooCoarse(
            "a transform needs at least two samples".into(),
        ));
    }
    let n = (grid.count() * pad_factor).next_power_of_two();
    let h = grid.spacing();
    let mut buf: Vec<Complex<T>> = f
        .values()
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .chain(std::iter::repeat(Complex::new(T::zero(), T::zero())))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let dxi = T::lit(2.0) * T::PI() / (T::from_usize(n).unwrap() * h);
    let scale = h / (T::lit(2.0) * T::PI()).sqrt();
    let half = (n / 2) as i64;
    let mut out = SampledSpectrum {
        xi: Vec::with_capacity(n - 1),
        re: Vec::with_capacity(n - 1),
        im: Vec::with_capacity(n - 1),
        convention: UNITARY_CONVENTION.to_string(),
    };
    for m in (-half + 1)..half {
        let xi = T::from_int(m) * dxi;
        let raw = buf[m.rem_euclid(n as i64) as usize];
        let v = raw
            * Complex::from_polar(scale, -xi * grid.left())
            * reconstruction_factor(f.interpolation(), xi, h);
        out.xi.push(xi);
        out.re.push(v.re);
        out.im.push(v.im);
    }
    Ok(out)
}

/// Transform of a tabulated function evaluated directly at any `ξ`, so the
/// resolution near the origin is unlimited.
#[derive(Clone, Debug)]
pub struct SampleTransform<'a, T: Real> {
    f: &'a SampledFunction<T>,
}

impl<'a, T: Real> SampleTransform<'a, T> {
    pub fn new(f: &'a SampledFunction<T>) -> Self {
        Self { f }
    }

    pub fn value(&self, xi: T) -> Complex<T> {
        let grid = self.f.grid();
        let h = grid.spacing();
        let sum = self
            .f
            .values()
            .iter()
            .enumerate()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (i, &v)| {
                acc + Complex::from_polar(v, -xi * grid.point(i))
            });
        sum * (h / (T::lit(2.0) * T::PI()).sqrt())
            * reconstruction_factor(self.f.interpolation(), xi, h)
    }
}

impl<T: Real> Spectrum<T> for SampleTransform<'_, T> {
    fn power(&self, xi: T) -> T {
        self.value(xi).norm_sqr()
    }

    fn resolution(&self) -> T {
        T::zero()
    }
}

/// Spectra of an orthonormal filter family from the refinement products
/// `2π |φ̂(ξ)|² = Π_{j≥1} |m0(ξ/2^j)|²` and `|ψ̂(ξ)|² = |m0(ξ/2 + π)|² |φ̂(ξ/2)|²`.
///
/// The lowpass polynomial is split as `H(z) = (1 + z)^N L(z)` so that
/// `|m0(ω + π)|² = 2^{2N-1} sin^{2N}(ω/2) |L(-e^{-iω})|²` keeps full relative
/// precision near `ω = 0`.
#[derive(Clone, Debug)]
pub struct RefinementProduct<T: Real> {
    taps: Vec<T>,
    cofactor: Vec<T>,
    order: usize,
    wavelet: bool,
}

impl<T: Real> RefinementProduct<T> {
    /// `order` is the multiplicity of the zero of `m0` at `π`.
    pub fn new(filter: &FilterPair<T>, order: usize, wavelet: bool) -> Result<Self> {
        let taps = filter.lowpass().to_vec();
        if order == 0 || order >= taps.len() {
            return Err(Error::InvalidArgument(format!(
                "zero order {order} impossible for a filter of length {}",
                taps.len()
            )));
        }
        let scale: T = taps.iter().map(|h| h.abs()).sum();
        let mut cofactor = taps.clone();
        for step in 0..order {
            // synthetic division by (z + 1), coefficients in increasing powers
            let deg = cofactor.len() - 1;
            let mut quotient = vec![T::zero(); deg];
            let mut carry = T::zero();
            for i in (0..=deg).rev() {
                let c = cofactor[i] - carry;
                if i == 0 {
                    if c.abs() > scale * T::tol(1e-8) {
                        return Err(Error::InvalidArgument(format!(
                            "lowpass filter has no zero of order {} at pi (remainder {c:e} at step {step})",
                            order
                        )));
                    }
                } else {
                    quotient[i - 1] = c;
                    carry = c;
                }
            }
            cofactor = quotient;
        }
        Ok(Self {
            taps,
            cofactor,
            order,
            wavelet,
        })
    }

    fn poly(coeffs: &[T], z: Complex<T>) -> Complex<T> {
        coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
    }

    /// `|m0(ω)|²`.
    fn lowpass_power(&self, omega: T) -> T {
        Self::poly(&self.taps, Complex::from_polar(T::one(), -omega)).norm_sqr() * T::lit(0.5)
    }

    /// `|m0(ω + π)|²` without cancellation.
    fn highpass_power(&self, omega: T) -> T {
        let z = -Complex::from_polar(T::one(), -omega);
        let s = (T::lit(2.0) * (omega * T::lit(0.5)).sin()).powi(2 * self.order as i32);
        s * Self::poly(&self.cofactor, z).norm_sqr() * T::lit(0.5)
    }

    /// Dilation depth after which `|m0(ξ/2^j)|²` equals 1 to rounding.
    fn depth(xi: T) -> usize {
        let mut j = 0;
        let mut w = xi.abs();
        while w > T::lit(1e-10) && j < 200 {
            w *= T::lit(0.5);
            j += 1;
        }
        j + 1
    }

    /// `2π |φ̂(ξ)|²`.
    fn scaling_power(&self, xi: T) -> T {
        (1..=Self::depth(xi))
            .map(|j| self.lowpass_power(xi / T::pow2(j as i32)))
            .fold(T::one(), |acc, p| acc * p)
    }

    /// `1 - 2π |φ̂(ξ)|² = -expm1(Σ_j ln(1 - |m0(ξ/2^j + π)|²))`.
    fn scaling_defect(&self, xi: T) -> T {
        let log: T = (1..=Self::depth(xi))
            .map(|j| {
                let q = self.highpass_power(xi / T::pow2(j as i32));
                if q >= T::one() {
                    T::neg_infinity()
                } else {
                    (-q).ln_1p()
                }
            })
            .sum();
        -log.exp_m1()
    }
}

impl<T: Real> Spectrum<T> for RefinementProduct<T> {
    fn power(&self, xi: T) -> T {
        let two_pi = T::lit(2.0) * T::PI();
        if self.wavelet {
            let half = xi * T::lit(0.5);
            self.highpass_power(half) * self.scaling_power(half) / two_pi
        } else {
            self.scaling_power(xi) / two_pi
        }
    }

    fn unit_defect(&self, xi: T) -> T {
        if self.wavelet {
            T::one() - T::lit(2.0) * T::PI() * self.power(xi)
        } else {
            self.scaling_defect(xi)
        }
    }

    fn resolution(&self) -> T {
        T::zero()
    }
}

/// Closed-form Battle–Lemarié spectra: `2π |φ̂(ξ)|² = sinc^{2k}(ξ/2) / A(ξ)`
/// with `A` the B-spline autocorrelation symbol, and
/// `|m0(ω + π)|² = sin^{2k}(ω/2) A(ω + π) / A(2ω)`.
#[derive(Clone, Debug)]
pub struct SplineSpectrum<T: Real> {
    order: usize,
    a: Vec<T>,
    wavelet: bool,
}

impl<T: Real> SplineSpectrum<T> {
    pub fn new(order: usize, wavelet: bool) -> Result<Self> {
        if !(1..=4).contains(&order) {
            return Err(Error::ParamOutOfRange {
                family: "battle_lemarie",
                param: order as i64,
                range: "1..=4",
            });
        }
        Ok(Self {
            order,
            a: autocorrelation(order),
            wavelet,
        })
    }

    fn symbol(&self, w: T) -> T {
        autocorrelation_symbol(&self.a, w)
    }

    fn scaling_power(&self, xi: T) -> T {
        sin_over(xi * T::lit(0.5)).powi(2 * self.order as i32) / self.symbol(xi)
    }
}

impl<T: Real> Spectrum<T> for SplineSpectrum<T> {
    fn power(&self, xi: T) -> T {
        let two_pi = T::lit(2.0) * T::PI();
        if self.wavelet {
            let w = xi * T::lit(0.5);
            let high = (w * T::lit(0.5)).sin().powi(2 * self.order as i32)
                * self.symbol(w + T::PI())
                / self.symbol(w + w);
            high * self.scaling_power(w) / two_pi
        } else {
            self.scaling_power(xi) / two_pi
        }
    }

    /// The scaling defect is the periodisation remainder
    /// `Σ_{0<|m|≤64} sinc^{2k}((ξ + 2πm)/2) / A(ξ)`.
    fn unit_defect(&self, xi: T) -> T {
        if self.wavelet {
            return T::one() - T::lit(2.0) * T::PI() * self.power(xi);
        }
        let two_pi = T::lit(2.0) * T::PI();
        let tail: T = (1..=PERIODIZATION_TERMS)
            .flat_map(|m| [m, -m])
            .map(|m| {
                sin_over((xi + two_pi * T::from_int(m)) * T::lit(0.5)).powi(2 * self.order as i32)
            })
            .sum();
        tail / self.symbol(xi)
    }

    fn resolution(&self) -> T {
        T::zero()
    }
}

/// Shannon spectra: `φ̂ = (2π)^{-1/2} 1_{|ξ|≤π}` and
/// `|ψ̂|² = (2π)^{-1} 1_{π≤|ξ|≤2π}`.
#[derive(Clone, Copy, Debug)]
pub struct ShannonSpectrum {
    pub wavelet: bool,
}

impl<T: Real> Spectrum<T> for ShannonSpectrum {
    fn power(&self, xi: T) -> T {
        let a = xi.abs();
        let inside = if self.wavelet {
            a >= T::PI() && a <= T::lit(2.0) * T::PI()
        } else {
            a <= T::PI()
        };
        if inside {
            T::one() / (T::lit(2.0) * T::PI())
        } else {
            T::zero()
        }
    }

    fn resolution(&self) -> T {
        T::zero()
    }
}

/// `ψ̂` and `φ̂`, in that order.
pub type SpectrumPair<T> = (Box<dyn Spectrum<T>>, Box<dyn Spectrum<T>>);

/// The analytic `ψ̂` and `φ̂` spectra of a family.
pub fn family_spectra<T: Real>(fam: &MraFamily<T>) -> Result<SpectrumPair<T>> {
    match fam.name() {
        FamilyName::Shannon => Ok((
            Box::new(ShannonSpectrum { wavelet: true }),
            Box::new(ShannonSpectrum { wavelet: false }),
        )),
        FamilyName::BattleLemarie if fam.param() > 1 => {
            let k = fam.param() as usize;
            Ok((
                Box::new(SplineSpectrum::new(k, true)?),
                Box::new(SplineSpectrum::new(k, false)?),
            ))
        }
        _ => {
            let filter = fam.filter().ok_or_else(|| {
                Error::InvalidArgument(format!("{} carries no filter", fam.spec()))
            })?;
            let order = fam.vanishing_moments() as usize;
            Ok((
                Box::new(RefinementProduct::new(filter, order, true)?),
                Box::new(RefinementProduct::new(filter, order, false)?),
            ))
        }
    }
}

/// Which small-frequency criterion integral is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    /// `∫_{|ξ|<ε} |ψ̂(ξ)|² |ξ|^{-(2s+1)} dξ`.
    Wavelet,
    /// `∫_{|ξ|<ε} (2π|φ̂(ξ)|² - 1) |ξ|^{-(2s+1)} dξ`.
    Scaling,
}

/// Outcome of one criterion integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IntegralResult<T: Real> {
    pub kind: CriterionKind,
    pub s: T,
    pub epsilon: T,
    /// Absolute-value integral with a geometric tail estimate; `None` when diverged.
    pub value: Option<T>,
    /// Signed integral over the tabulated shells (equal to the absolute one
    /// for the nonnegative wavelet integrand).
    pub signed_value: T,
    pub diverged: bool,
    /// Absolute-value shell sums from the outermost shell inward.
    pub shells: Vec<T>,
    /// Cumulative absolute-value sums after each shell.
    pub refinement_trace: Vec<(usize, T)>,
    /// Nodes with a positive and a negative integrand.
    pub positive_nodes: usize,
    pub negative_nodes: usize,
}

/// Criterion integrand `g(ξ)` tabulated once per `(spectrum, ε)` on the
/// Simpson nodes of the dyadic shells `ε [2^{-(m+1)}, 2^{-m}]`, both signs;
/// each `s` then costs one weighted sum.
#[derive(Clone, Debug)]
pub struct CriterionTable<T: Real> {
    kind: CriterionKind,
    epsilon: T,
    /// Per shell: `(|ξ|, Simpson weight, g(ξ))`.
    shells: Vec<Vec<(T, T, T)>>,
}

impl<T: Real> CriterionTable<T> {
    pub fn new(spectrum: &dyn Spectrum<T>, kind: CriterionKind, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero()) || epsilon > T::lit(2.0) * T::PI() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 2pi], got {epsilon}"
            )));
        }
        let xi_min = T::lit(XI_MIN);
        if spectrum.resolution() > xi_min {
            return Err(Error::InsufficientResolution(format!(
                "spectrum spacing {:e} is coarser than {XI_MIN:e}",
                spectrum.resolution().to_f64_lossy()
            )));
        }
        let mut bounds = Vec::new();
        let mut m = 0;
        while epsilon * T::pow2(-(m + 1)) >= xi_min {
            bounds.push((epsilon * T::pow2(-(m + 1)), epsilon * T::pow2(-m)));
            m += 1;
        }
        if bounds.len() < 4 {
            return Err(Error::InvalidArgument(format!(
                "epsilon {epsilon} leaves fewer than 4 dyadic shells above {XI_MIN:e}"
            )));
        }
        let panels = SHELL_PANELS;
        let shells = bounds
            .par_iter()
            .map(|&(a, b)| {
                let h = (b - a) / T::from_usize(panels).unwrap();
                (0..=panels)
                    .flat_map(|i| {
                        let w = if i == 0 || i == panels {
                            T::one()
                        } else if i % 2 == 1 {
                            T::lit(4.0)
                        } else {
                            T::lit(2.0)
                        } * h
                            / T::lit(3.0);
                        let x = a + h * T::from_usize(i).unwrap();
                        [x, -x].map(|xi| {
                            let g = match kind {
                                CriterionKind::Wavelet => spectrum.power(xi),
                                CriterionKind::Scaling => -spectrum.unit_defect(xi),
                            };
                            (x, w, g)
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            kind,
            epsilon,
            shells,
        })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn evaluate(&self, s: T) -> Result<IntegralResult<T>> {
        if !(s > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "s must be positive, got {s}"
            )));
        }
        let exponent = -(T::lit(2.0) * s + T::one());
        let mut shells = Vec::with_capacity(self.shells.len());
        let mut signed_value = T::zero();
        let (mut positive_nodes, mut negative_nodes) = (0, 0);
        for shell in &self.shells {
            let mut abs_sum = T::zero();
            for &(x, w, g) in shell {
                let term = w * g * x.powf(exponent);
                abs_sum += term.abs();
                signed_value += term;
                if g > T::zero() {
                    positive_nodes += 1;
                } else if g < T::zero() {
                    negative_nodes += 1;
                }
            }
            shells.push(abs_sum);
        }
        let mut total = T::zero();
        let refinement_trace: Vec<(usize, T)> = shells
            .iter()
            .enumerate()
            .map(|(m, v)| {
                total += *v;
                (m, total)
            })
            .collect();
        let n = shells.len();
        let ratio = |i: usize| {
            if shells[i - 1] > T::zero() {
                shells[i] / shells[i - 1]
            } else if shells[i] > T::zero() {
                T::infinity()
            } else {
                T::zero()
            }
        };
        let threshold = T::lit(DIVERGENCE_RATIO);
        let diverged = (n - 3..n).all(|i| ratio(i) > threshold);
        let value = (!diverged).then(|| {
            let q = ratio(n - 1);
            let tail = if q > T::zero() && q < T::one() {
                shells[n - 1] * q / (T::one() - q)
            } else {
                T::zero()
            };
            total + tail
        });
        Ok(IntegralResult {
            kind: self.kind,
            s,
            epsilon: self.epsilon,
            value,
            signed_value,
            diverged,
            shells,
            refinement_trace,
            positive_nodes,
            negative_nodes,
        })
    }
}

/// `∫_{|ξ|<ε} |ψ̂(ξ)|² |ξ|^{-(2s+1)} dξ`.
pub fn wavelet_criterion<T: Real>(
    spectrum: &dyn Spectrum<T>,
    s: T,
    epsilon: T,
) -> Result<IntegralResult<T>> {
    CriterionTable::new(spectrum, CriterionKind::Wavelet, epsilon)?.evaluate(s)
}

/// `∫_{|ξ|<ε} (2π|φ̂(ξ)|² - 1) |ξ|^{-(2s+1)} dξ`, judged on the absolute value.
pub fn scaling_criterion<T: Real>(
    spectrum: &dyn Spectrum<T>,
    s: T,
    epsilon: T,
) -> Result<IntegralResult<T>> {
    CriterionTable::new(spectrum, CriterionKind::Scaling, epsilon)?.evaluate(s)
}

/// Bisection result for the largest `s` with a finite criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CriticalOrder<T: Real> {
    pub family: String,
    pub kind: CriterionKind,
    pub epsilon: T,
    /// Midpoint of the final bracket; the range endpoint when the verdict
    /// never flips inside it.
    pub s_star: T,
    /// `(finite at, diverged at)`; infinite upper end when the criterion is
    /// finite over the whole range.
    pub bracket: (T, T),
    /// Every `(s, diverged)` verdict in evaluation order.
    pub verdicts: Vec<(T, bool)>,
}

impl<T: Real> CriticalOrder<T> {
    pub fn above_range(&self) -> bool {
        self.bracket.1.is_infinite()
    }
}

/// Bisects on `s ∈ [0.1, 8]`: two endpoint verdicts, then eight halvings to
/// a bracket narrower than 0.05.
pub fn critical_order_with<T: Real>(
    table: &CriterionTable<T>,
    family: String,
) -> Result<CriticalOrder<T>> {
    let (lo0, hi0) = (T::lit(S_RANGE.0), T::lit(S_RANGE.1));
    let mut verdicts = Vec::new();
    let mut verdict = |s: T| -> Result<bool> {
        let d = table.evaluate(s)?.diverged;
        verdicts.push((s, d));
        Ok(d)
    };
    let low = verdict(lo0)?;
    let high = verdict(hi0)?;
    let (s_star, bracket) = match (low, high) {
        (false, false) => (hi0, (hi0, T::infinity())),
        (true, true) => (lo0, (T::zero(), lo0)),
        (true, false) => {
            return Err(Error::NonMonotone(format!(
                "diverged at s = {lo0} but finite at s = {hi0}"
            )))
        }
        (false, true) => {
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..BISECTION_STEPS {
                let mid = (lo + hi) * T::lit(0.5);
                if verdict(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            ((lo + hi) * T::lit(0.5), (lo, hi))
        }
    };
    Ok(CriticalOrder {
        family,
        kind: table.kind,
        epsilon: table.epsilon,
        s_star,
        bracket,
        verdicts,
    })
}

/// Critical order of the wavelet criterion for a family at `ε`.
pub fn critical_order<T: Real>(fam: &MraFamily<T>, epsilon: T) -> Result<CriticalOrder<T>> {
    let (psi, _) = family_spectra(fam)?;
    let table = CriterionTable::new(psi.as_ref(), CriterionKind::Wavelet, epsilon)?;
    critical_order_with(&table, fam.spec().to_string())
}

/// Critical order of the scaling criterion for a family at `ε`.
pub fn scaling_critical_order<T: Real>(fam: &MraFamily<T>, epsilon: T) -> Result<CriticalOrder<T>> {
    let (_, phi) = family_spectra(fam)?;
    let table = CriterionTable::new(phi.as_ref(), CriterionKind::Scaling, epsilon)?;
    critical_order_with(&table, fam.spec().to_string())
}

/// Criterion values over a list of `s`, sharing one tabulated integrand.
pub fn sweep<T: Real>(table: &CriterionTable<T>, s_values: &[T]) -> Result<Vec<IntegralResult<T>>> {
    s_values.iter().map(|&s| table.evaluate(s)).collect()
}

/// Rows `s, epsilon, value, signed_value, shell_0, …`; `value` is `DIVERGED`
/// for divergent integrals.
pub fn sweep_csv<T: Real>(results: &[IntegralResult<T>]) -> CsvTable {
    let shells = results.first().map_or(0, |r| r.shells.len());
    let mut header: Vec<String> = ["s", "epsilon", "value", "signed_value"]
        .into_iter()
        .map(String::from)
        .collect();
    header.extend((0..shells).map(|m| format!("shell_{m}")));
    let mut t = CsvTable::new(header);
    for r in results {
        let mut row = vec![
            Cell::float(r.s),
            Cell::float(r.epsilon),
            r.value.map_or(Cell::from("DIVERGED"), Cell::float),
            Cell::float(r.signed_value),
        ];
        row.extend(r.shells.iter().map(|v| Cell::float(*v)));
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_family, FamilySpec};

    #[test]
    fn refinement_factorisation_matches_direct_symbol() {
        let fam = make_family::<f64>(FamilySpec::daubechies(3).unwrap()).unwrap();
        let rp = RefinementProduct::new(fam.filter().unwrap(), 3, true).unwrap();
        for w in [0.3, 1.0, 2.5] {
            let direct = fam
                .filter()
                .unwrap()
                .lowpass_symbol(w + std::f64::consts::PI)
                .norm_sqr();
            assert!((rp.highpass_power(w) - direct).abs() < 1e-13);
        }
        assert!(RefinementProduct::new(fam.filter().unwrap(), 4, true).is_err());
    }

    #[test]
    fn shannon_scaling_integrand_vanishes() {
        let r = scaling_criterion(&ShannonSpectrum { wavelet: false }, 4.0f64, 1.0).unwrap();
        assert!(!r.diverged);
        assert_eq!(r.value, Some(0.0));
    }
}
