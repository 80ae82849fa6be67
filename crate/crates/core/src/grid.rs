//! Dyadic grids and the sampled-function carrier used for scaling functions,
//! wavelets, test functions and projections alike.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform grid `left + i * 2^-level`, `i = 0..count`, whose endpoints are
/// themselves dyadic at `level`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DyadicGrid<T: Real> {
    left: T,
    right: T,
    level: i32,
}

impl<T: Real> DyadicGrid<T> {
    pub fn new(left: T, right: T, level: i32) -> Result<Self> {
        if !(right > left) {
            return Err(Error::InvalidGrid(format!(
                "right ({right}) must exceed left ({left})"
            )));
        }
        if level < 0 {
            return Err(Error::InvalidGrid(format!("level {level} is negative")));
        }
        let scale = T::pow2(level);
        for (name, v) in [("left", left), ("right", right)] {
            let s = v * scale;
            if s.fract() != T::zero() {
                return Err(Error::InvalidGrid(format!(
                    "{name} endpoint {v} is not a multiple of 2^-{level}"
                )));
            }
        }
        Ok(Self { left, right, level })
    }

    /// Smallest grid at `level` containing `[left, right]`.
    pub fn covering(left: T, right: T, level: i32) -> Result<Self> {
        let scale = T::pow2(level);
        Self::new(
            (left * scale).floor() / scale,
            (right * scale).ceil() / scale,
            level,
        )
    }

    pub fn left(&self) -> T {
        self.left
    }

    pub fn right(&self) -> T {
        self.right
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn spacing(&self) -> T {
        T::pow2(-self.level)
    }

    pub fn count(&self) -> usize {
        ((self.right - self.left) * T::pow2(self.level))
            .round()
            .to_usize()
            .expect("grid size fits usize")
            + 1
    }

    #[inline]
    pub fn point(&self, i: usize) -> T {
        self.left + T::from_usize(i).expect("index") * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.count()).map(move |i| self.point(i))
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.left && x <= self.right
    }

    /// Same extent, different level.
    pub fn with_level(&self, level: i32) -> Result<Self> {
        Self::new(self.left, self.right, level)
    }
}

/// How values between grid samples are reconstructed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Piecewise linear through the samples.
    Linear,
    /// Piecewise constant: the value of sample `i` holds on `[x_i, x_{i+1})`.
    Step,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "")]
pub enum DecayHint<T: Real> {
    Compact,
    Exponential { rate: T },
    Algebraic { order: T },
    None,
}

/// A real function tabulated on a dyadic grid; zero outside the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SampledFunction<T: Real> {
    grid: DyadicGrid<T>,
    values: Vec<T>,
    decay: DecayHint<T>,
    interpolation: Interpolation,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(
        grid: DyadicGrid<T>,
        values: Vec<T>,
        decay: DecayHint<T>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::InvalidFunction(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!(
                "non-finite value at index {i}"
            )));
        }
        if decay == DecayHint::Compact {
            let first = values[0];
            let last = values[values.len() - 1];
            if first != T::zero() || last != T::zero() {
                return Err(Error::InvalidFunction(format!(
                    "compact function must vanish at both endpoints (got {first}, {last})"
                )));
            }
        }
        Ok(Self {
            grid,
            values,
            decay,
            interpolation,
        })
    }

    /// Point samples of `f`, reconstructed linearly.
    pub fn from_fn(grid: DyadicGrid<T>, decay: DecayHint<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid, values, decay, Interpolation::Linear)
    }

    /// Cell averages computed from an antiderivative, reconstructed as a step
    /// function. Exact for indicator-type functions whose jumps sit on the grid.
    pub fn from_antiderivative(
        grid: DyadicGrid<T>,
        decay: DecayHint<T>,
        antiderivative: impl Fn(T) -> T,
    ) -> Result<Self> {
        let n = grid.count();
        let h = grid.spacing();
        let mut values = Vec::with_capacity(n);
        let mut prev = antiderivative(grid.point(0));
        for i in 0..n - 1 {
            let next = antiderivative(grid.point(i + 1));
            values.push((next - prev) / h);
            prev = next;
        }
        values.push(T::zero());
        Self::new(grid, values, decay, Interpolation::Step)
    }

    pub fn grid(&self) -> &DyadicGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn decay(&self) -> DecayHint<T> {
        self.decay
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn support(&self) -> (T, T) {
        (self.grid.left, self.grid.right)
    }

    /// Right-continuous evaluation; zero outside the grid.
    #[inline]
    pub fn eval(&self, x: T) -> T {
        let u = (x - self.grid.left) * T::pow2(self.grid.level);
        self.eval_scaled(u, false)
    }

    /// Left limit at `x`. Differs from [`eval`](Self::eval) only at the jumps of
    /// a step reconstruction.
    #[inline]
    pub fn eval_left(&self, x: T) -> T {
        let u = (x - self.grid.left) * T::pow2(self.grid.level);
        self.eval_scaled(u, true)
    }

    /// Evaluation at fractional sample index `u`.
    #[inline]
    fn eval_scaled(&self, u: T, left_limit: bool) -> T {
        let n = self.values.len();
        let last = T::from_usize(n - 1).unwrap();
        if u < T::zero() || u > last {
            return T::zero();
        }
        let fl = u.floor();
        let i = fl.to_usize().unwrap_or(0);
        let t = u - fl;
        match self.interpolation {
            Interpolation::Linear => {
                if i + 1 >= n {
                    self.values[n - 1]
                } else {
                    self.values[i] + t * (self.values[i + 1] - self.values[i])
                }
            }
            Interpolation::Step => {
                if left_limit && t == T::zero() {
                    if i == 0 {
                        T::zero()
                    } else {
                        self.values[i - 1]
                    }
                } else if i + 1 >= n {
                    // the step reconstruction ends at the right endpoint
                    T::zero()
                } else {
                    self.values[i]
                }
            }
        }
    }

    /// Exact integral of the reconstruction (trapezoid rule for linear
    /// reconstruction, left Riemann sum for steps).
    pub fn integral(&self) -> T {
        let h = self.grid.spacing();
        let n = self.values.len();
        match self.interpolation {
            Interpolation::Linear => {
                let inner: T = self.values[1..n - 1].iter().copied().sum();
                h * (inner + (self.values[0] + self.values[n - 1]) * T::lit(0.5))
            }
            Interpolation::Step => h * self.values[..n - 1].iter().copied().sum::<T>(),
        }
    }

    /// `∫ x^m f(x) dx` over the reconstruction, exact up to rounding.
    pub fn moment(&self, m: u32) -> T {
        let pts = crate::quadrature::GaussLegendre::<T>::new(m as usize / 2 + 2);
        self.integrate_weighted(&pts, |x| x.powi(m as i32))
    }

    /// `∫ w(x) f(x) dx` using Gauss–Legendre on every grid cell.
    pub fn integrate_weighted(
        &self,
        rule: &crate::quadrature::GaussLegendre<T>,
        w: impl Fn(T) -> T,
    ) -> T {
        let h = self.grid.spacing();
        let n = self.values.len();
        let mut acc = T::zero();
        for i in 0..n - 1 {
            let a = self.grid.point(i);
            let (va, vb) = match self.interpolation {
                Interpolation::Linear => (self.values[i], self.values[i + 1]),
                Interpolation::Step => (self.values[i], self.values[i]),
            };
            acc += rule.integrate(a, a + h, |x| {
                let t = (x - a) / h;
                w(x) * (va + t * (vb - va))
            });
        }
        acc
    }

    pub fn norm_l2_sq(&self) -> T {
        inner_product(self, self)
    }

    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// `∫|f|`, exact for step reconstruction and for linear pieces without a
    /// sign change; sign changes inside a cell are resolved at the zero.
    pub fn norm_l1(&self) -> T {
        let h = self.grid.spacing();
        let n = self.values.len();
        let mut acc = T::zero();
        for i in 0..n - 1 {
            let a = self.values[i];
            let b = match self.interpolation {
                Interpolation::Linear => self.values[i + 1],
                Interpolation::Step => a,
            };
            if a * b >= T::zero() {
                acc += h * (a.abs() + b.abs()) * T::lit(0.5);
            } else {
                acc += h * (a * a + b * b) / ((a - b).abs() * T::lit(2.0));
            }
        }
        acc
    }

    /// Re-tabulates on another grid (linear reconstruction of the samples).
    pub fn resample(&self, grid: DyadicGrid<T>) -> Result<Self> {
        let values = grid.points().map(|x| self.eval(x)).collect();
        Self::new(grid, values, DecayHint::None, self.interpolation)
    }

    /// Pointwise map of the sample values.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(
            self.grid,
            self.values.iter().map(|&v| f(v)).collect(),
            DecayHint::None,
            self.interpolation,
        )
    }
}

/// Anything with a dyadic breakpoint structure that can enter the exact
/// piecewise L² pairing: sampled functions and their dilates/translates.
pub trait Tabulated<T: Real> {
    fn support(&self) -> (T, T);
    /// Breakpoints lie on the `2^-level` lattice.
    fn breakpoint_level(&self) -> i32;
    /// `(left limit, right value)` at `x`.
    fn node(&self, x: T) -> (T, T);

    /// [`node`](Self::node) at `a + i 2^-level` for `i = 0..=cells`.
    fn nodes(&self, a: T, level: i32, cells: usize) -> Vec<(T, T)> {
        let h = T::pow2(-level);
        (0..=cells)
            .map(|i| self.node(a + T::from_usize(i).unwrap() * h))
            .collect()
    }
}

impl<T: Real> Tabulated<T> for SampledFunction<T> {
    fn support(&self) -> (T, T) {
        (self.grid.left, self.grid.right)
    }

    fn breakpoint_level(&self) -> i32 {
        self.grid.level
    }

    #[inline]
    fn node(&self, x: T) -> (T, T) {
        let u = (x - self.grid.left) * T::pow2(self.grid.level);
        match self.interpolation {
            Interpolation::Linear => {
                let v = self.eval_scaled(u, false);
                (v, v)
            }
            Interpolation::Step => (self.eval_scaled(u, true), self.eval_scaled(u, false)),
        }
    }

    /// Walks the lattice in integer sub-cell steps instead of re-locating
    /// every node.
    fn nodes(&self, a: T, level: i32, cells: usize) -> Vec<(T, T)> {
        let r = level - self.grid.level;
        let start = ((a - self.grid.left) * T::pow2(level)).round();
        let (Some(m0), true) = (start.to_i64(), (0..40).contains(&r)) else {
            let h = T::pow2(-level);
            return (0..=cells)
                .map(|i| self.node(a + T::from_usize(i).unwrap() * h))
                .collect();
        };
        let sub = 1i64 << r;
        let inv = T::one() / T::from_int(sub);
        let v = &self.values;
        let n = v.len() as i64;
        let zero = T::zero();
        (0..=cells as i64)
            .map(|idx| {
                let m = m0 + idx;
                let (i, s) = (m.div_euclid(sub), m.rem_euclid(sub));
                if m < 0 || i >= n || (i == n - 1 && s > 0) {
                    return (zero, zero);
                }
                let iu = i as usize;
                match self.interpolation {
                    Interpolation::Linear => {
                        let x = if s == 0 {
                            v[iu]
                        } else {
                            v[iu] + T::from_int(s) * inv * (v[iu + 1] - v[iu])
                        };
                        (x, x)
                    }
                    Interpolation::Step => {
                        let right = if i + 1 < n { v[iu] } else { zero };
                        let left = if s > 0 {
                            right
                        } else if i > 0 {
                            v[iu - 1]
                        } else {
                            zero
                        };
                        (left, right)
                    }
                }
            })
            .collect()
    }
}

/// `2^{j/2} f(2^j x - k)` as a view over a sampled function.
#[derive(Clone, Copy, Debug)]
pub struct Dilate<'a, T: Real> {
    base: &'a SampledFunction<T>,
    j: i32,
    k: i64,
    scale: T,
    amplitude: T,
}

impl<'a, T: Real> Dilate<'a, T> {
    pub fn new(base: &'a SampledFunction<T>, j: i32, k: i64) -> Self {
        let scale = T::pow2(j);
        Self {
            base,
            j,
            k,
            scale,
            amplitude: scale.sqrt(),
        }
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        self.amplitude * self.base.eval(self.scale * x - T::from_int(self.k))
    }

    pub fn level(&self) -> i32 {
        self.j
    }

    pub fn shift(&self) -> i64 {
        self.k
    }
}

impl<T: Real> Tabulated<T> for Dilate<'_, T> {
    fn support(&self) -> (T, T) {
        let (l, r) = self.base.support();
        let k = T::from_int(self.k);
        ((l + k) / self.scale, (r + k) / self.scale)
    }

    fn breakpoint_level(&self) -> i32 {
        self.base.grid.level + self.j
    }

    #[inline]
    fn node(&self, x: T) -> (T, T) {
        let (a, b) = self.base.node(self.scale * x - T::from_int(self.k));
        (self.amplitude * a, self.amplitude * b)
    }

    fn nodes(&self, a: T, level: i32, cells: usize) -> Vec<(T, T)> {
        let mut out = self
            .base
            .nodes(self.scale * a - T::from_int(self.k), level - self.j, cells);
        for p in &mut out {
            p.0 *= self.amplitude;
            p.1 *= self.amplitude;
        }
        out
    }
}

/// Exact L² pairing of two piecewise-linear (or piecewise-constant)
/// reconstructions over the intersection of their supports. Cells of the
/// common refinement are integrated with the closed-form product rule, which
/// is the trapezoid rule whenever both factors are continuous and linear.
/// Disjoint supports give exactly zero.
pub fn inner_product<T: Real>(f: &impl Tabulated<T>, g: &impl Tabulated<T>) -> T {
    let (fl, fr) = f.support();
    let (gl, gr) = g.support();
    inner_product_on(f, g, fl.max(gl), fr.min(gr))
}

/// [`inner_product`] restricted to `[a, b]`; both ends must lie on the common
/// breakpoint lattice.
pub fn inner_product_on<T: Real>(f: &impl Tabulated<T>, g: &impl Tabulated<T>, a: T, b: T) -> T {
    if !(b > a) {
        return T::zero();
    }
    let level = f.breakpoint_level().max(g.breakpoint_level());
    let h = T::pow2(-level);
    let cells = ((b - a) / h).round().to_usize().unwrap_or(0);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let fs = f.nodes(a, level, cells);
    let gs = g.nodes(a, level, cells);
    let mut acc = T::zero();
    for i in 1..=cells {
        let (fa, ga) = (fs[i - 1].1, gs[i - 1].1);
        let (fb, gb) = (fs[i].0, gs[i].0);
        acc += two * fa * ga + fa * gb + fb * ga + two * fb * gb;
    }
    acc * sixth
}

/// Moments `∫ g` and `∫ (u - c_p) g` of a reconstruction over the cells
/// `[c_p, c_p + 2^-level)` of a coarser lattice. Pairing a function that is
/// linear on those cells with `g` then costs one multiply-add per cell.
#[derive(Clone, Debug)]
pub struct CellMoments<T: Real> {
    level: i32,
    /// Index of the first cell on the `2^-level` lattice.
    first: i64,
    m0: Vec<T>,
    m1: Vec<T>,
}

impl<T: Real> CellMoments<T> {
    /// `None` when `level` is finer than `g`'s own grid.
    pub fn new(g: &SampledFunction<T>, level: i32) -> Option<Self> {
        let r = g.grid.level - level;
        if !(0..40).contains(&r) {
            return None;
        }
        let sub = 1i64 << r;
        let h = g.grid.spacing();
        let start = (g.grid.left * T::pow2(g.grid.level)).round().to_i64()?;
        let first = start.div_euclid(sub);
        let n = g.values.len();
        let cells = ((start + n as i64 - 1).div_euclid(sub) - first + 1) as usize;
        let mut m0 = vec![T::zero(); cells];
        let mut m1 = vec![T::zero(); cells];
        let half = T::lit(0.5);
        let sixth = T::one() / T::lit(6.0);
        let third = T::one() / T::lit(3.0);
        for i in 0..n - 1 {
            let (a, b) = match g.interpolation {
                Interpolation::Linear => (g.values[i], g.values[i + 1]),
                Interpolation::Step => (g.values[i], g.values[i]),
            };
            let m = start + i as i64;
            let p = (m.div_euclid(sub) - first) as usize;
            let d = T::from_int(m.rem_euclid(sub)) * h;
            let mass = h * (a + b) * half;
            m0[p] += mass;
            m1[p] += d * mass + h * h * (a * sixth + b * third);
        }
        Some(Self {
            level,
            first,
            m0,
            m1,
        })
    }

    /// `⟨f, 2^{j/2} g(2^j · - k)⟩` when `f`'s cells map onto this lattice
    /// (`f.level - j == level`); `None` otherwise.
    pub fn pair(&self, f: &SampledFunction<T>, j: i32, k: i64) -> Option<T> {
        if f.grid.level - j != self.level {
            return None;
        }
        let width = T::pow2(-self.level);
        // u-lattice index of f's first node: 2^j left_f - k over 2^-level
        let u0 = (f.grid.left * T::pow2(f.grid.level)).round().to_i64()? - (k << self.level);
        let n = f.values.len() as i64;
        let lo = (self.first - u0).max(0);
        let hi = (self.first + self.m0.len() as i64 - u0).min(n - 1);
        let mut acc = T::zero();
        for i in lo..hi {
            let p = (u0 + i - self.first) as usize;
            let iu = i as usize;
            let (v, slope) = match f.interpolation {
                Interpolation::Linear => (f.values[iu], (f.values[iu + 1] - f.values[iu]) / width),
                Interpolation::Step => (f.values[iu], T::zero()),
            };
            acc += v * self.m0[p] + slope * self.m1[p];
        }
        Some(acc * T::pow2(-j).sqrt())
    }
}
