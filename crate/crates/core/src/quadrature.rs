//! Gauss–Legendre rules and least-squares line fits.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `n`-point Gauss–Legendre rule on `[-1, 1]`; exact for polynomials of
/// degree `2n - 1`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T: Real> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn integrate(&self, a: T, b: T, f: impl Fn(T) -> T) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(mid + half * *x);
        }
        acc * half
    }

    /// Calls `visit(x, w)` for each node mapped to `[a, b]`, with the weight
    /// scaled to that interval.
    pub fn for_each_node(&self, a: T, b: T, mut visit: impl FnMut(T, T)) {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            visit(mid + half * *x, *w * half);
        }
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

pub fn fit_line<T: Real>(xs: &[T], ys: &[T]) -> Result<LineFit<T>> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "fit_line: {} abscissae vs {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints(format!(
            "{} points for a line fit",
            xs.len()
        )));
    }
    let n = T::from_usize(xs.len()).unwrap();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == T::zero() {
        return Err(Error::TooFewPoints("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == T::zero() {
        T::one()
    } else {
        (sxy * sxy / (sxx * syy)).min(T::one()).max(T::zero())
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Coefficient of determination of a fixed model against data.
pub fn r_squared<T: Real>(observed: &[T], fitted: &[T]) -> T {
    let n = T::from_usize(observed.len().max(1)).unwrap();
    let mean = observed.iter().copied().sum::<T>() / n;
    let ss_tot: T = observed.iter().map(|&y| (y - mean) * (y - mean)).sum();
    let ss_res: T = observed
        .iter()
        .zip(fitted)
        .map(|(&y, &f)| (y - f) * (y - f))
        .sum();
    if ss_tot == T::zero() {
        return if ss_res == T::zero() {
            T::one()
        } else {
            T::zero()
        };
    }
    T::one() - ss_res / ss_tot
}
