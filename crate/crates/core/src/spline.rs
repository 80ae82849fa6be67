//! Best `L²` approximation by B-splines on uniform meshes, computed through
//! a banded Gram solve, and mesh-refinement convergence studies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bspline::cardinal_bspline;
use crate::convergence::{RateReport, TestFunction};
use crate::error::{Error, Result};
use crate::export::{Cell, CsvTable};
use crate::families::DEFAULT_LEVEL;
use crate::grid::SampledFunction;
use crate::linalg::BandedSpd;
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

/// Largest accepted condition estimate of the Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Residual orthogonality required of a solution, relative to `‖f‖₂`.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// Extra levels above the finest mesh at which test functions are tabulated.
const SAMPLING_MARGIN: i32 = 4;

/// Order-`k` B-splines on the knots `window.0 + i h`, extended by `k - 1`
/// ghost knots on the left and truncated to the window.
///
/// Basis element `m` is `B_k((x - window.0) / h - m + k - 1)`, so its support
/// starts at knot `m - k + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SplineSpace<T: Real> {
    pub order: usize,
    pub mesh: T,
    pub window: (T, T),
    pub basis_count: usize,
    /// Number of knot spans meeting the window.
    spans: usize,
}

impl<T: Real> SplineSpace<T> {
    pub fn new(order: usize, mesh: T, window: (T, T)) -> Result<Self> {
        if !(1..=20).contains(&order) {
            return Err(Error::InvalidArgument(format!(
                "spline order {order} outside 1..=20"
            )));
        }
        if !(mesh > T::zero() && mesh.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mesh {mesh} must be positive"
            )));
        }
        if !(window.0 < window.1 && window.0.is_finite() && window.1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "window [{}, {}] is empty",
                window.0, window.1
            )));
        }
        let ratio = (window.1 - window.0) / mesh;
        let spans = (ratio - T::tol(1e-9) * ratio.max(T::one()))
            .ceil()
            .max(T::one());
        let spans = spans.to_usize().filter(|&s| s <= 1 << 24).ok_or_else(|| {
            Error::InvalidArgument(format!("mesh {mesh} too fine for the window"))
        })?;
        Ok(Self {
            order,
            mesh,
            window,
            basis_count: spans + order - 1,
            spans,
        })
    }

    pub fn knot(&self, i: i64) -> T {
        self.window.0 + T::from_int(i) * self.mesh
    }

    /// Index of the first basis element alive at `x` and the values of the
    /// `order` elements starting there. `None` outside the window.
    pub fn active(&self, x: T) -> Option<(usize, Vec<T>)> {
        if x < self.window.0 || x >= self.window.1 {
            return None;
        }
        let t = (x - self.window.0) / self.mesh;
        let s = t.floor().to_usize().unwrap_or(0).min(self.spans - 1);
        let shift = T::from_usize(self.order - 1).unwrap() - T::from_usize(s).unwrap();
        let values = (0..self.order)
            .map(|r| cardinal_bspline(self.order, t + shift - T::from_usize(r).unwrap()))
            .collect();
        Some((s, values))
    }

    /// `B_m(x)`.
    pub fn basis(&self, m: usize, x: T) -> T {
        match self.active(x) {
            Some((s, v)) if m >= s && m < s + self.order => v[m - s],
            _ => T::zero(),
        }
    }

    /// `Σ c_m B_m(x)`.
    pub fn eval(&self, coefficients: &[T], x: T) -> T {
        match self.active(x) {
            Some((s, v)) => v.iter().zip(&coefficients[s..]).map(|(b, c)| *b * *c).sum(),
            None => T::zero(),
        }
    }

    /// Knot spans clipped to the window.
    fn span_bounds(&self, s: usize) -> (T, T) {
        let a = self.knot(s as i64);
        let b = self.knot(s as i64 + 1).min(self.window.1);
        (a, b)
    }

    /// Pieces on which both `f` and the splines are polynomial.
    fn pieces(&self, f: &SampledFunction<T>) -> Vec<(T, T)> {
        let grid = f.grid();
        let (a, b) = self.window;
        let mut cuts: Vec<T> = (0..=self.spans)
            .map(|s| self.knot(s as i64).min(b))
            .collect();
        cuts.extend(grid.points().filter(|&x| x > a && x < b));
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let eps = self.mesh * T::tol(1e-12);
        cuts.dedup_by(|x, y| (*x - *y).abs() <= eps);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Applies `visit(x, weight, first, values)` at the Gauss nodes of every
    /// piece, with `nodes` points per piece.
    fn quadrature(
        &self,
        f: &SampledFunction<T>,
        nodes: usize,
        mut visit: impl FnMut(T, T, usize, &[T]),
    ) {
        let gl = GaussLegendre::<T>::new(nodes);
        for (u, v) in self.pieces(f) {
            gl.for_each_node(u, v, |x, w| {
                if let Some((s, values)) = self.active(x) {
                    visit(x, w, s, &values);
                }
            });
        }
    }
}

/// `G_mn = ⟨B_m, B_n⟩` over the window. Gauss–Legendre with `order` nodes per
/// span is exact for these degree `2 order - 2` products.
pub fn gram_matrix<T: Real>(space: &SplineSpace<T>) -> BandedSpd<T> {
    let k = space.order;
    let mut g = BandedSpd::zeros(space.basis_count, k - 1);
    let gl = GaussLegendre::<T>::new(k);
    for s in 0..space.spans {
        let (a, b) = space.span_bounds(s);
        let mut local = vec![T::zero(); k * k];
        gl.for_each_node(a, b, |x, w| {
            if let Some((first, v)) = space.active(x) {
                debug_assert_eq!(first, s);
                for p in 0..k {
                    for q in 0..=p {
                        local[p * k + q] += w * v[p] * v[q];
                    }
                }
            }
        });
        for p in 0..k {
            for q in 0..=p {
                let cur = g.get(s + p, s + q);
                g.set(s + p, s + q, cur + local[p * k + q]);
            }
        }
    }
    g
}

/// `⟨f, B_m⟩` for every basis element, exact for the piecewise-linear or
/// piecewise-constant reconstruction of `f`.
pub fn load_vector<T: Real>(f: &SampledFunction<T>, space: &SplineSpace<T>) -> Vec<T> {
    let mut b = vec![T::zero(); space.basis_count];
    space.quadrature(f, space.order + 1, |x, w, s, v| {
        let fx = f.eval(x) * w;
        for (r, bv) in v.iter().enumerate() {
            b[s + r] += fx * *bv;
        }
    });
    b
}

/// `‖f - Σ c_m B_m‖₂` over the window.
pub fn l2_distance<T: Real>(
    f: &SampledFunction<T>,
    space: &SplineSpace<T>,
    coefficients: &[T],
) -> T {
    let mut acc = T::zero();
    space.quadrature(f, space.order + 1, |x, w, s, v| {
        let sx: T = v.iter().zip(&coefficients[s..]).map(|(b, c)| *b * *c).sum();
        let d = f.eval(x) - sx;
        acc += w * d * d;
    });
    acc.sqrt()
}

/// Best `L²` approximation of a sampled function in a [`SplineSpace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SplineApproximation<T: Real> {
    pub space: SplineSpace<T>,
    pub coefficients: Vec<T>,
    pub residual_l2: T,
    /// `max_m |⟨f - s, B_m⟩| / ‖f‖₂`.
    pub orthogonality_defect: T,
    pub condition_estimate: T,
}

impl<T: Real> SplineApproximation<T> {
    pub fn eval(&self, x: T) -> T {
        self.space.eval(&self.coefficients, x)
    }

    /// Rows `knot_index, knot, coefficient`; the knot is the left end of the
    /// element's support.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["knot_index", "knot", "coefficient"]);
        let lead = self.space.order as i64 - 1;
        for (m, c) in self.coefficients.iter().enumerate() {
            let i = m as i64 - lead;
            t.push(vec![
                i.into(),
                Cell::float(self.space.knot(i)),
                Cell::float(*c),
            ]);
        }
        t
    }
}

/// Solves `G c = b` with `b_m = ⟨f, B_m⟩`. `f` must be tabulated at a spacing
/// no coarser than a quarter of the mesh.
pub fn best_l2_spline<T: Real>(
    f: &SampledFunction<T>,
    space: &SplineSpace<T>,
) -> Result<SplineApproximation<T>> {
    if f.grid().spacing() > space.mesh / T::lit(4.0) {
        return Err(Error::GridTooCoarse(format!(
            "function spacing {} exceeds a quarter of the mesh {}",
            f.grid().spacing(),
            space.mesh
        )));
    }
    let gram = gram_matrix(space);
    let chol = gram.cholesky()?;
    let cond = chol.condition_estimate();
    if cond > T::lit(MAX_CONDITION) {
        return Err(Error::IllConditioned(format!(
            "Gram condition estimate {cond:e}"
        )));
    }
    let b = load_vector(f, space);
    let coefficients = chol.solve(&b);
    let gc = gram.mul_vec(&coefficients);
    let worst = b
        .iter()
        .zip(&gc)
        .map(|(x, y)| (*x - *y).abs())
        .fold(T::zero(), T::max);
    let f_norm = l2_distance(f, space, &vec![T::zero(); space.basis_count]);
    let orthogonality_defect = if f_norm > T::zero() {
        worst / f_norm
    } else {
        worst
    };
    if orthogonality_defect > T::tol(ORTHOGONALITY_TOL) {
        return Err(Error::InvariantFailure {
            name: "residual orthogonality",
            detail: format!("relative defect {orthogonality_defect:e}"),
        });
    }
    Ok(SplineApproximation {
        residual_l2: l2_distance(f, space, &coefficients),
        space: space.clone(),
        coefficients,
        orthogonality_defect,
        condition_estimate: cond,
    })
}

/// `-log₂ h` for a mesh that is a power of two.
fn mesh_level(h: f64) -> Option<i32> {
    let l = -h.log2();
    let r = l.round();
    ((l - r).abs() < 1e-9 && r.abs() < 60.0).then_some(r as i32)
}

/// Sup errors of the order-`order` best approximations over a halving
/// sequence of power-of-two meshes, fitted against `-log₂ h`. Errors are
/// measured on the function's window shrunk by `order` times the coarsest
/// mesh, which must be free of jumps.
pub fn spline_convergence_study<T: Real>(
    tf: &TestFunction,
    order: usize,
    meshes: &[f64],
) -> Result<RateReport<T>> {
    let levels: Vec<i32> = meshes
        .iter()
        .map(|&h| {
            mesh_level(h)
                .ok_or_else(|| Error::InvalidArgument(format!("mesh {h} is not a power of two")))
        })
        .collect::<Result<_>>()?;
    if levels.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::InvalidArgument(
            "meshes must halve at every step".into(),
        ));
    }
    let last = *levels
        .last()
        .ok_or_else(|| Error::TooFewPoints("no meshes".into()))?;
    let margin = order as f64 * meshes[0];
    let window = (tf.window.0 + margin, tf.window.1 - margin);
    if !(window.0 < window.1) {
        return Err(Error::InvalidArgument(format!(
            "mesh {} leaves no interior in [{}, {}]",
            meshes[0], tf.window.0, tf.window.1
        )));
    }
    if tf.jump_clearance(window) == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{} jumps inside [{}, {}]",
            tf.name(),
            window.0,
            window.1
        )));
    }
    let f = tf.sample::<T>(DEFAULT_LEVEL.max(last + SAMPLING_MARGIN))?;
    let full = (T::lit(tf.window.0), T::lit(tf.window.1));
    let probe_level = last + SAMPLING_MARGIN;
    let results: Vec<(T, T)> = levels
        .par_iter()
        .map(|&lv| {
            let space = SplineSpace::new(order, T::pow2(-lv), full)?;
            let approx = best_l2_spline(&f, &space)?;
            let step = 0.5f64.powi(probe_level);
            let count = ((window.1 - window.0) / step).floor() as usize;
            let errs: Vec<T> = (0..=count)
                .map(|i| {
                    let x = T::lit(window.0 + i as f64 * step);
                    approx.eval(x) - tf.eval(x)
                })
                .collect();
            let sup = errs.iter().fold(T::zero(), |m, e| m.max(e.abs()));
            let quant = errs
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(T::zero(), T::max);
            Ok((sup, quant))
        })
        .collect::<Result<_>>()?;
    let (sup_errors, quantization) = results.into_iter().unzip();
    RateReport::fit(
        format!("spline:{order}"),
        tf.name().to_string(),
        (T::lit(window.0), T::lit(window.1)),
        levels,
        sup_errors,
        quantization,
    )
}
