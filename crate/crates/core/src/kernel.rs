//! Projection kernels `P_j(x, y) = Σ_k φ_{jk}(x) φ_{jk}(y)`, their rescaled
//! radial majorants, and decay-model fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::translate_range;
use crate::export::{Cell, CsvTable};
use crate::families::{FamilySpec, MraFamily};
use crate::grid::{DecayHint, Dilate, DyadicGrid, SampledFunction};
use crate::quadrature::{fit_line, r_squared};
use crate::scalar::Real;

/// Points per unit of the rescaled distance `u = 2^j |x - y|` is `2^QUANTUM`.
pub const QUANTUM: i32 = 6;
/// Largest rescaled distance tabulated.
pub const MAX_RADIUS: i64 = 64;

/// Largest number of matrix cells a single evaluation may allocate.
const MAX_CELLS: usize = 1 << 26;

/// `P_j(x, y)` on `xs × ys`, row-major in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelEvaluation<T: Real> {
    pub family: FamilySpec,
    pub j: i32,
    pub xs: DyadicGrid<T>,
    pub ys: DyadicGrid<T>,
    pub values: Vec<T>,
}

impl<T: Real> KernelEvaluation<T> {
    pub fn get(&self, ix: usize, iy: usize) -> T {
        self.values[ix * self.ys.count() + iy]
    }

    /// Rows `x, y, value`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["x", "y", "value"]);
        for ix in 0..self.xs.count() {
            for iy in 0..self.ys.count() {
                t.push(vec![
                    Cell::float(self.xs.point(ix)),
                    Cell::float(self.ys.point(iy)),
                    Cell::float(self.get(ix, iy)),
                ]);
            }
        }
        t
    }
}

/// Nonzero `(k, g_{jk}(x))` pairs at `x`.
fn active<T: Real>(g: &SampledFunction<T>, j: i32, x: T) -> Vec<(i64, T)> {
    let (lo, hi) = translate_range(g.support(), j, (x, x));
    (lo - 1..=hi + 1)
        .filter_map(|k| {
            let v = Dilate::new(g, j, k).eval(x);
            (v != T::zero()).then_some((k, v))
        })
        .collect()
}

fn sparse_dot<T: Real>(a: &[(i64, T)], b: &[(i64, T)]) -> T {
    let (mut i, mut j) = (0, 0);
    let mut acc = T::zero();
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn check_size<T: Real>(xs: &DyadicGrid<T>, ys: &DyadicGrid<T>) -> Result<()> {
    if xs.count().saturating_mul(ys.count()) > MAX_CELLS {
        return Err(Error::InvalidArgument(format!(
            "kernel matrix of {} x {} cells exceeds the limit of {MAX_CELLS}",
            xs.count(),
            ys.count()
        )));
    }
    Ok(())
}

fn matrix_from<T: Real>(
    xs: &DyadicGrid<T>,
    ys: &DyadicGrid<T>,
    columns: impl Fn(T) -> Vec<(i64, T)> + Sync,
    pair: impl Fn(&[(i64, T)], &[(i64, T)]) -> T + Sync,
) -> Vec<T> {
    let ycols: Vec<Vec<(i64, T)>> = (0..ys.count())
        .into_par_iter()
        .map(|i| columns(ys.point(i)))
        .collect();
    (0..xs.count())
        .into_par_iter()
        .flat_map_iter(|ix| {
            let xc = columns(xs.point(ix));
            ycols.iter().map(|yc| pair(&xc, yc)).collect::<Vec<_>>()
        })
        .collect()
}

/// `P_j(x, y)` over every translate whose support meets either grid. Because
/// each tabulated `φ` is zero beyond its grid, the sum is exact for the
/// tabulated family.
pub fn kernel_matrix<T: Real>(
    fam: &MraFamily<T>,
    j: i32,
    xs: DyadicGrid<T>,
    ys: DyadicGrid<T>,
) -> Result<KernelEvaluation<T>> {
    check_size(&xs, &ys)?;
    let phi = fam.phi();
    let values = matrix_from(&xs, &ys, |x| active(phi, j, x), sparse_dot);
    Ok(KernelEvaluation {
        family: fam.spec(),
        j,
        xs,
        ys,
        values,
    })
}

/// `Σ_k |φ_{j0,k}(x)| |φ_{j0,k}(y)| + Σ_{j0 <= j' < j} Σ_k |ψ_{j'k}(x)| |ψ_{j'k}(y)|`:
/// the absolute-value majorant built term by term from the wavelet sum.
pub fn naive_abs_kernel<T: Real>(
    fam: &MraFamily<T>,
    j0: i32,
    j: i32,
    xs: DyadicGrid<T>,
    ys: DyadicGrid<T>,
) -> Result<KernelEvaluation<T>> {
    check_size(&xs, &ys)?;
    if j <= j0 {
        return Err(Error::InvalidArgument(format!(
            "j ({j}) must exceed j0 ({j0})"
        )));
    }
    let columns = |x: T| -> Vec<(i64, T)> {
        // interleave (level, k) into one sortable key
        let mut out: Vec<(i64, T)> = active(fam.phi(), j0, x)
            .into_iter()
            .map(|(k, v)| (encode(j0 - 1, k), v.abs()))
            .collect();
        for level in j0..j {
            out.extend(
                active(fam.psi(), level, x)
                    .into_iter()
                    .map(|(k, v)| (encode(level, k), v.abs())),
            );
        }
        out.sort_by_key(|p| p.0);
        out
    };
    let values = matrix_from(&xs, &ys, columns, sparse_dot);
    Ok(KernelEvaluation {
        family: fam.spec(),
        j,
        xs,
        ys,
        values,
    })
}

fn encode(level: i32, k: i64) -> i64 {
    ((level as i64 + 64) << 40) + (k + (1 << 39))
}

/// Nonincreasing majorant `M(u)` of `|P_j(x, y)| / 2^j` as a function of the
/// rescaled distance `u = 2^j |x - y|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RadialBound<T: Real> {
    pub radii: Vec<T>,
    pub majorant: Vec<T>,
    /// `C = M(0)`.
    pub constant: T,
    /// `2 ∫_0^U M(u) du` by the trapezoid rule.
    pub l1_mass: T,
    /// Estimated `2 ∫_U^∞ M`; infinite when the tail decays no faster than `1/u`.
    pub tail_estimate: T,
}

impl<T: Real> RadialBound<T> {
    fn from_profile(radii: Vec<T>, majorant: Vec<T>) -> Self {
        let du = radii.get(1).map_or(T::one(), |&r| r - radii[0]);
        let n = majorant.len();
        let l1_mass = if n < 2 {
            T::zero()
        } else {
            let inner: T = majorant[1..n - 1].iter().copied().sum();
            T::lit(2.0) * du * (inner + (majorant[0] + majorant[n - 1]) * T::lit(0.5))
        };
        let constant = majorant.first().copied().unwrap_or_else(T::zero);
        let tail_estimate = tail_estimate(&radii, &majorant, constant);
        Self {
            radii,
            majorant,
            constant,
            l1_mass,
            tail_estimate,
        }
    }

    /// Finite mass with a tail below 10% of the tabulated mass.
    pub fn is_integrable(&self) -> bool {
        self.tail_estimate.is_finite() && self.tail_estimate < T::lit(0.1) * self.l1_mass
    }

    /// `M(u)` at the tabulated radius at or below `u`.
    pub fn at(&self, u: T) -> T {
        let du = self.radii[1] - self.radii[0];
        let i = (u / du).floor().to_usize().unwrap_or(0);
        self.majorant.get(i).copied().unwrap_or_else(T::zero)
    }

    /// Rows `u, M`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["u", "M"]);
        for (u, m) in self.radii.iter().zip(&self.majorant) {
            t.push(vec![Cell::float(*u), Cell::float(*m)]);
        }
        t
    }
}

/// Zero when the majorant has died out by `3U/4`; otherwise a power law
/// `c u^{-p}` fitted on `[U/8, U/2]` is integrated from `U/2` to infinity.
/// The last quarter is ignored because truncated tabulations vanish there.
fn tail_estimate<T: Real>(radii: &[T], majorant: &[T], constant: T) -> T {
    let n = radii.len();
    if n < 8 {
        return T::zero();
    }
    if !(majorant[3 * n / 4] > constant * T::tol(1e-12)) {
        return T::zero();
    }
    let u_max = radii[n - 1];
    let (xs, ys): (Vec<T>, Vec<T>) = radii
        .iter()
        .zip(majorant)
        .filter(|(u, m)| {
            **u >= u_max / T::lit(8.0) && **u <= u_max / T::lit(2.0) && **m > T::zero()
        })
        .map(|(u, m)| (u.ln(), m.ln()))
        .unzip();
    let half = n / 2;
    match fit_line(&xs, &ys) {
        Ok(fit) if -fit.slope > T::one() => {
            T::lit(2.0) * majorant[half] * radii[half] / (-fit.slope - T::one())
        }
        _ => T::infinity(),
    }
}

/// Running maximum from the largest radius inward of the binned `|P|/2^j`.
pub fn radial_profile<T: Real>(ke: &KernelEvaluation<T>) -> RadialBound<T> {
    let level = ke.xs.level().max(ke.ys.level());
    let scale = T::pow2(ke.j);
    let bins_per_unit = T::pow2(level - ke.j);
    let mut raw: Vec<T> = Vec::new();
    for ix in 0..ke.xs.count() {
        let x = ke.xs.point(ix);
        for iy in 0..ke.ys.count() {
            let u = scale * (x - ke.ys.point(iy)).abs();
            let bin = (u * bins_per_unit).round().to_usize().unwrap();
            if bin >= raw.len() {
                raw.resize(bin + 1, T::zero());
            }
            raw[bin] = raw[bin].max(ke.get(ix, iy).abs() / scale);
        }
    }
    for i in (0..raw.len().saturating_sub(1)).rev() {
        raw[i] = raw[i].max(raw[i + 1]);
    }
    let radii = (0..raw.len())
        .map(|i| T::from_usize(i).unwrap() / bins_per_unit)
        .collect();
    RadialBound::from_profile(radii, raw)
}

/// Half-width (in units of `2^-j`) of the `y` window used for profiles.
/// For a slowly decaying family the kernel near the truncation radius `R`
/// misses the cancellation of the cut translates, so profiles stop at `3R/4`.
pub fn profile_radius<T: Real>(fam: &MraFamily<T>) -> i64 {
    let (a, b) = fam.phi().support();
    let width = (b - a).ceil().to_i64().unwrap();
    match fam.decay_class() {
        DecayHint::Compact => width + 1,
        DecayHint::Algebraic { .. } => (width * 3 / 8).min(MAX_RADIUS),
        _ => width.min(MAX_RADIUS),
    }
}

/// Kernel on one period `x ∈ [0, 2^-j]` against `y` within `radius · 2^-j`,
/// sampled at level `j + QUANTUM`. Shift invariance by `2^-j` makes one
/// period of `x` representative.
pub fn period_kernel<T: Real>(
    fam: &MraFamily<T>,
    j: i32,
    radius: i64,
) -> Result<KernelEvaluation<T>> {
    let (xs, ys) = period_grids(j, radius)?;
    kernel_matrix(fam, j, xs, ys)
}

fn period_grids<T: Real>(j: i32, radius: i64) -> Result<(DyadicGrid<T>, DyadicGrid<T>)> {
    let h = T::pow2(-j);
    let level = j + QUANTUM;
    let xs = DyadicGrid::new(T::zero(), h, level)?;
    let ys = DyadicGrid::new(-T::from_int(radius) * h, T::from_int(radius + 1) * h, level)?;
    Ok((xs, ys))
}

/// Outcome of [`verify_convolution_bound`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConvolutionBoundReport<T: Real> {
    pub family: String,
    pub levels: Vec<i32>,
    /// `max_j sup_u |M_j(u) - H(u)| / H(0)`.
    pub collapse_defect: T,
    /// The envelope `H = max_j M_j`.
    pub envelope: RadialBound<T>,
    pub l1_mass: T,
    pub tail_estimate: T,
    pub passes: bool,
}

/// Profiles per level, their envelope, and the finiteness verdict.
pub fn verify_convolution_bound<T: Real>(
    fam: &MraFamily<T>,
    levels: &[i32],
) -> Result<ConvolutionBoundReport<T>> {
    if levels.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 levels, got {}",
            levels.len()
        )));
    }
    let radius = profile_radius(fam);
    let profiles = levels
        .iter()
        .map(|&j| period_kernel(fam, j, radius).map(|ke| radial_profile(&ke)))
        .collect::<Result<Vec<_>>>()?;
    envelope_report(fam.spec().to_string(), levels, profiles)
}

fn envelope_report<T: Real>(
    family: String,
    levels: &[i32],
    profiles: Vec<RadialBound<T>>,
) -> Result<ConvolutionBoundReport<T>> {
    let radii = profiles[0].radii.clone();
    if profiles.iter().any(|p| p.radii != radii) {
        return Err(Error::InvalidArgument(
            "profiles were tabulated on different radius grids".into(),
        ));
    }
    let mut env = vec![T::zero(); radii.len()];
    for p in &profiles {
        for (e, m) in env.iter_mut().zip(&p.majorant) {
            *e = e.max(*m);
        }
    }
    let h0 = env[0];
    let collapse_defect = profiles
        .iter()
        .flat_map(|p| p.majorant.iter().zip(&env).map(|(m, e)| (*e - *m).abs()))
        .fold(T::zero(), T::max)
        / h0;
    let envelope = RadialBound::from_profile(radii, env);
    Ok(ConvolutionBoundReport {
        family,
        levels: levels.to_vec(),
        collapse_defect,
        l1_mass: envelope.l1_mass,
        tail_estimate: envelope.tail_estimate,
        passes: envelope.is_integrable(),
        envelope,
    })
}

/// Profile of the absolute-value wavelet majorant at levels `j ∈ levels`,
/// each summed from `j0 = j - depth`. A diagnostic: its tail decays like
/// `1/u`, so no integrable envelope exists.
pub fn naive_bound<T: Real>(
    fam: &MraFamily<T>,
    levels: &[i32],
    depth: i32,
) -> Result<ConvolutionBoundReport<T>> {
    if levels.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 levels, got {}",
            levels.len()
        )));
    }
    let radius = profile_radius(fam);
    let profiles = levels
        .iter()
        .map(|&j| {
            let (xs, ys) = period_grids(j, radius)?;
            naive_abs_kernel(fam, j - depth, j, xs, ys).map(|ke| radial_profile(&ke))
        })
        .collect::<Result<Vec<_>>>()?;
    envelope_report(
        format!("{} (absolute wavelet sum)", fam.spec()),
        levels,
        profiles,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", bound = "")]
pub enum DecayModel<T: Real> {
    /// `M(u) ≈ C e^{-a u / 2}`.
    Exponential,
    /// `M(u) ≈ C_N / (1 + u)^N` with `N` fixed.
    Algebraic { order: T },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DecayFit<T: Real> {
    pub model: DecayModel<T>,
    pub constant: T,
    /// Fitted `a` for the exponential model; `None` for the algebraic model.
    pub rate: Option<T>,
    pub r_squared: T,
    pub points: usize,
    /// Set when the exponential fit gives `a <= 0`.
    pub model_mismatch: bool,
}

/// Least-squares fit of `log M` over radii in `range` (default: all) where
/// `M > 1e-12 C`.
pub fn fit_decay<T: Real>(
    rb: &RadialBound<T>,
    model: DecayModel<T>,
    range: Option<(T, T)>,
) -> Result<DecayFit<T>> {
    let floor = rb.constant * T::tol(1e-12);
    let (lo, hi) = range.unwrap_or((T::neg_infinity(), T::infinity()));
    let (us, logs): (Vec<T>, Vec<T>) = rb
        .radii
        .iter()
        .zip(&rb.majorant)
        .filter(|(u, m)| **m > floor && **u >= lo && **u <= hi)
        .map(|(u, m)| (*u, m.ln()))
        .unzip();
    if us.len() < 20 {
        return Err(Error::TooFewPoints(format!(
            "{} radii with M(u) > 1e-12 C; the fit needs 20",
            us.len()
        )));
    }
    match model {
        DecayModel::Exponential => {
            let fit = fit_line(&us, &logs)?;
            let a = -T::lit(2.0) * fit.slope;
            Ok(DecayFit {
                model,
                constant: fit.intercept.exp(),
                rate: Some(a),
                r_squared: fit.r_squared,
                points: us.len(),
                model_mismatch: !(a > T::tol(1e-9)),
            })
        }
        DecayModel::Algebraic { order } => {
            let shift: Vec<T> = us.iter().map(|u| order * (T::one() + *u).ln()).collect();
            let n = T::from_usize(us.len()).unwrap();
            let log_c = logs.iter().zip(&shift).map(|(l, s)| *l + *s).sum::<T>() / n;
            let fitted: Vec<T> = shift.iter().map(|s| log_c - *s).collect();
            Ok(DecayFit {
                model,
                constant: log_c.exp(),
                rate: None,
                r_squared: r_squared(&logs, &fitted),
                points: us.len(),
                model_mismatch: false,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_family, FamilySpec};

    #[test]
    fn haar_kernel_values() {
        let fam = make_family::<f64>(FamilySpec::haar()).unwrap();
        let g = |a: f64, b: f64| DyadicGrid::new(a, b, 4).unwrap();
        let at = |j: i32, x: f64, y: f64| {
            let ke = kernel_matrix(&fam, j, g(x, x + 1.0), g(y, y + 1.0)).unwrap();
            ke.get(0, 0)
        };
        assert_eq!(at(0, 0.3125, 0.625), 1.0);
        assert_eq!(at(1, 0.3125, 0.625), 0.0);
        assert_eq!(at(2, 0.3125, 0.3125), 4.0);
    }

    #[test]
    fn haar_profile_is_unit_box() {
        let fam = make_family::<f64>(FamilySpec::haar()).unwrap();
        let ke = period_kernel(&fam, 2, profile_radius(&fam)).unwrap();
        let rb = radial_profile(&ke);
        assert_eq!(rb.constant, 1.0);
        assert_eq!(rb.at(0.99), 1.0);
        assert_eq!(rb.at(1.0), 0.0);
        assert_eq!(rb.tail_estimate, 0.0);
    }
}
