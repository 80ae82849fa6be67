//! Pointwise, sup-norm and `L^p` convergence experiments for `P_j f`, and
//! robustness of partial sums to the order of summation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{analyze, partial_sum, validate_schedule, Projection, SummationSchedule};
use crate::export::{Cell, CsvTable};
use crate::families::MraFamily;
use crate::grid::{DecayHint, DyadicGrid, SampledFunction};
use crate::quadrature::fit_line;
use crate::scalar::Real;

/// Extra sampling levels of a test function above the family grid level.
pub const OVERSAMPLING: i32 = 2;

/// How a marked point behaves for its function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    /// `f` is continuous at `x`.
    Continuity,
    /// `f` is discontinuous at `x`, yet `x` is a Lebesgue point.
    LebesgueDiscontinuous,
    /// `f` jumps at `x`; no reference value is asserted.
    Jump,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Continuity => "continuity",
            PointKind::LebesgueDiscontinuous => "lebesgue_discontinuous",
            PointKind::Jump => "jump",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub x: f64,
    pub kind: PointKind,
    pub reference_value: f64,
}

/// The built-in test functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionId {
    /// `e^{-x²}` on `[-6, 6]`.
    Gaussian,
    /// `x 1_{[0,1]}` on `[-2, 2]`.
    Ramp,
    /// `1_{[0,∞)}` on `[-2, 2]`.
    Step,
    /// `|x|^{0.3}` on `[-1, 1]`.
    Cusp,
    /// `1_E`, `E = ∪_{n≥1} [2^{-n}, 2^{-n}(1 + 4^{-n})]`, on `[-1, 1]`.
    OscillatingIndicator,
    /// `sin x` on `[0, 3.25] ⊃ [0, π]`.
    Sine,
}

impl TestFunctionId {
    pub const ALL: [TestFunctionId; 6] = [
        TestFunctionId::Gaussian,
        TestFunctionId::Ramp,
        TestFunctionId::Step,
        TestFunctionId::Cusp,
        TestFunctionId::OscillatingIndicator,
        TestFunctionId::Sine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TestFunctionId::Gaussian => "gaussian",
            TestFunctionId::Ramp => "ramp",
            TestFunctionId::Step => "step",
            TestFunctionId::Cusp => "cusp",
            TestFunctionId::OscillatingIndicator => "oscillating_indicator",
            TestFunctionId::Sine => "sine",
        }
    }
}

impl std::fmt::Display for TestFunctionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TestFunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunctionId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown function `{s}` (expected one of {})",
                    TestFunctionId::ALL.map(|id| id.as_str()).join(", ")
                ))
            })
    }
}

const CUSP_EXPONENT: f64 = 0.3;

/// `measure(E ∩ [0, x])` for the oscillating indicator.
pub fn oscillating_measure(x: f64) -> f64 {
    (1..=60)
        .map(|n| {
            let start = 0.5f64.powi(n);
            let len = 0.125f64.powi(n);
            (x - start).clamp(0.0, len)
        })
        .sum()
}

/// A function with a tabulation window, marked points and a sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub id: TestFunctionId,
    pub window: (f64, f64),
    pub marked_points: Vec<MarkedPoint>,
    /// Abscissae where `f` jumps.
    pub jumps: Vec<f64>,
    pub smoothness: String,
}

impl TestFunction {
    pub fn new(id: TestFunctionId) -> Self {
        let mp = |x: f64, kind, reference_value| MarkedPoint {
            x,
            kind,
            reference_value,
        };
        use PointKind::*;
        let (window, marked_points, jumps, smoothness) = match id {
            TestFunctionId::Gaussian => (
                (-6.0, 6.0),
                vec![
                    mp(0.0, Continuity, 1.0),
                    mp(0.37, Continuity, (-0.37f64 * 0.37).exp()),
                ],
                vec![],
                "analytic",
            ),
            TestFunctionId::Ramp => (
                (-2.0, 2.0),
                vec![
                    mp(0.5, Continuity, 0.5),
                    mp(0.0, Continuity, 0.0),
                    mp(1.0, Jump, 1.0),
                ],
                vec![1.0],
                "Lipschitz on [-2, 1), jump at 1",
            ),
            TestFunctionId::Step => (
                (-2.0, 2.0),
                vec![
                    mp(-0.5, Continuity, 0.0),
                    mp(0.5, Continuity, 1.0),
                    mp(0.0, Jump, 1.0),
                ],
                vec![0.0],
                "piecewise constant, jump at 0",
            ),
            TestFunctionId::Cusp => (
                (-1.0, 1.0),
                vec![
                    mp(0.0, Continuity, 0.0),
                    mp(0.5, Continuity, 0.5f64.powf(CUSP_EXPONENT)),
                ],
                vec![-1.0, 1.0],
                "Hölder 0.3 at 0, jumps at ±1",
            ),
            TestFunctionId::OscillatingIndicator => (
                (-1.0, 1.0),
                vec![
                    mp(0.0, LebesgueDiscontinuous, 0.0),
                    mp(-0.5, Continuity, 0.0),
                ],
                vec![],
                "indicator of a set accumulating at 0 with density o(1)",
            ),
            TestFunctionId::Sine => (
                (0.0, 3.25),
                vec![mp(1.0, Continuity, 1f64.sin())],
                vec![0.0, 3.25],
                "analytic on the window",
            ),
        };
        Self {
            id,
            window,
            marked_points,
            jumps,
            smoothness: smoothness.to_string(),
        }
    }

    pub fn name(&self) -> &'static str {
        self.id.as_str()
    }

    /// Exact value on the half-open window `[a, b)`, zero elsewhere;
    /// indicator-type functions are right-continuous.
    pub fn eval<T: Real>(&self, x: T) -> T {
        let xf = x.to_f64_lossy();
        let (a, b) = self.window;
        if xf < a || xf >= b {
            return T::zero();
        }
        let v = match self.id {
            TestFunctionId::Gaussian => return (-x * x).exp(),
            TestFunctionId::Sine => return x.sin(),
            TestFunctionId::Cusp => return x.abs().powf(T::lit(CUSP_EXPONENT)),
            TestFunctionId::Ramp => {
                if (0.0..1.0).contains(&xf) || xf == 1.0 {
                    return x;
                }
                0.0
            }
            TestFunctionId::Step => f64::from(xf >= 0.0),
            TestFunctionId::OscillatingIndicator => {
                let inside = (1..=60).any(|n| {
                    let start = 0.5f64.powi(n);
                    xf >= start && xf < start + 0.125f64.powi(n)
                });
                f64::from(inside)
            }
        };
        T::lit(v)
    }

    /// Antiderivative from the window's left end, where it has a closed form.
    fn antiderivative<T: Real>(&self) -> Option<impl Fn(T) -> T + '_> {
        let closed = matches!(
            self.id,
            TestFunctionId::Ramp
                | TestFunctionId::Step
                | TestFunctionId::Cusp
                | TestFunctionId::OscillatingIndicator
        );
        closed.then_some(move |x: T| {
            let xf = x.to_f64_lossy();
            let v = match self.id {
                TestFunctionId::Ramp => xf.clamp(0.0, 1.0).powi(2) * 0.5,
                TestFunctionId::Step => xf.max(0.0),
                TestFunctionId::Cusp => {
                    let p = CUSP_EXPONENT + 1.0;
                    let c = xf.clamp(-1.0, 1.0);
                    c.signum() * c.abs().powf(p) / p
                }
                _ => oscillating_measure(xf),
            };
            T::lit(v)
        })
    }

    /// Tabulation at `level`: exact cell averages (step reconstruction) for
    /// the discontinuous functions, point samples (linear) otherwise.
    pub fn sample<T: Real>(&self, level: i32) -> Result<SampledFunction<T>> {
        let grid = DyadicGrid::new(T::lit(self.window.0), T::lit(self.window.1), level)?;
        match self.antiderivative::<T>() {
            Some(anti) => SampledFunction::from_antiderivative(grid, DecayHint::None, anti),
            None => SampledFunction::from_fn(grid, DecayHint::None, |x| self.eval(x)),
        }
    }

    /// Distance from `window` to the nearest jump (infinite without jumps).
    pub fn jump_clearance(&self, window: (f64, f64)) -> f64 {
        self.jumps
            .iter()
            .map(|&p| {
                if p >= window.0 && p <= window.1 {
                    0.0
                } else {
                    (p - window.0).abs().min((p - window.1).abs())
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// The bundled functions (Gaussian, ramp, step, cusp, oscillating indicator,
/// sine).
pub fn builtin_suite() -> Vec<TestFunction> {
    TestFunctionId::ALL
        .into_iter()
        .map(TestFunction::new)
        .collect()
}

/// A test function tabulated once at the oversampled level of a family.
#[derive(Clone, Debug)]
pub struct Target<T: Real> {
    pub function: TestFunction,
    pub sampled: SampledFunction<T>,
}

impl<T: Real> Target<T> {
    pub fn new(function: TestFunction, level: i32) -> Result<Self> {
        let sampled = function.sample(level + OVERSAMPLING)?;
        Ok(Self { function, sampled })
    }

    pub fn for_family(id: TestFunctionId, fam: &MraFamily<T>) -> Result<Self> {
        Self::new(TestFunction::new(id), fam.level())
    }
}

fn window_t<T: Real>(w: (f64, f64)) -> (T, T) {
    (T::lit(w.0), T::lit(w.1))
}

fn check_inside(tf: &TestFunction, window: (f64, f64)) -> Result<()> {
    if !(window.0 <= window.1) || window.0 < tf.window.0 || window.1 > tf.window.1 {
        return Err(Error::WindowOutsideSupport(window.0, window.1));
    }
    Ok(())
}

/// `(j, P_j f(x))` for each `j` in `j_range`.
pub fn pointwise_trace<T: Real>(
    target: &Target<T>,
    fam: &MraFamily<T>,
    x: T,
    j_range: std::ops::RangeInclusive<i32>,
) -> Result<Vec<(i32, T)>> {
    let xf = x.to_f64_lossy();
    check_inside(&target.function, (xf, xf))?;
    j_range
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| Ok((j, Projection::new(&target.sampled, fam, j, (x, x))?.eval(x))))
        .collect()
}

/// Errors `P_j f - f` at the grid points of `window` at the family level.
fn errors_on<T: Real>(
    target: &Target<T>,
    fam: &MraFamily<T>,
    j: i32,
    window: (f64, f64),
) -> Result<(DyadicGrid<T>, Vec<T>)> {
    let (a, b) = window_t::<T>(window);
    let grid = DyadicGrid::covering(a, b, fam.level())?;
    let proj = Projection::new(&target.sampled, fam, j, (grid.left(), grid.right()))?;
    let errs = (0..grid.count())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            proj.eval(x) - target.function.eval(x)
        })
        .collect();
    Ok((grid, errs))
}

/// Per-scale sup errors and the fitted order `r` in `‖P_j f - f‖∞ ≈ c 2^{-jr}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RateReport<T: Real> {
    pub family: String,
    pub function: String,
    pub window: (T, T),
    pub j_values: Vec<i32>,
    pub sup_errors: Vec<T>,
    /// `2^{-L}` times the largest difference quotient of the error, per scale.
    pub quantization: Vec<T>,
    /// `r = -d log₂(error) / dj`.
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

impl<T: Real> RateReport<T> {
    pub(crate) fn fit(
        family: String,
        function: String,
        window: (T, T),
        j_values: Vec<i32>,
        sup_errors: Vec<T>,
        quantization: Vec<T>,
    ) -> Result<Self> {
        let usable: Vec<(T, T)> = j_values
            .iter()
            .zip(&sup_errors)
            .filter(|(_, e)| **e > T::zero() && e.is_finite())
            .map(|(j, e)| (T::from_int(*j as i64), e.log2()))
            .collect();
        if usable.len() < 4 {
            return Err(Error::TooFewPoints(format!(
                "{} scales with a positive finite error; a rate needs 4",
                usable.len()
            )));
        }
        let (xs, ys): (Vec<T>, Vec<T>) = usable.into_iter().unzip();
        let fit = fit_line(&xs, &ys)?;
        Ok(Self {
            family,
            function,
            window,
            j_values,
            sup_errors,
            quantization,
            slope: -fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
        })
    }

    /// Rows `family, function, j, sup_error, quantization`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["family", "function", "j", "sup_error", "quantization"]);
        for i in 0..self.j_values.len() {
            t.push(vec![
                self.family.as_str().into(),
                self.function.as_str().into(),
                self.j_values[i].into(),
                Cell::float(self.sup_errors[i]),
                Cell::float(self.quantization[i]),
            ]);
        }
        t
    }
}

/// Sup-norm errors over `window` (grid at the family level) for each `j`,
/// and their log-linear fit. `window` must clear every jump by `2^{-min j}`.
pub fn sup_error_rates<T: Real>(
    target: &Target<T>,
    fam: &MraFamily<T>,
    j_range: std::ops::RangeInclusive<i32>,
    window: (f64, f64),
) -> Result<RateReport<T>> {
    let tf = &target.function;
    check_inside(tf, window)?;
    let j_values: Vec<i32> = j_range.collect();
    if j_values.len() < 4 {
        return Err(Error::TooFewPoints(format!(
            "{} scales requested; a rate needs 4",
            j_values.len()
        )));
    }
    let margin = 0.5f64.powi(j_values[0]);
    let clearance = tf.jump_clearance(window);
    if clearance < margin {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] is within {clearance} of a jump of {}; needs {margin}",
            window.0,
            window.1,
            tf.name()
        )));
    }
    let mut sup_errors = Vec::new();
    let mut quantization = Vec::new();
    for &j in &j_values {
        let (_, errs) = errors_on(target, fam, j, window)?;
        sup_errors.push(errs.iter().fold(T::zero(), |m, e| m.max(e.abs())));
        // spacing times the largest difference quotient
        let max_step = errs
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(T::zero(), T::max);
        quantization.push(max_step);
    }
    RateReport::fit(
        fam.spec().to_string(),
        tf.name().to_string(),
        window_t(window),
        j_values,
        sup_errors,
        quantization,
    )
}

/// Which discrete norm [`lp_error_trace`] reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
    LInf,
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Norm::L1),
            "2" => Ok(Norm::L2),
            "inf" | "infinity" => Ok(Norm::LInf),
            other => Err(Error::InvalidArgument(format!(
                "p must be 1, 2 or inf, got `{other}`"
            ))),
        }
    }
}

/// Discrete `L^p` norm `(h Σ |e_i|^p)^{1/p}` (or `max |e_i|`) of `P_j f - f`
/// on the window grid, per `j`. Jumps inside the window are allowed.
pub fn lp_error_trace<T: Real>(
    target: &Target<T>,
    fam: &MraFamily<T>,
    p: Norm,
    j_range: std::ops::RangeInclusive<i32>,
    window: (f64, f64),
) -> Result<Vec<(i32, T)>> {
    check_inside(&target.function, window)?;
    j_range
        .map(|j| {
            let (grid, errs) = errors_on(target, fam, j, window)?;
            let h = grid.spacing();
            let v = match p {
                Norm::L1 => errs.iter().map(|e| e.abs()).sum::<T>() * h,
                Norm::L2 => (errs.iter().map(|e| *e * *e).sum::<T>() * h).sqrt(),
                Norm::LInf => errs.iter().fold(T::zero(), |m, e| m.max(e.abs())),
            };
            Ok((j, v))
        })
        .collect()
}

/// Partial sums of several complete schedules at chosen points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RobustnessReport<T: Real> {
    pub family: String,
    pub function: String,
    pub x_points: Vec<T>,
    /// Per prefix fraction `ρ`: the largest spread across schedules of the
    /// partial sums at any point.
    pub prefix_dispersion: Vec<(T, T)>,
    /// Spread of the complete sums.
    pub final_spread: T,
    /// `final_spread < 1e-10`.
    pub agrees: bool,
}

pub const PREFIX_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Evaluates every schedule's prefixes at `x_points` (a dyadic grid). Each
/// schedule must pass [`validate_schedule`] and be complete for the
/// coefficients of `f` over `j0 .. j1`.
pub fn order_robustness<T: Real>(
    target: &Target<T>,
    fam: &MraFamily<T>,
    j0: i32,
    j1: i32,
    schedules: &[SummationSchedule],
    x_points: DyadicGrid<T>,
) -> Result<RobustnessReport<T>> {
    for (i, s) in schedules.iter().enumerate() {
        let report = validate_schedule(s);
        if !report.valid {
            return Err(Error::ScheduleRejected(format!(
                "schedule {i} reaches a partially complete range of {} levels at prefix {}, above its bound {}",
                report.max_range, report.worst_prefix, report.bounded_range
            )));
        }
    }
    let window = (x_points.left(), x_points.right());
    let coeffs = analyze(&target.sampled, fam, j0, j1, window)?;
    for (i, s) in schedules.iter().enumerate() {
        if !s.is_complete_for(&coeffs) {
            return Err(Error::ScheduleRejected(format!(
                "schedule {i} is not a complete ordering of the {} coefficients",
                coeffs.len()
            )));
        }
    }
    let mut prefix_dispersion = Vec::new();
    let mut final_spread = T::zero();
    for rho in PREFIX_FRACTIONS {
        let sums = schedules
            .iter()
            .map(|s| {
                let n = (rho * s.len() as f64).round() as usize;
                partial_sum(&coeffs, fam, &s.prefix(n), x_points)
            })
            .collect::<Result<Vec<_>>>()?;
        let spread = (0..x_points.count())
            .map(|i| {
                let vals = sums.iter().map(|f| f.values()[i]);
                let hi = vals.clone().fold(T::neg_infinity(), T::max);
                let lo = vals.fold(T::infinity(), T::min);
                hi - lo
            })
            .fold(T::zero(), T::max);
        if rho == 1.0 {
            final_spread = spread;
        }
        prefix_dispersion.push((T::lit(rho), spread));
    }
    Ok(RobustnessReport {
        family: fam.spec().to_string(),
        function: target.function.name().to_string(),
        x_points: x_points.points().collect(),
        prefix_dispersion,
        final_spread,
        agrees: final_spread < T::tol(1e-10),
    })
}

/// Rows `family, function, x, kind, j, value, error` for every marked point.
pub fn trace_csv<T: Real>(
    fam: &MraFamily<T>,
    target: &Target<T>,
    point: &MarkedPoint,
    trace: &[(i32, T)],
) -> CsvTable {
    let mut t = CsvTable::new(["family", "function", "x", "kind", "j", "value", "error"]);
    for &(j, v) in trace {
        t.push(vec![
            fam.spec().to_string().into(),
            target.function.name().into(),
            point.x.into(),
            point.kind.as_str().into(),
            j.into(),
            Cell::float(v),
            Cell::float(v - T::lit(point.reference_value)),
        ]);
    }
    t
}
