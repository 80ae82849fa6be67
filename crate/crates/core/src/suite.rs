//! The acceptance battery: twelve numbered criteria, each with an expected
//! and an observed value, plus the artifacts they produce.

use std::collections::BTreeMap;
use std::path::Path;
use std::rc::Rc;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convergence::{
    lp_error_trace, order_robustness, pointwise_trace, sup_error_rates, trace_csv, Norm,
    RateReport, Target, TestFunction, TestFunctionId,
};
use crate::error::{Error, Result};
use crate::expansion::{analyze, Projection, SummationSchedule};
use crate::export::{json_text, write_atomic, Cell, CsvTable};
use crate::families::{make_family_at, FamilySpec, MraFamily, DEFAULT_LEVEL};
use crate::grid::DyadicGrid;
use crate::kernel::{
    fit_decay, period_kernel, profile_radius, radial_profile, verify_convolution_bound, DecayModel,
};
use crate::quadrature::GaussLegendre;
use crate::sobolev::{critical_order, scaling_critical_order, CriticalOrder};
use crate::spline::{best_l2_spline, l2_distance, spline_convergence_study, SplineSpace};

/// Seed of the spline optimality perturbations unless overridden.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Criteria are grouped by the module they exercise; `--only` selects groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Families,
    Expansion,
    Kernel,
    Convergence,
    Sobolev,
    Spline,
    Determinism,
}

impl Group {
    pub const ALL: [Group; 7] = [
        Group::Families,
        Group::Expansion,
        Group::Kernel,
        Group::Convergence,
        Group::Sobolev,
        Group::Spline,
        Group::Determinism,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Families => "families",
            Group::Expansion => "expansion",
            Group::Kernel => "kernel",
            Group::Convergence => "convergence",
            Group::Sobolev => "sobolev",
            Group::Spline => "spline",
            Group::Determinism => "determinism",
        }
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Group::ALL.iter().map(|g| g.as_str()).collect();
                Error::InvalidArgument(format!(
                    "unknown criterion group `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// A documented failure that does not affect the suite verdict.
    ExpectedFail,
    /// A documented failure that unexpectedly passed.
    UnexpectedPass,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::ExpectedFail => "expected-fail",
            Status::UnexpectedPass => "unexpected-pass",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Sampling level of every family.
    pub level: i32,
    pub seed: u64,
    /// Groups to run; empty runs everything.
    pub groups: Vec<Group>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            level: DEFAULT_LEVEL,
            seed: DEFAULT_SEED,
            groups: Vec::new(),
        }
    }
}

/// One row of the summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub criterion: String,
    pub group: Group,
    pub title: String,
    pub expected: String,
    pub observed: String,
    pub status: Status,
    /// Wall-clock time; kept out of every written file.
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub outcomes: Vec<Outcome>,
    /// Artifact file name to contents.
    pub files: BTreeMap<String, String>,
}

impl SuiteReport {
    /// True unless some criterion has status [`Status::Fail`].
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.status != Status::Fail)
    }

    pub fn failures(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.status == Status::Fail)
            .count()
    }

    /// Rows `criterion, title, expected, observed, status`.
    pub fn summary_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["criterion", "title", "expected", "observed", "status"]);
        for o in &self.outcomes {
            t.push(vec![
                o.criterion.as_str().into(),
                o.title.as_str().into(),
                o.expected.as_str().into(),
                o.observed.as_str().into(),
                o.status.as_str().into(),
            ]);
        }
        t
    }

    /// `summary.csv`, `summary.json` and every artifact, each written
    /// atomically into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in &self.files {
            write_atomic(&dir.join(name), text.as_bytes())?;
        }
        write_atomic(
            &dir.join("summary.csv"),
            self.summary_csv().render().as_bytes(),
        )?;
        write_atomic(
            &dir.join("summary.json"),
            json_text(&self.outcomes)?.as_bytes(),
        )?;
        Ok(())
    }

    pub fn headline(&self) -> String {
        let passed = self
            .outcomes
            .iter()
            .filter(|o| o.status == Status::Pass)
            .count();
        let expected = self
            .outcomes
            .iter()
            .filter(|o| o.status == Status::ExpectedFail)
            .count();
        let mut s = format!("{passed}/{} criteria passed", self.outcomes.len());
        if expected > 0 {
            s.push_str(&format!(", {expected} expected failure"));
        }
        s
    }
}

/// Result of one criterion before it is stamped with its identity.
struct Check {
    expected: String,
    observed: String,
    pass: bool,
    files: Vec<(String, String)>,
}

type CriterionFn = fn(&mut Context) -> Result<Check>;

struct Criterion {
    id: &'static str,
    group: Group,
    title: &'static str,
    expected_fail: bool,
    run: CriterionFn,
}

const CRITERIA: [Criterion; 13] = [
    Criterion {
        id: "1",
        group: Group::Families,
        title: "MRA invariants",
        expected_fail: false,
        run: mra_invariants,
    },
    Criterion {
        id: "2",
        group: Group::Expansion,
        title: "Haar projection equals cell averages",
        expected_fail: false,
        run: haar_oracle,
    },
    Criterion {
        id: "3",
        group: Group::Kernel,
        title: "kernel convolution bound",
        expected_fail: false,
        run: convolution_bound,
    },
    Criterion {
        id: "3-shannon",
        group: Group::Kernel,
        title: "Shannon kernel convolution bound",
        expected_fail: true,
        run: shannon_bound,
    },
    Criterion {
        id: "4",
        group: Group::Kernel,
        title: "exponential kernel decay",
        expected_fail: false,
        run: exponential_decay,
    },
    Criterion {
        id: "5",
        group: Group::Convergence,
        title: "Lebesgue-point convergence",
        expected_fail: false,
        run: lebesgue_point,
    },
    Criterion {
        id: "6",
        group: Group::Expansion,
        title: "summation-order robustness",
        expected_fail: false,
        run: summation_order,
    },
    Criterion {
        id: "7",
        group: Group::Convergence,
        title: "rate slopes",
        expected_fail: false,
        run: rate_slopes,
    },
    Criterion {
        id: "8",
        group: Group::Sobolev,
        title: "critical orders",
        expected_fail: false,
        run: critical_orders,
    },
    Criterion {
        id: "9",
        group: Group::Sobolev,
        title: "rate and criterion consistency",
        expected_fail: false,
        run: rate_criterion_consistency,
    },
    Criterion {
        id: "10",
        group: Group::Convergence,
        title: "L^p convergence at a jump",
        expected_fail: false,
        run: lp_convergence,
    },
    Criterion {
        id: "11",
        group: Group::Spline,
        title: "spline convergence",
        expected_fail: false,
        run: spline_convergence,
    },
    Criterion {
        id: "12",
        group: Group::Determinism,
        title: "determinism",
        expected_fail: false,
        run: |_| unreachable!(),
    },
];

/// Families, rate reports and critical orders shared between criteria.
struct Context {
    level: i32,
    seed: u64,
    families: BTreeMap<String, Rc<MraFamily<f64>>>,
    rates: BTreeMap<String, RateReport<f64>>,
    orders: BTreeMap<String, CriticalOrder<f64>>,
}

impl Context {
    fn new(cfg: &SuiteConfig) -> Self {
        Self {
            level: cfg.level,
            seed: cfg.seed,
            families: BTreeMap::new(),
            rates: BTreeMap::new(),
            orders: BTreeMap::new(),
        }
    }

    fn family(&mut self, spec: &str) -> Result<Rc<MraFamily<f64>>> {
        if let Some(f) = self.families.get(spec) {
            return Ok(f.clone());
        }
        let fam = Rc::new(make_family_at(spec.parse::<FamilySpec>()?, self.level)?);
        self.families.insert(spec.to_string(), fam.clone());
        Ok(fam)
    }

    /// Gaussian sup-error rate on `[-1, 1]` over `j = 3..9`.
    fn gaussian_rate(&mut self, spec: &str) -> Result<RateReport<f64>> {
        if let Some(r) = self.rates.get(spec) {
            return Ok(r.clone());
        }
        let fam = self.family(spec)?;
        let target = Target::for_family(TestFunctionId::Gaussian, &fam)?;
        let r = sup_error_rates(&target, &fam, 3..=9, (-1.0, 1.0))?;
        self.rates.insert(spec.to_string(), r.clone());
        Ok(r)
    }

    fn critical(&mut self, spec: &str, epsilon: f64, scaling: bool) -> Result<CriticalOrder<f64>> {
        let key = format!("{spec}/{epsilon}/{scaling}");
        if let Some(c) = self.orders.get(&key) {
            return Ok(c.clone());
        }
        let fam = self.family(spec)?;
        let c = if scaling {
            scaling_critical_order(&fam, epsilon)?
        } else {
            critical_order(&fam, epsilon)?
        };
        self.orders.insert(key, c.clone());
        Ok(c)
    }
}

/// Runs the selected criteria. Criterion 12 repeats the other selected
/// criteria from scratch (all of them when it is selected alone) and
/// compares every artifact byte for byte.
pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let selected: Vec<&Criterion> = CRITERIA
        .iter()
        .filter(|c| cfg.groups.is_empty() || cfg.groups.contains(&c.group))
        .collect();
    let computed: Vec<&Criterion> = selected
        .iter()
        .copied()
        .filter(|c| c.group != Group::Determinism)
        .collect();
    let mut report = run_pass(cfg, &computed);
    if let Some(det) = selected.iter().find(|c| c.group == Group::Determinism) {
        let start = Instant::now();
        let scope: Vec<&Criterion> = if computed.is_empty() {
            CRITERIA
                .iter()
                .filter(|c| c.group != Group::Determinism)
                .collect()
        } else {
            computed
        };
        let first = if report.outcomes.is_empty() {
            run_pass(cfg, &scope)
        } else {
            report.clone()
        };
        let second = run_pass(cfg, &scope);
        let mut differing: Vec<String> = first
            .files
            .iter()
            .filter(|(name, text)| second.files.get(*name) != Some(*text))
            .map(|(name, _)| name.clone())
            .collect();
        differing.extend(
            second
                .files
                .keys()
                .filter(|n| !first.files.contains_key(*n))
                .cloned(),
        );
        let rows_match = first.summary_csv().render() == second.summary_csv().render();
        let pass = differing.is_empty() && rows_match;
        let observed = if pass {
            format!(
                "{} artifacts and the summary identical across two runs",
                first.files.len()
            )
        } else {
            format!(
                "differing artifacts: [{}]; summary rows {}",
                differing.join(" "),
                if rows_match { "identical" } else { "differ" }
            )
        };
        report.outcomes.push(Outcome {
            criterion: det.id.to_string(),
            group: det.group,
            title: det.title.to_string(),
            expected: "byte-identical artifacts from two consecutive runs".to_string(),
            observed,
            status: if pass { Status::Pass } else { Status::Fail },
            elapsed: start.elapsed(),
        });
    }
    report
}

fn run_pass(cfg: &SuiteConfig, criteria: &[&Criterion]) -> SuiteReport {
    let mut ctx = Context::new(cfg);
    let mut report = SuiteReport::default();
    for c in criteria {
        let start = Instant::now();
        let (expected, observed, pass, files) = match (c.run)(&mut ctx) {
            Ok(check) => (check.expected, check.observed, check.pass, check.files),
            Err(e) => (
                "criterion completes".to_string(),
                format!("error: {e}"),
                false,
                Vec::new(),
            ),
        };
        let status = match (c.expected_fail, pass) {
            (false, true) => Status::Pass,
            (false, false) => Status::Fail,
            (true, false) => Status::ExpectedFail,
            (true, true) => Status::UnexpectedPass,
        };
        report.files.extend(files);
        report.outcomes.push(Outcome {
            criterion: c.id.to_string(),
            group: c.group,
            title: c.title.to_string(),
            expected,
            observed,
            status,
            elapsed: start.elapsed(),
        });
    }
    report
}

/// Compact fixed-precision rendering for the observed column.
fn num(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

fn file(name: &str, table: CsvTable) -> (String, String) {
    (name.to_string(), table.render())
}

const INVARIANT_FAMILIES: [&str; 4] = ["haar", "daubechies:2", "daubechies:3", "battle_lemarie:2"];
const INVARIANT_BUDGET: Duration = Duration::from_secs(30);

fn mra_invariants(ctx: &mut Context) -> Result<Check> {
    let start = Instant::now();
    let mut t = CsvTable::new([
        "family",
        "phi_integral",
        "psi_integral",
        "partition_defect",
        "orthonormality_defect",
        "passes",
    ]);
    let mut worst = 0.0f64;
    let mut pass = true;
    let mut notes = Vec::new();
    for spec in INVARIANT_FAMILIES {
        match ctx.family(spec) {
            Ok(fam) => {
                let r = fam.invariants();
                t.push(vec![
                    spec.into(),
                    Cell::float(r.phi_integral),
                    Cell::float(r.psi_integral),
                    Cell::float(r.partition_defect),
                    Cell::float(r.orthonormality_defect),
                    r.passes().into(),
                ]);
                pass &= r.passes();
                worst = worst.max(r.orthonormality_defect).max(r.partition_defect);
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{spec}: {e}"));
            }
        }
    }
    let within_budget = start.elapsed() < INVARIANT_BUDGET;
    pass &= within_budget;
    let mut observed = format!(
        "all four invariants hold; worst partition/orthonormality defect {}",
        num(worst)
    );
    if !notes.is_empty() {
        observed = notes.join("; ");
    }
    if !within_budget {
        observed.push_str("; over the 30 s budget");
    }
    Ok(Check {
        expected: "integrals, partition of unity and orthonormality within tolerance for haar, db2, db3, bl2 in < 30 s"
            .into(),
        observed,
        pass,
        files: vec![file("01_invariants.csv", t)],
    })
}

/// Mean of `f` over `[a, b]` by a composite 16 x 16-point Gauss rule.
fn cell_average(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let gl = GaussLegendre::<f64>::new(16);
    let n = 16;
    let w = (b - a) / n as f64;
    (0..n)
        .map(|i| gl.integrate(a + i as f64 * w, a + (i + 1) as f64 * w, f))
        .sum::<f64>()
        / (b - a)
}

fn haar_oracle(ctx: &mut Context) -> Result<Check> {
    let haar = ctx.family("haar")?;
    let mut t = CsvTable::new(["function", "j", "sup_defect"]);
    let mut worst = 0.0f64;
    for id in [TestFunctionId::Ramp, TestFunctionId::Gaussian] {
        let target = Target::for_family(id, &haar)?;
        let tf = &target.function;
        let exact = |x: f64| tf.eval(x);
        // the ramp's average has a closed form; the Gaussian's is integrated
        let average = |a: f64, b: f64| match id {
            TestFunctionId::Ramp => {
                (b.clamp(0.0, 1.0).powi(2) - a.clamp(0.0, 1.0).powi(2)) / (2.0 * (b - a))
            }
            _ => cell_average(&exact, a, b),
        };
        let (wa, wb) = tf.window;
        for j in 0..=8 {
            let proj = Projection::new(&target.sampled, &haar, j, (wa, wb))?;
            let w = 0.5f64.powi(j);
            let points = DyadicGrid::new(wa, wb, 10)?;
            let defect = points
                .points()
                .filter(|&x| x < wb)
                .map(|x| {
                    let cell = (x / w).floor() * w;
                    (proj.eval(x) - average(cell, cell + w)).abs()
                })
                .fold(0.0, f64::max);
            worst = worst.max(defect);
            t.push(vec![tf.name().into(), j.into(), Cell::float(defect)]);
        }
    }
    Ok(Check {
        expected: "sup |P_j f - cell average| < 1e-6 for ramp and gaussian, j = 0..8".into(),
        observed: format!("worst sup defect {}", num(worst)),
        pass: worst < 1e-6,
        files: vec![file("02_haar_oracle.csv", t)],
    })
}

fn bound_rows(t: &mut CsvTable, family: &str, r: &crate::kernel::ConvolutionBoundReport<f64>) {
    t.push(vec![
        family.into(),
        Cell::float(r.collapse_defect),
        Cell::float(r.l1_mass),
        Cell::float(r.tail_estimate),
        r.passes.into(),
    ]);
}

fn envelope_csv(family: &str, r: &crate::kernel::ConvolutionBoundReport<f64>, t: &mut CsvTable) {
    for (u, m) in r.envelope.radii.iter().zip(&r.envelope.majorant) {
        t.push(vec![family.into(), Cell::float(*u), Cell::float(*m)]);
    }
}

const KERNEL_LEVELS: [i32; 7] = [0, 1, 2, 3, 4, 5, 6];

fn convolution_bound(ctx: &mut Context) -> Result<Check> {
    let mut summary = CsvTable::new([
        "family",
        "collapse_defect",
        "l1_mass",
        "tail_estimate",
        "finite",
    ]);
    let mut profiles = CsvTable::new(["family", "u", "envelope"]);
    let mut pass = true;
    let mut observed = Vec::new();
    for spec in ["haar", "daubechies:2"] {
        let fam = ctx.family(spec)?;
        let r = verify_convolution_bound(&fam, &KERNEL_LEVELS)?;
        bound_rows(&mut summary, spec, &r);
        envelope_csv(spec, &r, &mut profiles);
        let tail_ok = r.tail_estimate < 0.1 * r.l1_mass;
        let mut ok = r.passes && r.collapse_defect < 0.05 && tail_ok;
        if spec == "haar" {
            ok &= (r.l1_mass - 2.0).abs() <= 0.05;
        }
        pass &= ok;
        observed.push(format!(
            "{spec}: defect {} mass {} tail {}",
            num(r.collapse_defect),
            num(r.l1_mass),
            num(r.tail_estimate)
        ));
    }
    Ok(Check {
        expected: "haar and db2 over j = 0..6: collapse defect < 0.05, tail < 10% of mass; haar mass 2 +- 0.05".into(),
        observed: observed.join("; "),
        pass,
        files: vec![file("03_kernel_bound.csv", summary), file("03_kernel_envelope.csv", profiles)],
    })
}

fn shannon_bound(ctx: &mut Context) -> Result<Check> {
    let fam = ctx.family("shannon")?;
    let r = verify_convolution_bound(&fam, &KERNEL_LEVELS[..3])?;
    let mut summary = CsvTable::new([
        "family",
        "collapse_defect",
        "l1_mass",
        "tail_estimate",
        "finite",
    ]);
    bound_rows(&mut summary, "shannon", &r);
    Ok(Check {
        expected: "no integrable radial majorant (sinc kernel decays like 1/u)".into(),
        observed: format!("mass {} tail {}", num(r.l1_mass), num(r.tail_estimate)),
        pass: r.passes,
        files: vec![file("03_shannon_bound.csv", summary)],
    })
}

fn exponential_decay(ctx: &mut Context) -> Result<Check> {
    let fam = ctx.family("battle_lemarie:2")?;
    let ke = period_kernel(&fam, 0, profile_radius(&fam))?;
    let rb = radial_profile(&ke);
    let fit = fit_decay(&rb, DecayModel::Exponential, None)?;
    let a = fit.rate.unwrap_or(f64::NAN);
    let mut t = CsvTable::new(["family", "model", "rate", "constant", "r_squared", "points"]);
    t.push(vec![
        "battle_lemarie:2".into(),
        "exponential".into(),
        Cell::float(a),
        Cell::float(fit.constant),
        Cell::float(fit.r_squared),
        fit.points.into(),
    ]);
    Ok(Check {
        expected: "battle_lemarie:2 profile: a > 0, R^2 > 0.98".into(),
        observed: format!("a = {}, R^2 = {:.6}", num(a), fit.r_squared),
        pass: a > 0.0 && fit.r_squared > 0.98,
        files: vec![file("04_decay_fit.csv", t)],
    })
}

fn lebesgue_point(ctx: &mut Context) -> Result<Check> {
    let haar = ctx.family("haar")?;
    let target = Target::for_family(TestFunctionId::OscillatingIndicator, &haar)?;
    let trace = pointwise_trace(&target, &haar, 0.0, 2..=10)?;
    let worst = trace
        .iter()
        .map(|&(j, v)| v.abs() / (8.0 / 7.0 * 0.25f64.powi(j)))
        .fold(0.0, f64::max);
    let point = target.function.marked_points[0];
    Ok(Check {
        expected: "|P_j f(0)| <= (8/7) 4^-j (1.05) for j = 2..10".into(),
        observed: format!("largest |P_j f(0)| / ((8/7) 4^-j) = {}", num(worst)),
        pass: worst <= 1.05,
        files: vec![file(
            "05_lebesgue_trace.csv",
            trace_csv(&haar, &target, &point, &trace),
        )],
    })
}

fn summation_order(ctx: &mut Context) -> Result<Check> {
    let fam = ctx.family("daubechies:2")?;
    let target = Target::for_family(TestFunctionId::Gaussian, &fam)?;
    let (j0, j1) = (0, 4);
    // 50 points: [-25/16, 24/16] at spacing 1/16
    let xs = DyadicGrid::new(-25.0 / 16.0, 24.0 / 16.0, 4)?;
    let coeffs = analyze(&target.sampled, &fam, j0, j1, (xs.left(), xs.right()))?;
    let bounded = [
        SummationSchedule::level_order(&coeffs, 1),
        SummationSchedule::interleaved(&coeffs, 2, 2),
    ];
    let report = order_robustness(&target, &fam, j0, j1, &bounded, xs)?;
    let unbounded = SummationSchedule::interleaved(&coeffs, usize::MAX, 2);
    let rejected = matches!(
        order_robustness(&target, &fam, j0, j1, &[unbounded], xs),
        Err(Error::ScheduleRejected(_))
    );
    let mut t = CsvTable::new(["prefix_fraction", "spread"]);
    for (rho, spread) in &report.prefix_dispersion {
        t.push(vec![Cell::float(*rho), Cell::float(*spread)]);
    }
    Ok(Check {
        expected: "two bounded-range schedules agree at 50 points within 1e-10; unbounded schedule rejected".into(),
        observed: format!(
            "{} points, final spread {}; unbounded schedule {}",
            xs.count(),
            num(report.final_spread),
            if rejected { "rejected" } else { "accepted" }
        ),
        pass: xs.count() == 50 && report.agrees && rejected,
        files: vec![file("06_robustness.csv", t)],
    })
}

const RATE_FAMILIES: [(&str, f64, f64); 3] = [
    ("haar", 0.85, 1.1),
    ("daubechies:2", 1.8, 2.2),
    ("battle_lemarie:2", 1.8, 2.2),
];

fn rate_table(reports: &[RateReport<f64>]) -> CsvTable {
    let mut t = CsvTable::new([
        "family",
        "function",
        "j",
        "sup_error",
        "quantization",
        "slope",
        "r_squared",
    ]);
    for r in reports {
        for i in 0..r.j_values.len() {
            t.push(vec![
                r.family.as_str().into(),
                r.function.as_str().into(),
                r.j_values[i].into(),
                Cell::float(r.sup_errors[i]),
                Cell::float(r.quantization[i]),
                Cell::float(r.slope),
                Cell::float(r.r_squared),
            ]);
        }
    }
    t
}

fn rate_slopes(ctx: &mut Context) -> Result<Check> {
    let mut pass = true;
    let mut observed = Vec::new();
    let mut reports = Vec::new();
    for (spec, lo, hi) in RATE_FAMILIES {
        let r = ctx.gaussian_rate(spec)?;
        pass &= r.slope >= lo && r.slope <= hi && r.r_squared > 0.99;
        observed.push(format!(
            "{spec}: slope {} R^2 {:.6}",
            num(r.slope),
            r.r_squared
        ));
        reports.push(r);
    }
    Ok(Check {
        expected: "gaussian on [-1, 1], j = 3..9: haar slope in [0.85, 1.1], db2 and bl2 in [1.8, 2.2], R^2 > 0.99".into(),
        observed: observed.join("; "),
        pass,
        files: vec![file("07_rates.csv", rate_table(&reports))],
    })
}

const ORDER_TARGETS: [(&str, f64, f64); 3] = [
    ("haar", 1.0, 0.1),
    ("daubechies:2", 2.0, 0.15),
    ("battle_lemarie:2", 2.0, 0.15),
];
const EPSILONS: [f64; 3] = [0.5, 1.0, 2.0];

fn order_row(t: &mut CsvTable, c: &CriticalOrder<f64>) {
    t.push(vec![
        c.family.as_str().into(),
        format!("{:?}", c.kind).to_lowercase().into(),
        Cell::float(c.epsilon),
        Cell::float(c.s_star),
        Cell::float(c.bracket.0),
        Cell::float(c.bracket.1),
    ]);
}

fn critical_orders(ctx: &mut Context) -> Result<Check> {
    let mut t = CsvTable::new([
        "family",
        "kind",
        "epsilon",
        "s_star",
        "finite_at",
        "diverged_at",
    ]);
    let mut pass = true;
    let mut observed = Vec::new();
    for (spec, want, tol) in ORDER_TARGETS {
        let orders = EPSILONS
            .iter()
            .map(|&e| ctx.critical(spec, e, false))
            .collect::<Result<Vec<_>>>()?;
        let independent = orders.iter().all(|c| c.verdicts == orders[0].verdicts);
        let within = orders.iter().all(|c| (c.s_star - want).abs() <= tol);
        pass &= independent && within;
        for c in &orders {
            order_row(&mut t, c);
        }
        observed.push(format!(
            "{spec}: s* {}{}",
            num(orders[0].s_star),
            if independent {
                ""
            } else {
                " (verdicts depend on epsilon)"
            }
        ));
    }
    Ok(Check {
        expected: "s* = 1.0 +- 0.1 (haar), 2.0 +- 0.15 (db2, bl2), identical verdicts for epsilon in {0.5, 1, 2}".into(),
        observed: observed.join("; "),
        pass,
        files: vec![file("08_critical_orders.csv", t)],
    })
}

const CONSISTENCY_FAMILIES: [&str; 4] =
    ["haar", "daubechies:2", "daubechies:3", "battle_lemarie:2"];

fn rate_criterion_consistency(ctx: &mut Context) -> Result<Check> {
    let mut t = CsvTable::new(["family", "rate_slope", "s_star_wavelet", "s_star_scaling"]);
    let mut pass = true;
    let mut worst_rate = 0.0f64;
    let mut worst_kind = 0.0f64;
    for spec in CONSISTENCY_FAMILIES {
        let rate = ctx.gaussian_rate(spec)?;
        let w = ctx.critical(spec, 1.0, false)?;
        let s = ctx.critical(spec, 1.0, true)?;
        let d_rate = (rate.slope - w.s_star).abs();
        let d_kind = (w.s_star - s.s_star).abs();
        pass &= d_rate <= 0.25 && d_kind <= 0.15;
        worst_rate = worst_rate.max(d_rate);
        worst_kind = worst_kind.max(d_kind);
        t.push(vec![
            spec.into(),
            Cell::float(rate.slope),
            Cell::float(w.s_star),
            Cell::float(s.s_star),
        ]);
    }
    Ok(Check {
        expected: "|rate slope - s*| <= 0.25 and |s*_wavelet - s*_scaling| <= 0.15 for haar, db2, db3, bl2".into(),
        observed: format!(
            "largest |slope - s*| {}, largest wavelet/scaling gap {}",
            num(worst_rate),
            num(worst_kind)
        ),
        pass,
        files: vec![file("09_consistency.csv", t)],
    })
}

fn lp_convergence(ctx: &mut Context) -> Result<Check> {
    let haar = ctx.family("haar")?;
    let target = Target::for_family(TestFunctionId::Step, &haar)?;
    let window = target.function.window;
    let l1 = lp_error_trace(&target, &haar, Norm::L1, 2..=8, window)?;
    let sup = lp_error_trace(&target, &haar, Norm::LInf, 2..=8, window)?;
    let mut t = CsvTable::new(["j", "l1_error", "expected_l1", "sup_error"]);
    let mut worst_ratio = 0.0f64;
    let mut min_sup = f64::INFINITY;
    let mut pass = true;
    for ((j, e1), (_, es)) in l1.iter().zip(&sup) {
        let want = 0.5f64.powi(j + 1);
        let rel = (e1 - want).abs() / want;
        worst_ratio = worst_ratio.max(rel);
        min_sup = min_sup.min(*es);
        pass &= rel <= 0.1 && *es >= 0.4;
        t.push(vec![
            (*j).into(),
            Cell::float(*e1),
            Cell::float(want),
            Cell::float(*es),
        ]);
    }
    Ok(Check {
        expected: "haar + step, j = 2..8: L1 error = 2^(-j-1) within 10%, sup error >= 0.4".into(),
        observed: format!(
            "largest relative L1 deviation {}, smallest sup error {}",
            num(worst_ratio),
            num(min_sup)
        ),
        pass,
        files: vec![file("10_lp_errors.csv", t)],
    })
}

const PERTURBATIONS: usize = 20;

fn spline_convergence(ctx: &mut Context) -> Result<Check> {
    let haar = ctx.family("haar")?;
    let gauss = Target::for_family(TestFunctionId::Gaussian, &haar)?;
    let window = (-2.0, 2.0);
    let probe = DyadicGrid::new(window.0, window.1, 10)?;
    let mut haar_gap = 0.0f64;
    let mut orthogonality = 0.0f64;
    for j in [2, 4, 6] {
        let space = SplineSpace::new(1, 0.5f64.powi(j), window)?;
        let s = best_l2_spline(&gauss.sampled, &space)?;
        orthogonality = orthogonality.max(s.orthogonality_defect);
        let proj = Projection::new(&gauss.sampled, &haar, j, window)?;
        let gap = probe
            .points()
            .filter(|&x| x < window.1)
            .map(|x| (s.eval(x) - proj.eval(x)).abs())
            .fold(0.0, f64::max);
        haar_gap = haar_gap.max(gap);
    }

    let sine = TestFunction::new(TestFunctionId::Sine);
    let meshes: Vec<f64> = (2..=7).map(|m| 0.5f64.powi(m)).collect();
    let study = spline_convergence_study::<f64>(&sine, 2, &meshes)?;
    let ratios: Vec<f64> = study.sup_errors.windows(2).map(|w| w[0] / w[1]).collect();
    let ratios_ok = ratios.iter().all(|r| (3.4..=4.6).contains(r));

    // optimality: random perturbations of the coefficients never do better
    let f = sine.sample::<f64>(DEFAULT_LEVEL)?;
    let space = SplineSpace::new(2, 0.125, (sine.window.0, sine.window.1))?;
    let best = best_l2_spline(&f, &space)?;
    orthogonality = orthogonality.max(best.orthogonality_defect);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worse = 0;
    for _ in 0..PERTURBATIONS {
        let mut delta: Vec<f64> = (0..space.basis_count)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let norm = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
        delta.iter_mut().for_each(|d| *d *= 1e-3 / norm);
        let c: Vec<f64> = best
            .coefficients
            .iter()
            .zip(&delta)
            .map(|(c, d)| c + d)
            .collect();
        if l2_distance(&f, &space, &c) > best.residual_l2 - 1e-12 {
            worse += 1;
        }
    }

    let mut t = CsvTable::new(["mesh", "sup_error", "ratio"]);
    for (i, (h, e)) in meshes.iter().zip(&study.sup_errors).enumerate() {
        let ratio = if i == 0 { f64::NAN } else { ratios[i - 1] };
        t.push(vec![Cell::float(*h), Cell::float(*e), Cell::float(ratio)]);
    }
    let pass = haar_gap < 1e-8 && ratios_ok && orthogonality < 1e-8 && worse == PERTURBATIONS;
    let (rmin, rmax) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    Ok(Check {
        expected: "k=1 equals haar within 1e-8; k=2 sine halving ratios in [3.4, 4.6]; orthogonality < 1e-8; \
                   perturbations increase the error"
            .into(),
        observed: format!(
            "haar gap {}; ratios {}..{}; orthogonality {}; {worse}/{PERTURBATIONS} perturbations worse",
            num(haar_gap),
            num(rmin),
            num(rmax),
            num(orthogonality)
        ),
        pass,
        files: vec![file("11_spline.csv", t)],
    })
}
