//! The twelve acceptance criteria, each checked at its stated tolerance and
//! reported on one line. Criterion 12 runs the `waverate suite` binary twice.
//!
//! Criterion 10 cannot hold for any placement of the jump (see the README),
//! so its failure is reported but does not fail this target.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use waverate::spline::{l2_distance, load_vector};
use waverate::{
    analyze, best_l2_spline, critical_order, fit_decay, gram_matrix, lp_error_trace, make_family,
    order_robustness, pointwise_trace, radial_profile, scaling_critical_order, sup_error_rates,
    verify_convolution_bound, DecayModel, DyadicGrid, FamilySpec, MraFamily, Norm, Projection,
    SplineSpace, SummationSchedule, Target, TestFunction, TestFunctionId,
};

/// Criteria whose failure is recorded rather than treated as a regression.
const UNATTAINABLE: [&str; 1] = ["10"];

type Outcome = Result<(bool, String), String>;

type Check = fn(&mut Families) -> Outcome;

struct Families(BTreeMap<&'static str, MraFamily>);

impl Families {
    fn get(&mut self, spec: &'static str) -> Result<&MraFamily, String> {
        if !self.0.contains_key(spec) {
            let parsed: FamilySpec = spec.parse().map_err(err)?;
            self.0.insert(spec, make_family(parsed).map_err(err)?);
        }
        Ok(&self.0[spec])
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `∫_a^b f` by composite Simpson with 2000 panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 2000;
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * f(a + i as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0
}

fn mra_invariants(fams: &mut Families) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for spec in ["haar", "daubechies:2", "daubechies:3", "battle_lemarie:2"] {
        let r = fams.get(spec)?.invariants();
        if !r.passes() {
            failures.push(format!("{spec}: {:?}", r.failures()));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(30);
    Ok((
        pass,
        format!(
            "failures {failures:?}, built in {:.1} s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn haar_cell_averages(fams: &mut Families) -> Outcome {
    let haar = fams.get("haar")?;
    let mut worst = 0.0f64;
    for id in [TestFunctionId::Ramp, TestFunctionId::Gaussian] {
        let target = Target::for_family(id, haar).map_err(err)?;
        let tf = TestFunction::new(id);
        let average = |a: f64, b: f64| match id {
            TestFunctionId::Ramp => {
                (b.clamp(0.0, 1.0).powi(2) - a.clamp(0.0, 1.0).powi(2)) / (2.0 * (b - a))
            }
            _ => simpson(|x| (-x * x).exp(), a, b) / (b - a),
        };
        let probes = DyadicGrid::new(tf.window.0, tf.window.1, 9).map_err(err)?;
        for j in 0..=8 {
            let p = Projection::new(&target.sampled, haar, j, tf.window).map_err(err)?;
            let w = 0.5f64.powi(j);
            for x in probes.points().filter(|&x| x < tf.window.1) {
                let cell = (x / w).floor() * w;
                worst = worst.max((p.eval(x) - average(cell, cell + w)).abs());
            }
        }
    }
    Ok((worst < 1e-6, format!("worst sup defect {worst:.3e}")))
}

fn convolution_bound(fams: &mut Families) -> Outcome {
    let levels: Vec<i32> = (0..=6).collect();
    let mut pass = true;
    let mut notes = Vec::new();
    for spec in ["haar", "daubechies:2"] {
        let r = verify_convolution_bound(fams.get(spec)?, &levels).map_err(err)?;
        let mut ok = r.passes && r.collapse_defect < 0.05 && r.tail_estimate < 0.1 * r.l1_mass;
        if spec == "haar" {
            ok &= (r.l1_mass - 2.0).abs() <= 0.05;
        }
        pass &= ok;
        notes.push(format!(
            "{spec} defect {:.3e} mass {:.4} tail {:.3e}",
            r.collapse_defect, r.l1_mass, r.tail_estimate
        ));
    }
    let shannon = verify_convolution_bound(fams.get("shannon")?, &levels[..3]).map_err(err)?;
    notes.push(format!(
        "shannon {} (expected to fail)",
        if shannon.passes {
            "integrable"
        } else {
            "not integrable"
        }
    ));
    Ok((pass, notes.join("; ")))
}

fn exponential_decay(fams: &mut Families) -> Outcome {
    let fam = fams.get("battle_lemarie:2")?;
    let kernel = waverate::kernel::period_kernel(fam, 0, waverate::kernel::profile_radius(fam))
        .map_err(err)?;
    let fit = fit_decay(&radial_profile(&kernel), DecayModel::Exponential, None).map_err(err)?;
    let a = fit.rate.unwrap_or(f64::NAN);
    Ok((
        a > 0.0 && fit.r_squared > 0.98,
        format!("a = {a:.4}, R^2 = {:.6}", fit.r_squared),
    ))
}

fn lebesgue_point(fams: &mut Families) -> Outcome {
    let haar = fams.get("haar")?;
    let target = Target::for_family(TestFunctionId::OscillatingIndicator, haar).map_err(err)?;
    let trace = pointwise_trace(&target, haar, 0.0, 2..=10).map_err(err)?;
    let worst = trace
        .iter()
        .map(|&(j, v)| v.abs() / (8.0 / 7.0 * 0.25f64.powi(j)))
        .fold(0.0, f64::max);
    Ok((
        worst <= 1.05,
        format!("largest |P_j f(0)| / ((8/7) 4^-j) = {worst:.4}"),
    ))
}

fn summation_order(fams: &mut Families) -> Outcome {
    let fam = fams.get("daubechies:2")?;
    let target = Target::for_family(TestFunctionId::Gaussian, fam).map_err(err)?;
    let xs = DyadicGrid::new(-25.0 / 16.0, 24.0 / 16.0, 4).map_err(err)?;
    let coeffs = analyze(&target.sampled, fam, 0, 4, (xs.left(), xs.right())).map_err(err)?;
    let bounded = [
        SummationSchedule::level_order(&coeffs, 1),
        SummationSchedule::interleaved(&coeffs, 2, 2),
    ];
    let r = order_robustness(&target, fam, 0, 4, &bounded, xs).map_err(err)?;
    let unbounded = SummationSchedule::interleaved(&coeffs, usize::MAX, 2);
    let rejected = order_robustness(&target, fam, 0, 4, &[unbounded], xs).is_err();
    let pass = xs.count() == 50 && r.final_spread < 1e-10 && rejected;
    Ok((
        pass,
        format!(
            "{} points, spread {:.3e}, unbounded rejected: {rejected}",
            xs.count(),
            r.final_spread
        ),
    ))
}

fn gaussian_slope(fam: &MraFamily) -> Result<(f64, f64), String> {
    let target = Target::for_family(TestFunctionId::Gaussian, fam).map_err(err)?;
    let r = sup_error_rates(&target, fam, 3..=9, (-1.0, 1.0)).map_err(err)?;
    Ok((r.slope, r.r_squared))
}

fn rate_slopes(fams: &mut Families) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (spec, lo, hi) in [
        ("haar", 0.85, 1.1),
        ("daubechies:2", 1.8, 2.2),
        ("battle_lemarie:2", 1.8, 2.2),
    ] {
        let (slope, r2) = gaussian_slope(fams.get(spec)?)?;
        pass &= (lo..=hi).contains(&slope) && r2 > 0.99;
        notes.push(format!("{spec} {slope:.4} (R^2 {r2:.5})"));
    }
    Ok((pass, notes.join("; ")))
}

fn critical_orders(fams: &mut Families) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (spec, want, tol) in [
        ("haar", 1.0, 0.1),
        ("daubechies:2", 2.0, 0.15),
        ("battle_lemarie:2", 2.0, 0.15),
    ] {
        let fam = fams.get(spec)?;
        let orders = [0.5, 1.0, 2.0]
            .iter()
            .map(|&e| critical_order(fam, e).map_err(err))
            .collect::<Result<Vec<_>, _>>()?;
        let independent = orders.iter().all(|c| c.verdicts == orders[0].verdicts);
        pass &= independent && orders.iter().all(|c| (c.s_star - want).abs() <= tol);
        notes.push(format!(
            "{spec} s* {:.4}{}",
            orders[1].s_star,
            if independent { "" } else { " (eps-dependent)" }
        ));
    }
    Ok((pass, notes.join("; ")))
}

fn consistency(fams: &mut Families) -> Outcome {
    let mut pass = true;
    let (mut worst_rate, mut worst_kind) = (0.0f64, 0.0f64);
    for spec in ["haar", "daubechies:2", "daubechies:3", "battle_lemarie:2"] {
        let fam = fams.get(spec)?;
        let (slope, _) = gaussian_slope(fam)?;
        let w = critical_order(fam, 1.0).map_err(err)?.s_star;
        let s = scaling_critical_order(fam, 1.0).map_err(err)?.s_star;
        pass &= (slope - w).abs() <= 0.25 && (w - s).abs() <= 0.15;
        worst_rate = worst_rate.max((slope - w).abs());
        worst_kind = worst_kind.max((w - s).abs());
    }
    Ok((
        pass,
        format!(
            "largest |slope - s*| {worst_rate:.4}, largest wavelet/scaling gap {worst_kind:.4}"
        ),
    ))
}

fn lp_at_a_jump(fams: &mut Families) -> Outcome {
    let haar = fams.get("haar")?;
    let target = Target::for_family(TestFunctionId::Step, haar).map_err(err)?;
    let window = target.function.window;
    let l1 = lp_error_trace(&target, haar, Norm::L1, 2..=8, window).map_err(err)?;
    let sup = lp_error_trace(&target, haar, Norm::LInf, 2..=8, window).map_err(err)?;
    let mut pass = true;
    let (mut worst, mut min_sup) = (0.0f64, f64::INFINITY);
    for ((j, e1), (_, es)) in l1.iter().zip(&sup) {
        let want = 0.5f64.powi(j + 1);
        let rel = (e1 - want).abs() / want;
        pass &= rel <= 0.1 && *es >= 0.4;
        worst = worst.max(rel);
        min_sup = min_sup.min(*es);
    }
    Ok((
        pass,
        format!("largest relative L1 deviation {worst:.4}, smallest sup error {min_sup:.4}"),
    ))
}

fn spline_convergence(fams: &mut Families) -> Outcome {
    let haar = fams.get("haar")?;
    let gauss = Target::for_family(TestFunctionId::Gaussian, haar).map_err(err)?;
    let window = (-2.0, 2.0);
    let probes = DyadicGrid::new(window.0, window.1, 10).map_err(err)?;
    let mut gap = 0.0f64;
    let mut orthogonality = 0.0f64;
    for j in [2, 4, 6] {
        let space = SplineSpace::new(1, 0.5f64.powi(j), window).map_err(err)?;
        let s = best_l2_spline(&gauss.sampled, &space).map_err(err)?;
        let p = Projection::new(&gauss.sampled, haar, j, window).map_err(err)?;
        for x in probes.points().filter(|&x| x < window.1) {
            gap = gap.max((s.eval(x) - p.eval(x)).abs());
        }
        // ⟨f - s, B_m⟩ = b_m - (G c)_m, relative to ‖f‖₂
        let b = load_vector(&gauss.sampled, &space);
        let gc = gram_matrix(&space).mul_vec(&s.coefficients);
        let norm = l2_distance(&gauss.sampled, &space, &vec![0.0; space.basis_count]);
        let defect = b
            .iter()
            .zip(&gc)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / norm;
        orthogonality = orthogonality.max(defect);
    }
    let sine = TestFunction::new(TestFunctionId::Sine);
    let f = sine.sample::<f64>(12).map_err(err)?;
    let space = SplineSpace::new(2, 0.125, sine.window).map_err(err)?;
    let s = best_l2_spline(&f, &space).map_err(err)?;
    let b = load_vector(&f, &space);
    let gc = gram_matrix(&space).mul_vec(&s.coefficients);
    let norm = l2_distance(&f, &space, &vec![0.0; space.basis_count]);
    orthogonality = orthogonality.max(
        b.iter()
            .zip(&gc)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / norm,
    );

    let meshes: Vec<f64> = (2..=7).map(|m| 0.5f64.powi(m)).collect();
    let study = waverate::spline_convergence_study::<f64>(&sine, 2, &meshes).map_err(err)?;
    let ratios: Vec<f64> = study.sup_errors.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = gap < 1e-8 && orthogonality < 1e-8 && ratios.iter().all(|r| (3.4..=4.6).contains(r));
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    Ok((
        pass,
        format!("haar gap {gap:.3e}, ratios {lo:.3}..{hi:.3}, orthogonality {orthogonality:.3e}"),
    ))
}

fn directory_bytes(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(err)? {
        let entry = entry.map_err(err)?;
        let name = entry.file_name().to_string_lossy().into_owned();
        files.insert(name, std::fs::read(entry.path()).map_err(err)?);
    }
    Ok(files)
}

fn determinism(_: &mut Families) -> Outcome {
    let scratch = tempfile::tempdir().map_err(err)?;
    let mut runs = Vec::new();
    for name in ["first", "second"] {
        let dir = scratch.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_waverate"))
            .arg("suite")
            .arg("--output")
            .arg(&dir)
            .output()
            .map_err(err)?
            .status;
        if !matches!(status.code(), Some(0) | Some(3)) {
            return Err(format!("suite exited with {status}"));
        }
        runs.push(directory_bytes(&dir)?);
    }
    let same = runs[0] == runs[1] && !runs[0].is_empty();
    Ok((same, format!("{} files, identical: {same}", runs[0].len())))
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, Check); 12] = [
        ("1", "MRA invariants", mra_invariants),
        (
            "2",
            "Haar projection equals cell averages",
            haar_cell_averages,
        ),
        ("3", "kernel convolution bound", convolution_bound),
        ("4", "exponential kernel decay", exponential_decay),
        ("5", "Lebesgue-point convergence", lebesgue_point),
        ("6", "summation-order robustness", summation_order),
        ("7", "rate slopes", rate_slopes),
        ("8", "critical orders", critical_orders),
        ("9", "rate and criterion consistency", consistency),
        ("10", "L^p convergence at a jump", lp_at_a_jump),
        ("11", "spline convergence", spline_convergence),
        ("12", "determinism", determinism),
    ];
    let mut fams = Families(BTreeMap::new());
    let mut regressions = Vec::new();
    for (id, title, check) in criteria {
        let (pass, observed) = check(&mut fams).unwrap_or_else(|e| (false, format!("error: {e}")));
        let verdict = match (pass, UNATTAINABLE.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known unattainable)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {verdict}: {title}: {observed}");
        if !pass && !UNATTAINABLE.contains(&id) {
            regressions.push(id);
        }
    }
    if regressions.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {}", regressions.join(", "));
        ExitCode::FAILURE
    }
}
