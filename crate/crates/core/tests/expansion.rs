//! Coefficients, projections and summation schedules against exact averages
//! and orthonormality.

use waverate::expansion::Term;
use waverate::{
    analyze, inner_product, make_family, partial_sum, project, validate_schedule, DecayHint,
    DyadicGrid, FamilySpec, MraFamily, Projection, SampledFunction, SummationSchedule,
    TestFunction, TestFunctionId,
};

fn haar() -> MraFamily {
    make_family(FamilySpec::haar()).unwrap()
}

fn db2() -> MraFamily {
    make_family(FamilySpec::daubechies(2).unwrap()).unwrap()
}

fn gaussian(level: i32) -> SampledFunction {
    TestFunction::new(TestFunctionId::Gaussian)
        .sample(level)
        .unwrap()
}

/// `x` on `[0, 1]`, zero elsewhere, as exact cell averages on `[-1, 2]`.
fn ramp_on_unit_interval() -> SampledFunction {
    let grid = DyadicGrid::new(-1.0, 2.0, 12).unwrap();
    SampledFunction::from_antiderivative(grid, DecayHint::Compact, |x: f64| {
        0.5 * x.clamp(0.0, 1.0).powi(2)
    })
    .unwrap()
}

fn sup_diff(a: &SampledFunction, b: &SampledFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn inner_product_examples() {
    let fam = haar();
    assert!((inner_product(fam.phi(), fam.phi()) - 1.0).abs() < 1e-15);
    assert!(inner_product(fam.phi(), fam.psi()).abs() < 1e-12);
    let grid = DyadicGrid::new(0.0, 1.0, 10).unwrap();
    let x = SampledFunction::from_fn(grid, DecayHint::None, |x| x).unwrap();
    let one = SampledFunction::from_fn(grid, DecayHint::None, |_| 1.0).unwrap();
    assert!((inner_product(&x, &one) - 0.5).abs() < 1e-6);
}

#[test]
fn haar_basis_functions_expand_to_single_terms() {
    let fam = haar();
    let c = analyze(fam.phi(), &fam, 0, 4, (0.0, 1.0)).unwrap();
    assert!((c.b[&0] - 1.0).abs() < 1e-10);
    assert!(c
        .b
        .iter()
        .filter(|(k, _)| **k != 0)
        .all(|(_, v)| v.abs() < 1e-10));
    assert!(c.a.values().all(|v| v.abs() < 1e-10));

    let c = analyze(fam.psi(), &fam, 0, 4, (0.0, 1.0)).unwrap();
    assert!(c.b.values().all(|v| v.abs() < 1e-10));
    for (&(j, k), &v) in &c.a {
        let expected = if (j, k) == (0, 0) { 1.0 } else { 0.0 };
        assert!((v - expected).abs() < 1e-10, "a[{j},{k}] = {v}");
    }
}

#[test]
fn gaussian_parseval_defect_is_small_and_nonnegative() {
    let fam = haar();
    let f = gaussian(12);
    let c = analyze(&f, &fam, 0, 6, (-6.0, 6.0)).unwrap();
    // ∫ e^{-2x²} = √(π/2).
    let norm_sq = (std::f64::consts::PI / 2.0).sqrt();
    let defect = norm_sq - c.energy();
    assert!((0.0..=1e-3).contains(&defect), "defect {defect:e}");
}

#[test]
fn haar_projection_is_the_cell_average() {
    let fam = haar();
    let f = ramp_on_unit_interval();
    let p0 = Projection::new(&f, &fam, 0, (0.0, 1.0)).unwrap();
    for x in [0.0, 0.3, 0.77, 0.999] {
        assert!((p0.eval(x) - 0.5).abs() < 1e-6);
    }
    let p1 = Projection::new(&f, &fam, 1, (0.0, 1.0)).unwrap();
    assert!((p1.eval(0.3) - 0.25).abs() < 1e-6);
    assert!((p1.eval(0.7) - 0.75).abs() < 1e-6);
}

#[test]
fn db2_projection_reproduces_its_scaling_function() {
    let fam = db2();
    let xs = DyadicGrid::new(0.0, 3.0, 8).unwrap();
    let p = project(fam.phi(), &fam, 0, xs).unwrap();
    let worst = xs
        .points()
        .zip(p.values())
        .fold(0.0f64, |m, (x, v)| m.max((v - fam.phi().eval(x)).abs()));
    assert!(worst < 1e-6, "sup defect {worst:e}");
}

#[test]
fn complete_schedule_equals_the_top_projection() {
    let f = gaussian(12);
    for fam in [haar(), db2()] {
        let window = (-1.0, 1.0);
        let c = analyze(&f, &fam, 0, 4, window).unwrap();
        let xs = DyadicGrid::new(window.0, window.1, 7).unwrap();
        let summed = partial_sum(&c, &fam, &SummationSchedule::level_order(&c, 1), xs).unwrap();
        let top = project(&f, &fam, 4, xs).unwrap();
        let d = sup_diff(&summed, &top);
        assert!(d < 1e-8, "{}: {d:e}", fam.spec());

        let shuffled = SummationSchedule::interleaved(&c, 3, 3);
        let other = partial_sum(&c, &fam, &shuffled, xs).unwrap();
        assert!(sup_diff(&summed, &other) < 1e-10);

        let empty = partial_sum(&c, &fam, &SummationSchedule::new(0, vec![], 1), xs).unwrap();
        assert!(empty.values().iter().all(|v| *v == 0.0));
    }
}

#[test]
fn level_order_has_range_one() {
    let c = analyze(&gaussian(10), &haar(), 0, 4, (-1.0, 1.0)).unwrap();
    let r = validate_schedule(&SummationSchedule::level_order(&c, 1));
    assert!(r.valid);
    assert_eq!(r.max_range, 1);
}

#[test]
fn alternating_between_levels_zero_and_five_needs_range_six() {
    let mut terms = Vec::new();
    for k in 0..4 {
        terms.push(Term::Detail { j: 0, k });
        terms.push(Term::Detail { j: 5, k });
    }
    for m in 1..=7 {
        let r = validate_schedule(&SummationSchedule::new(0, terms.clone(), m));
        assert_eq!(r.max_range, 6);
        assert_eq!(r.valid, m >= 6, "M = {m}");
    }
}

#[test]
fn a_level_left_open_past_the_bound_is_rejected() {
    for m in 1..=4usize {
        let mut terms: Vec<Term> = (0..3).map(|k| Term::Detail { j: 0, k }).collect();
        for j in 1..=m as i32 {
            terms.extend((0..2).map(|k| Term::Detail { j, k }));
        }
        terms.push(Term::Detail { j: 0, k: 3 });
        let r = validate_schedule(&SummationSchedule::new(0, terms, m));
        assert!(!r.valid, "M = {m}");
        assert_eq!(r.max_range, m + 1);
    }
}

#[test]
fn projection_is_idempotent() {
    let f = gaussian(12);
    for fam in [haar(), db2()] {
        for j in 0..=4 {
            let xs = DyadicGrid::new(-6.0, 6.0, fam.level()).unwrap();
            let once = project(&f, &fam, j, xs).unwrap();
            let inner = DyadicGrid::new(-2.0, 2.0, 8).unwrap();
            let twice = project(&once, &fam, j, inner).unwrap();
            let direct = project(&f, &fam, j, inner).unwrap();
            assert!(sup_diff(&twice, &direct) < 1e-6, "{} j={j}", fam.spec());
        }
    }
}

#[test]
fn telescoping_detail_levels() {
    let f = gaussian(12);
    let window = (-1.0, 1.0);
    let xs = DyadicGrid::new(window.0, window.1, 8).unwrap();
    for fam in [haar(), db2()] {
        let c = analyze(&f, &fam, 2, 3, window).unwrap();
        let details: Vec<Term> = c
            .terms()
            .into_iter()
            .filter(|t| matches!(t, Term::Detail { .. }))
            .collect();
        let q = partial_sum(&c, &fam, &SummationSchedule::new(2, details, 1), xs).unwrap();
        let p2 = project(&f, &fam, 2, xs).unwrap();
        let p3 = project(&f, &fam, 3, xs).unwrap();
        let worst = (0..xs.count())
            .map(|i| (p3.values()[i] - p2.values()[i] - q.values()[i]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{}: {worst:e}", fam.spec());
    }
}

#[test]
fn detail_coefficients_obey_the_sup_bound() {
    let f = gaussian(12);
    for fam in [haar(), db2()] {
        let c = analyze(&f, &fam, 0, 6, (-3.0, 3.0)).unwrap();
        let bound = f.sup_norm() * fam.psi().norm_l1() + 1e-6;
        for (&(j, _), &v) in &c.a {
            assert!(2f64.powf(j as f64 / 2.0) * v.abs() <= bound);
        }
    }
}

#[test]
fn coefficient_csv_has_one_row_per_term() {
    let c = analyze(&gaussian(10), &haar(), 0, 2, (-1.0, 1.0)).unwrap();
    let text = c.to_csv().render();
    assert!(text.starts_with("kind,j,k,value\n"));
    assert_eq!(text.lines().count(), c.len() + 1);
}
