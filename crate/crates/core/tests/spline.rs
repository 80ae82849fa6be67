//! Best `L²` spline approximation against polynomial reproduction, cell
//! averages, hat-function integrals and eigenvalue bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waverate::spline::l2_distance;
use waverate::{
    best_l2_spline, gram_matrix, make_family, project, spline_convergence_study, DecayHint,
    DyadicGrid, FamilySpec, SampledFunction, SplineSpace, TestFunction, TestFunctionId,
};

fn sampled(left: f64, right: f64, level: i32, f: impl Fn(f64) -> f64) -> SampledFunction {
    SampledFunction::from_fn(
        DyadicGrid::new(left, right, level).unwrap(),
        DecayHint::None,
        f,
    )
    .unwrap()
}

/// `1_{[c, ∞)}` as exact cell averages on `[-2, 2]`.
fn step_at(c: f64, level: i32) -> SampledFunction {
    let grid = DyadicGrid::new(-2.0, 2.0, level).unwrap();
    SampledFunction::from_antiderivative(grid, DecayHint::None, move |x: f64| (x - c).max(0.0))
        .unwrap()
}

/// Dense copy of the Gram matrix.
fn dense(space: &SplineSpace) -> Vec<Vec<f64>> {
    let g = gram_matrix(space);
    let n = g.size();
    (0..n)
        .map(|i| (0..n).map(|j| g.get(i, j)).collect())
        .collect()
}

/// Gauss–Jordan inverse without pivoting; also returns the elimination pivots.
fn inverse_with_pivots(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| f64::from(i == j)));
            r
        })
        .collect();
    let mut pivots = Vec::with_capacity(n);
    for c in 0..n {
        let p = m[c][c];
        pivots.push(p);
        for v in m[c].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != c {
                let factor = m[r][c];
                let pivot_row = m[c].clone();
                for (v, w) in m[r].iter_mut().zip(&pivot_row) {
                    *v -= factor * w;
                }
            }
        }
    }
    (m.into_iter().map(|r| r[n..].to_vec()).collect(), pivots)
}

#[test]
fn piecewise_constant_gram_is_a_scaled_identity() {
    let space = SplineSpace::new(1, 0.25, (0.0, 2.0)).unwrap();
    let g = dense(&space);
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let expected = if i == j { 0.25 } else { 0.0 };
            assert!((v - expected).abs() < 1e-14);
        }
    }
}

#[test]
fn hat_gram_rows_are_one_four_one() {
    let h = 0.125;
    let space = SplineSpace::new(2, h, (0.0, 1.0)).unwrap();
    let g = dense(&space);
    for i in 1..g.len() - 1 {
        assert!((g[i][i - 1] - h / 6.0).abs() < 1e-14);
        assert!((g[i][i] - 4.0 * h / 6.0).abs() < 1e-14);
        assert!((g[i][i + 1] - h / 6.0).abs() < 1e-14);
    }
    // Truncated boundary hats keep half their mass.
    assert!((g[0][0] - 2.0 * h / 6.0).abs() < 1e-14);
}

#[test]
fn gram_matrices_are_positive_definite() {
    for order in 1..=4 {
        for h in [0.5, 0.1] {
            let space = SplineSpace::new(order, h, (0.0, 2.0)).unwrap();
            let g = dense(&space);
            let disc = gram_matrix(&space).gershgorin_lower_bound();
            if order <= 2 {
                assert!(disc > 0.0, "k={order} h={h}: {disc}");
            }
            // Discs of the inverse bound its spectral radius, hence λ_min(G)
            // from below; positive pivots fix the sign.
            let (inv, pivots) = inverse_with_pivots(&g);
            assert!(pivots.iter().all(|p| *p > 0.0), "k={order} h={h}");
            let radius = inv
                .iter()
                .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            let bound = disc.max(1.0 / radius);
            assert!(bound > 0.0, "k={order} h={h}");
        }
    }
}

#[test]
fn basis_elements_are_reproduced_exactly() {
    let space = SplineSpace::new(2, 0.25, (0.0, 2.0)).unwrap();
    let f = sampled(0.0, 2.0, 8, |x| space.basis(3, x));
    let s = best_l2_spline(&f, &space).unwrap();
    for (m, c) in s.coefficients.iter().enumerate() {
        let expected = if m == 3 { 1.0 } else { 0.0 };
        assert!((c - expected).abs() < 1e-10, "c[{m}] = {c}");
    }
}

#[test]
fn linear_splines_reproduce_linear_functions() {
    let space = SplineSpace::new(2, 0.125, (0.0, 1.0)).unwrap();
    let s = best_l2_spline(&sampled(0.0, 1.0, 8, |x| x), &space).unwrap();
    for i in 0..200 {
        let x = i as f64 / 200.0 + 0.0013;
        assert!((s.eval(x) - x).abs() < 1e-8, "x={x}");
    }
}

#[test]
fn piecewise_constants_are_cell_averages() {
    let space = SplineSpace::new(1, 0.5, (0.0, 1.0)).unwrap();
    let s = best_l2_spline(&sampled(0.0, 1.0, 6, |x| x), &space).unwrap();
    for (x, expected) in [(0.1, 0.25), (0.49, 0.25), (0.5, 0.75), (0.9, 0.75)] {
        assert!((s.eval(x) - expected).abs() < 1e-12, "x={x}");
    }
}

#[test]
fn partition_of_unity_in_the_interior() {
    for order in 1..=5 {
        let space = SplineSpace::new(order, 0.1, (0.0, 2.0)).unwrap();
        for i in 0..400 {
            let x = i as f64 * 0.005;
            let total: f64 = (0..space.basis_count).map(|m| space.basis(m, x)).sum();
            assert!((total - 1.0).abs() < 1e-10, "k={order} x={x}");
        }
    }
}

#[test]
fn studies_show_the_approximation_orders() {
    let meshes: Vec<f64> = (2..=7).map(|l| 0.5f64.powi(l)).collect();
    let sine =
        spline_convergence_study::<f64>(&TestFunction::new(TestFunctionId::Sine), 2, &meshes)
            .unwrap();
    assert!(
        (1.8..=2.2).contains(&sine.slope),
        "sine slope {}",
        sine.slope
    );
    for w in sine.sup_errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.4..=4.6).contains(&ratio), "ratio {ratio}");
    }
    let gauss =
        spline_convergence_study::<f64>(&TestFunction::new(TestFunctionId::Gaussian), 1, &meshes)
            .unwrap();
    assert!(
        (0.85..=1.1).contains(&gauss.slope),
        "gaussian slope {}",
        gauss.slope
    );
}

#[test]
fn studies_reject_bad_meshes() {
    let tf = TestFunction::new(TestFunctionId::Sine);
    assert!(spline_convergence_study::<f64>(&tf, 2, &[0.25, 0.1]).is_err());
    assert!(spline_convergence_study::<f64>(&tf, 2, &[0.25, 0.0625]).is_err());
    let step = TestFunction::new(TestFunctionId::Step);
    assert!(spline_convergence_study::<f64>(&step, 2, &[0.25, 0.125, 0.0625, 0.03125]).is_err());
}

#[test]
fn step_converges_at_points_away_from_an_off_knot_jump() {
    let c = 1.0 / 3.0;
    let f = step_at(c, 13);
    let mut errors = Vec::new();
    for level in 3..=8 {
        let space = SplineSpace::new(2, 0.5f64.powi(level), (-2.0, 2.0)).unwrap();
        let s = best_l2_spline(&f, &space).unwrap();
        let err = [-1.0, 0.1, 0.6, 1.2]
            .iter()
            .map(|&x| (s.eval(x) - f64::from(x >= c)).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors[errors.len() - 1] < 1e-2, "{errors:?}");
    assert!(errors[errors.len() - 1] < errors[0]);
}

#[test]
fn perturbed_coefficients_are_worse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = TestFunction::new(TestFunctionId::Gaussian)
        .sample::<f64>(10)
        .unwrap();
    for order in [2, 3, 4] {
        let space = SplineSpace::new(order, 0.25, (-6.0, 6.0)).unwrap();
        let s = best_l2_spline(&f, &space).unwrap();
        let best = l2_distance(&f, &space, &s.coefficients);
        for _ in 0..20 {
            let delta: Vec<f64> = (0..space.basis_count)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let norm = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
            let moved: Vec<f64> = s
                .coefficients
                .iter()
                .zip(&delta)
                .map(|(c, d)| c + 1e-3 * d / norm)
                .collect();
            assert!(l2_distance(&f, &space, &moved) > best - 1e-12, "k={order}");
        }
    }
}

#[test]
fn piecewise_constants_agree_with_the_haar_projection() {
    let haar = make_family(FamilySpec::haar()).unwrap();
    let f = TestFunction::new(TestFunctionId::Gaussian)
        .sample::<f64>(12)
        .unwrap();
    let xs = DyadicGrid::new(-2.0, 2.0, 9).unwrap();
    for j in 0..=6 {
        let space = SplineSpace::new(1, 0.5f64.powi(j), (-6.0, 6.0)).unwrap();
        let s = best_l2_spline(&f, &space).unwrap();
        let p = project(&f, &haar, j, xs).unwrap();
        let worst = xs
            .points()
            .zip(p.values())
            .fold(0.0f64, |m, (x, v)| m.max((s.eval(x) - v).abs()));
        assert!(worst < 1e-8, "j={j}: {worst:e}");
    }
}

#[test]
fn coefficient_csv_lists_every_element() {
    let space = SplineSpace::new(3, 0.25, (0.0, 1.0)).unwrap();
    let s = best_l2_spline(&sampled(0.0, 1.0, 8, |x| x * x), &space).unwrap();
    let text = s.to_csv().render();
    assert!(text.starts_with("knot_index,knot,coefficient\n"));
    assert_eq!(text.lines().count(), space.basis_count + 1);
    assert!(text.lines().nth(1).unwrap().starts_with("-2,"));
}
