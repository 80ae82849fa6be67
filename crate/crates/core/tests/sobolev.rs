//! Spectra against closed-form transforms and criterion verdicts against
//! exponent counting near the origin.

use std::f64::consts::PI;

use waverate::sobolev::{family_spectra, sweep, CriterionTable, SampleTransform, Spectrum};
use waverate::{
    critical_order, fourier_transform, make_family, make_family_at, scaling_critical_order,
    wavelet_criterion, CriterionKind, DecayHint, DyadicGrid, FamilySpec, MraFamily,
    SampledFunction, SampledSpectrum,
};

fn family(spec: &str) -> MraFamily {
    make_family(spec.parse::<FamilySpec>().unwrap()).unwrap()
}

/// Index of the frequency closest to `xi`.
fn nearest(spec: &SampledSpectrum, xi: f64) -> usize {
    ((xi - spec.xi[0]) / spec.spacing()).round() as usize
}

/// `|ψ̂(ξ)|` of the Haar wavelet: `(2π)^{-1/2} 4 sin²(ξ/4) / |ξ|`.
fn haar_psi_hat(xi: f64) -> f64 {
    4.0 * (xi / 4.0).sin().powi(2) / xi.abs() / (2.0 * PI).sqrt()
}

#[test]
fn box_transform_is_a_sinc() {
    let grid = DyadicGrid::new(-4.0, 4.0, 10).unwrap();
    let f =
        SampledFunction::from_antiderivative(grid, DecayHint::Compact, |x: f64| x.clamp(-0.5, 0.5))
            .unwrap();
    let spec = fourier_transform(&f, 4).unwrap();
    for xi in [0.0, PI, 2.0 * PI] {
        let i = nearest(&spec, xi);
        assert!(
            (spec.xi[i] - xi).abs() < 1e-12,
            "{xi} is not on the frequency grid"
        );
        let exact = if xi == 0.0 {
            1.0
        } else {
            (xi / 2.0).sin() / (xi / 2.0)
        } / (2.0 * PI).sqrt();
        assert!((spec.value(i).re - exact).abs() < 1e-4, "xi={xi}");
        assert!(spec.value(i).im.abs() < 1e-4);
    }
}

#[test]
fn haar_wavelet_spectrum_is_quadratic_at_the_origin() {
    let fam = make_family_at::<f64>(FamilySpec::haar(), 6).unwrap();
    let spec = fourier_transform(fam.psi(), 1024).unwrap();
    let ratios: Vec<f64> = (0..spec.xi.len())
        .filter(|&i| (0.01..=0.1).contains(&spec.xi[i]))
        .map(|i| spec.value(i).norm_sqr() / spec.xi[i].powi(2))
        .collect();
    assert!(ratios.len() > 10);
    let (lo, hi) = ratios
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    assert!(hi / lo < 1.02, "ratio spread {lo}..{hi}");
    for i in (0..spec.xi.len()).step_by(97) {
        assert!((spec.value(i).norm() - haar_psi_hat(spec.xi[i])).abs() < 1e-6);
    }
}

#[test]
fn gaussian_is_its_own_transform() {
    let grid = DyadicGrid::new(-16.0, 16.0, 10).unwrap();
    let f = SampledFunction::from_fn(grid, DecayHint::None, |x: f64| (-x * x / 2.0).exp()).unwrap();
    let spec = fourier_transform(&f, 4).unwrap();
    let mut checked = 0;
    for i in 0..spec.xi.len() {
        let xi = spec.xi[i];
        if xi.abs() <= 8.0 {
            let v = spec.value(i);
            assert!((v.re - (-xi * xi / 2.0).exp()).abs() < 1e-6, "xi={xi}");
            assert!(v.im.abs() < 1e-6);
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn transforms_are_unitary_and_hermitian() {
    for spec_name in ["daubechies:2", "battle_lemarie:2"] {
        let fam = family(spec_name);
        for f in [fam.phi(), fam.psi()] {
            let spec = fourier_transform(f, 8).unwrap();
            assert!((spec.energy() - f.norm_l2_sq()).abs() < 1e-4, "{spec_name}");
            assert!(spec.hermitian_defect() < 1e-10);
        }
    }
    let fam = family("haar");
    assert!(fourier_transform(fam.phi(), 2).is_err());
}

#[test]
fn coarse_spectra_are_rejected_by_the_criteria() {
    let fam = family("daubechies:2");
    let spec = fourier_transform(fam.psi(), 8).unwrap();
    assert!(matches!(
        wavelet_criterion(&spec, 1.0, 1.0),
        Err(waverate::Error::InsufficientResolution(_))
    ));
}

#[test]
fn haar_wavelet_criterion_verdicts() {
    let (psi, _) = family_spectra(&family("haar")).unwrap();
    assert!(!wavelet_criterion(psi.as_ref(), 0.5, 1.0).unwrap().diverged);
    assert!(wavelet_criterion(psi.as_ref(), 1.5, 1.0).unwrap().diverged);
}

#[test]
fn haar_wavelet_criterion_value_matches_direct_quadrature() {
    let (psi, _) = family_spectra(&family("haar")).unwrap();
    let r = wavelet_criterion(psi.as_ref(), 0.5, 1.0).unwrap();
    // 2 ∫_0^1 |ψ̂|² ξ^{-2} dξ by composite Simpson; the integrand is smooth.
    let g = |x: f64| {
        if x == 0.0 {
            1.0 / (32.0 * PI)
        } else {
            haar_psi_hat(x).powi(2) / (x * x)
        }
    };
    let n = 2000;
    let h = 1.0 / n as f64;
    let simpson: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * g(i as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    let value = r.value.unwrap();
    assert!(
        (value - 2.0 * simpson).abs() < 1e-6 * value,
        "{value} vs {}",
        2.0 * simpson
    );
}

#[test]
fn db2_wavelet_and_scaling_criteria_are_finite_at_one_and_a_half() {
    let (psi, phi) = family_spectra(&family("daubechies:2")).unwrap();
    assert!(!wavelet_criterion(psi.as_ref(), 1.5, 1.0).unwrap().diverged);
    let t = CriterionTable::new(phi.as_ref(), CriterionKind::Scaling, 1.0).unwrap();
    assert!(!t.evaluate(1.5).unwrap().diverged);
}

#[test]
fn haar_scaling_criterion_verdicts() {
    let (_, phi) = family_spectra(&family("haar")).unwrap();
    let t = CriterionTable::new(phi.as_ref(), CriterionKind::Scaling, 1.0).unwrap();
    let finite = t.evaluate(0.5).unwrap();
    assert!(!finite.diverged);
    // 2π|φ̂|² - 1 ≈ -ξ²/12: every node is negative.
    assert_eq!(finite.positive_nodes, 0);
    assert!(finite.signed_value < 0.0);
    assert!(t.evaluate(1.5).unwrap().diverged);
}

#[test]
fn shannon_scaling_criterion_vanishes() {
    let (_, phi) = family_spectra(&family("shannon")).unwrap();
    let t = CriterionTable::new(phi.as_ref(), CriterionKind::Scaling, 1.0).unwrap();
    for s in [0.5, 1.0, 2.0, 4.0] {
        let r = t.evaluate(s).unwrap();
        assert!(!r.diverged);
        assert!(r.value.unwrap().abs() < 1e-12);
    }
}

#[test]
fn refinement_traces_increase() {
    let (psi, _) = family_spectra(&family("daubechies:3")).unwrap();
    for s in [1.0, 2.5, 3.5] {
        let r = wavelet_criterion(psi.as_ref(), s, 1.0).unwrap();
        assert!(r.refinement_trace.windows(2).all(|w| w[1].1 >= w[0].1));
    }
}

#[test]
fn critical_orders_follow_the_vanishing_moments() {
    for (spec, expected, tol) in [
        ("haar", 1.0, 0.1),
        ("daubechies:2", 2.0, 0.15),
        ("daubechies:3", 3.0, 0.15),
        ("battle_lemarie:2", 2.0, 0.15),
    ] {
        let c = critical_order(&family(spec), 1.0).unwrap();
        assert!(
            (c.s_star - expected).abs() <= tol,
            "{spec}: s* = {}",
            c.s_star
        );
        assert!(c.bracket.1 - c.bracket.0 <= 0.05);
    }
}

#[test]
fn verdicts_are_monotone_and_independent_of_epsilon() {
    let fam = family("daubechies:2");
    let (psi, _) = family_spectra(&fam).unwrap();
    let s_values: Vec<f64> = (1..=40).map(|i| i as f64 * 0.1).collect();
    let mut reference: Option<Vec<bool>> = None;
    for eps in [0.5, 1.0, 2.0] {
        let t = CriterionTable::new(psi.as_ref(), CriterionKind::Wavelet, eps).unwrap();
        let verdicts: Vec<bool> = sweep(&t, &s_values)
            .unwrap()
            .iter()
            .map(|r| r.diverged)
            .collect();
        let flip = verdicts.iter().position(|d| *d).unwrap();
        assert!(
            verdicts[flip..].iter().all(|d| *d),
            "eps={eps}: not monotone"
        );
        match &reference {
            Some(r) => assert_eq!(r, &verdicts, "eps={eps}"),
            None => reference = Some(verdicts),
        }
    }
}

#[test]
fn wavelet_and_scaling_thresholds_agree() {
    for spec in ["haar", "daubechies:2", "daubechies:3", "battle_lemarie:2"] {
        let fam = family(spec);
        let w = critical_order(&fam, 1.0).unwrap();
        let s = scaling_critical_order(&fam, 1.0).unwrap();
        assert!(
            (w.s_star - s.s_star).abs() <= 0.15,
            "{spec}: {} vs {}",
            w.s_star,
            s.s_star
        );
    }
}

#[test]
fn direct_transform_of_samples_matches_the_refinement_product() {
    let fam = family("daubechies:2");
    let (psi, _) = family_spectra(&fam).unwrap();
    let direct = SampleTransform::new(fam.psi());
    for xi in [0.05, 0.5, 2.0, 5.0] {
        let (a, b) = (direct.power(xi), psi.power(xi));
        assert!((a - b).abs() < 1e-6 * b.max(1e-3), "xi={xi}: {a} vs {b}");
    }
}
