use std::f64::consts::PI;

use mucsp_core::gaussian::*;
use mucsp_core::harness::stream;
use proptest::prelude::*;

proptest! {
    #[test]
    fn quantile_inverts_cdf(d in 1e-9f64..(1.0 - 1e-9)) {
        let t = normal_quantile(d).unwrap();
        prop_assert!((normal_cdf(t) - d).abs() <= 1e-10 * d.max(1e-3));
    }

    #[test]
    fn small_quantiles_obey_the_sandwich_and_shift(e in 4.0f64..12.0) {
        let d = 10f64.powf(-e);
        prop_assert!(quantile_sandwich_holds(d, 0.2).unwrap());
        prop_assert!(cdf_shift_holds(d).unwrap());
    }
}

#[test]
fn single_delta_is_its_own_stability() {
    let est = lambda_estimate(0.7, &[0.3], 400_000, 1).unwrap();
    assert!((est.value - 0.3).abs() < 4.0 * est.stderr);
}

#[test]
fn two_copy_orthant_matches_closed_form() {
    for rho in [0.2, 0.6, 0.9] {
        let est = lambda_estimate(rho, &[0.5, 0.5], 400_000, 2).unwrap();
        let c = rho * rho;
        let exact = 0.25 + c.asin() / (2.0 * PI);
        assert!((est.value - exact).abs() < 4.0 * est.stderr, "ρ = {rho}");
    }
}

#[test]
fn folklore_bound_reports_info_outside_preconditions() {
    let rep = lambda_bound_check(0.5, &[0.01, 0.01], 10_000, 3, 0.01).unwrap();
    assert!(!rep.verdict.is_fail());
    assert_eq!(rep.details["preconditions_hold"], false);
}

#[test]
fn sampler_correlations() {
    let s = CorrelatedSampler::new(1, 0.6, 2).unwrap();
    let mut rng = stream(4, "sampler", 0);
    let n = 200_000;
    let (mut bg, mut cc) = (0.0, 0.0);
    for _ in 0..n {
        let d = sample_correlated(&s, &mut rng);
        bg += d.base[0] * d.copies[0][0];
        cc += d.copies[0][0] * d.copies[1][0];
    }
    assert!((bg / n as f64 - 0.6).abs() < 0.01);
    assert!((cc / n as f64 - 0.36).abs() < 0.01);
    assert!(CorrelatedSampler::new(1, 1.5, 2).is_err());
}

#[test]
fn hermite_moments_are_diagonal() {
    let (same, se) = hermite_noise_moment(&[1, 1], &[1, 1], 0.5, 400_000, 5).unwrap();
    assert!((same - 0.25).abs() < 4.0 * se);
    let (cross, se) = hermite_noise_moment(&[2, 0], &[1, 1], 0.5, 400_000, 6).unwrap();
    assert!(cross.abs() < 4.0 * se);
    assert!(hermite_eval(&[9], &[0.0]).is_err());
    assert!((hermite_eval(&[2], &[2.0]).unwrap() - 3.0 / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn borell_constant_functions() {
    let fs = [GaussianTestFn::Constant { value: 0.5 }, GaussianTestFn::Constant { value: 0.5 }];
    let rep = borell_check(&fs, 2, 0.3, 20_000, 7).unwrap();
    assert_eq!(rep.value, 0.25);
    assert!(rep.passed());
}

#[test]
fn halfspace_volume() {
    let h = GaussianTestFn::halfspace_of_volume(3, 0.2).unwrap();
    assert!((h.mean() - 0.2).abs() < 1e-12);
    let b = GaussianTestFn::Box { lo: vec![-1.0], hi: vec![1.0] };
    assert!((b.mean() - 0.682_689_492_137_086).abs() < 1e-9);
}

#[test]
fn covariance_of_identical_indicators() {
    let f = |x: &[f64]| (x[0] <= 0.0) as u8 as f64;
    let (cov, se, ei, _) = correlated_covariance(f, f, 1, 1.0, 200_000, 8).unwrap();
    assert!((ei - 0.5).abs() < 0.01);
    assert!((cov - 0.25).abs() < 4.0 * se + 1e-3);
    let (cov, se, _, _) = correlated_covariance(f, f, 1, 0.0, 200_000, 9).unwrap();
    assert!(cov.abs() < 4.0 * se);
}
