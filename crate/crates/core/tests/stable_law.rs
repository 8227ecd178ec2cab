use std::f64::consts::PI;

use proptest::prelude::*;
use renewal_core::stable::{ladder_srt_constant, positivity, StableLimit};

// rotated-contour quadrature at 30 digits, contour angle differing from the library's
const DENSITY_ORACLE: &[(f64, f64, f64, f64)] = &[
    (0.5, 1.0, 0.0, 0.10132118364233777),
    (0.5, 1.0, 1.0, 0.061740852609645234),
    (0.5, 1.0, 5.0, 0.017398379499487189),
    (0.7, 0.3, -2.0, 0.012677095674563024),
    (0.7, 0.3, 0.5, 0.0742361174733814),
    (0.7, 0.3, 3.0, 0.10324965702687233),
    (0.3, 0.5, 1.0, 0.067863525112432764),
    (0.3, 0.5, -1.0, 0.030359700681834858),
    (0.5, 0.0, 1.0, 0.22796906388299812),
];

// Mellin closed form of αh∫x^{-α}p at 30 digits
const SRT_ORACLE: &[(f64, f64, f64)] = &[
    (0.5, 0.0, 0.31830988618379067),
    (0.5, 1.0, 0.15915494309189534),
    (0.7, 0.0, 0.25751810740024196),
    (0.7, 0.3, 0.34925814699999991),
    (0.3, 0.5, 0.14012415600735236),
];

#[test]
fn density_matches_oracle() {
    for &(a, r, x, want) in DENSITY_ORACLE {
        let s = StableLimit::new(a, r).unwrap();
        let got = s.density(x).unwrap();
        assert!((got - want).abs() < 1e-8, "alpha={a} rho={r} x={x}: {got} vs {want}");
    }
}

#[test]
fn levy_density_closed_form() {
    let s = StableLimit::new(0.5, 0.0).unwrap();
    for k in 0..60 {
        let x = 0.02 * 1.2f64.powi(k);
        let want = 0.5 * x.powf(-1.5) * (-PI / (4.0 * x)).exp();
        assert!((s.density(x).unwrap() - want).abs() < 1e-6 * want.max(1e-3), "x={x}");
    }
    assert_eq!(s.density(0.0).unwrap(), 0.0);
    assert_eq!(s.density(-3.0).unwrap(), 0.0);
}

#[test]
fn symmetric_density_is_even() {
    let s = StableLimit::new(0.5, 1.0).unwrap();
    for &x in &[0.1, 0.7, 2.0, 13.0, 400.0] {
        assert!((s.density(x).unwrap() - s.density(-x).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn densities_integrate_to_one() {
    for &a in &[0.3, 0.5, 0.7] {
        for &r in &[0.0, 0.5, 1.0] {
            let m = StableLimit::new(a, r).unwrap().total_mass().unwrap();
            assert!((m - 1.0).abs() < 1e-6, "alpha={a} rho={r}: {m}");
        }
    }
}

#[test]
fn tail_normalization() {
    for &(a, r) in &[(0.5, 0.0), (0.7, 0.3), (0.7, 0.0), (0.7, 1.0)] {
        let s = StableLimit::new(a, r).unwrap();
        let x = 1e3f64;
        let v = x.powf(a) * s.tail_prob(x).unwrap();
        assert!((v - 1.0).abs() < 0.02, "alpha={a} rho={r}: {v}");
    }
}

#[test]
fn tail_normalization_slow_for_small_alpha() {
    // the second-order term is of relative order x^{-α}; oracle values from
    // the convergent tail series and from 1 − ∫_0^x p at 30 digits
    for &(a, r, want) in &[(0.3, 0.0, 0.952830743379588), (0.5, 1.0, 0.968900582277202)] {
        let s = StableLimit::new(a, r).unwrap();
        let v = 1e3f64.powf(a) * s.tail_prob(1e3).unwrap();
        assert!((v - want).abs() < 1e-8, "alpha={a} rho={r}: {v}");
    }
    let s = StableLimit::new(0.3, 0.0).unwrap();
    let v = 1e6f64.powf(0.3) * s.tail_prob(1e6).unwrap();
    assert!((v - 0.993990160479636).abs() < 1e-8, "{v}");
}

#[test]
fn srt_constant_matches_closed_form() {
    for &(a, r, want) in SRT_ORACLE {
        let got = StableLimit::new(a, r).unwrap().srt_constant(1.0).unwrap();
        assert!((got - want).abs() < 1e-6 * want, "alpha={a} rho={r}: {got} vs {want}");
    }
}

#[test]
fn srt_constant_one_sided_half_is_one_over_pi() {
    let s = StableLimit::new(0.5, 0.0).unwrap();
    assert!((s.srt_constant(1.0).unwrap() - 1.0 / PI).abs() < 1e-7);
    assert!((s.srt_constant(2.0).unwrap() - 2.0 * s.srt_constant(1.0).unwrap()).abs() < 1e-15);
    let ladder = ladder_srt_constant(0.5, s.varrho(), 1.0).unwrap();
    assert!((ladder - s.srt_constant(1.0).unwrap()).abs() < 1e-6);
}

#[test]
fn clamp_ledger_stays_small() {
    let s = StableLimit::new(0.7, 0.3).unwrap();
    for k in -200..200 {
        s.density(k as f64 * 0.37).unwrap();
    }
    assert!(s.clamp_ledger() <= 1e-7);
}

#[test]
fn positivity_is_one_for_one_sided() {
    for &a in &[0.2, 0.5, 0.9] {
        assert_eq!(positivity(a, 0.0).unwrap(), 1.0);
    }
    assert!(positivity(0.5, 0.3).unwrap() < 1.0);
}

#[test]
fn ladder_small_angle() {
    let v = ladder_srt_constant(1.0, 1e-6, 1.0).unwrap();
    assert!((v - 1e-6).abs() < 1e-15);
}

proptest! {
    #[test]
    fn positivity_in_unit_interval_and_dual(a in 0.05f64..1.95, r in 0.0f64..20.0) {
        prop_assume!((a - 1.0).abs() > 1e-3);
        let p = positivity(a, r).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        if r > 0.0 {
            let q = positivity(a, 1.0 / r).unwrap();
            prop_assert!((p + q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn density_nonnegative(a in 0.2f64..0.9, r in 0.0f64..2.0, x in -50.0f64..50.0) {
        let s = StableLimit::new(a, r).unwrap();
        prop_assert!(s.density(x).unwrap() >= 0.0);
    }
}
