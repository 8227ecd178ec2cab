use renewal_core::deviation::*;
use renewal_core::lattice::{LatticeDist, PowerLawSpec};
use renewal_core::numerics::{geom_grid, ls_slope};
use renewal_core::regvar::RegVarFn;

fn power_law(alpha: f64, rho: f64, x_max: f64) -> LatticeDist {
    LatticeDist::power_law(&PowerLawSpec {
        h: 1.0,
        a: 0.0,
        alpha,
        rho,
        c: None,
        centered: false,
        x_max,
    })
    .unwrap()
}

fn fair_walk() -> LatticeDist {
    LatticeDist::explicit(1.0, 0.0, -1, vec![0.5, 0.0, 0.5], RegVarFn::constant(1.0), None).unwrap()
}

fn params(t: f64, delta: f64) -> RParams {
    RParams {
        t,
        eta: 0.5,
        r: 0.5,
        c1: 0.5,
        c2: 2.0,
        l: 4.0,
        delta,
    }
}

#[test]
fn tilt_of_unit_mass() {
    let d = LatticeDist::point_mass(1.0, 0.0, 3).unwrap();
    let g = tilt(&d, 5.0).unwrap();
    assert!((g.psi - (0.6f64).exp()).abs() < 1e-14);
    assert_eq!(g.masses, vec![1.0]);
    assert!(tilt(&d, 2.0).is_err());
}

#[test]
fn tilt_of_fair_walk() {
    let g = tilt(&fair_walk(), 1.0).unwrap();
    let psi = 0.5 * ((-1.0f64).exp() + 1.0f64.exp());
    assert!((g.psi - psi).abs() < 1e-14);
    assert!((g.masses[2] - 0.5 * 1.0f64.exp() / psi).abs() < 1e-14);
    assert!(g.psi.ln() <= g.log_psi_bound);
}

#[test]
fn tilt_of_power_law() {
    let d = power_law(0.5, 0.0, 1e4);
    let s = 100.0;
    let g = tilt(&d, s).unwrap();
    let psi: f64 = (1..=100).map(|j| d.mass(j) * (j as f64 / s).exp()).sum();
    assert!((g.psi - psi).abs() < 1e-13);
    assert!((g.masses.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    assert!(g.psi.ln() <= g.log_psi_bound);
    assert!(g.psi < (d.truncated_moment(1, s) / s).exp() * d.truncated_moment(0, s) * 1.5);
}

#[test]
fn tilting_identity_holds() {
    for (d, n, s) in [(power_law(0.5, 0.0, 1e4), 6, 40.0), (power_law(0.7, 0.3, 1e3), 5, 25.0), (fair_walk(), 9, 1.0)] {
        let xs: Vec<f64> = (0..40).map(|k| 0.5 + 3.0 * k as f64).collect();
        let rows = tilting_identity(&d, n, s, &xs).unwrap();
        for r in rows.iter().filter(|r| r.lhs > 0.0) {
            assert!(r.rel_diff < 1e-10, "n = {n}, x = {}: {}", r.x, r.rel_diff);
        }
        assert!(rows.iter().any(|r| r.lhs > 0.0));
    }
}

#[test]
fn truncated_probability_at_n1_is_the_mass() {
    let d = power_law(0.7, 0.0, 1e4);
    let xs = [0.0, 4.0, 9.0, 19.0, 30.0];
    let (p, _) = truncated_cell_probs(&d, 1, 20.0, &xs).unwrap();
    for (x, v) in xs.iter().zip(p) {
        let want = if *x + 1.0 <= 20.0 { d.mass(*x as i64 + 1) } else { 0.0 };
        assert!((v - want).abs() < 1e-15, "x = {x}");
    }
}

#[test]
fn local_bound_is_bounded_for_one_sided_law() {
    let d = power_law(0.5, 0.0, 1e7);
    let ns = [1, 2, 4, 8, 16, 32, 64, 128, 256];
    let chk = lld_bound_check(&d, &ns, &[0.25, 1.0, 4.0], &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
    assert!(chk.c > 0.0 && chk.c.is_finite());
    assert!(chk.sup_ratio < 10.0, "{}", chk.sup_ratio);
    assert!(chk.rows.iter().filter(|r| r.resolved).count() > chk.rows.len() / 2);
    assert!(chk.ledger < 1e-9);
}

#[test]
fn local_bound_far_regime_decays() {
    let d = power_law(0.7, 0.0, 1e6);
    let chk = lld_bound_check(&d, &[4], &[1.0], &[2.0, 8.0, 32.0]).unwrap();
    let r: Vec<f64> = chk.rows.iter().map(|r| r.lhs).collect();
    assert!(r[0] > r[1] && r[1] > r[2]);
    assert!(lld_bound_check(&power_law(1.2, 0.0, 1e4), &[4], &[1.0], &[1.0]).is_err());
}

#[test]
fn event_with_no_large_steps_matches_truncated_power() {
    let d = power_law(0.7, 0.0, 1e5);
    let (n, x, gamma) = (8, 30.0, 0.8);
    let p = event_probe(&d, n, 0, x, 0.1, gamma, 200_000, 11).unwrap();
    let (want, _) = truncated_cell_probs(&d, n, p.zeta, &[x]).unwrap();
    assert!((p.p_e - want[0]).abs() <= p.radius_e, "{} vs {}", p.p_e, want[0]);
    assert_eq!(p.p_e, p.p_gamma);
}

#[test]
fn event_probe_edge_cases() {
    let d = power_law(0.7, 0.0, 1e5);
    let p = event_probe(&d, 1, 2, 10.0, 0.1, 0.8, 1000, 1).unwrap();
    assert_eq!((p.p_e, p.p_gamma, p.p_e_small_top), (0.0, 0.0, 0.0));
    assert!(event_probe(&d, 4, 3, 10.0, 0.1, 0.8, 1000, 1).is_err());
    assert!(event_probe(&d, 4, 1, 10.0, 0.1, 0.5, 1000, 1).is_err());
    assert!(event_probe(&d, 4, 1, 10.0, 0.0, 0.8, 1000, 1).is_err());
}

#[test]
fn event_partition_recovers_cell_probability() {
    let d = power_law(0.7, 0.3, 1e5);
    for (n, x) in [(4, 10.0), (16, 40.0), (32, 200.0)] {
        let part = event_partition(&d, n, x, 0.8, 100_000, 5).unwrap();
        let (want, _) = truncated_cell_probs(&d, n, 1e9, &[x]).unwrap();
        assert!((part.total - want[0]).abs() <= 3.0 * part.se + 1e-6, "n = {n}: {} vs {}", part.total, want[0]);
        assert_eq!(part.counts.len(), n as usize + 1);
    }
}

#[test]
fn r_function_one_sided_is_deterministic() {
    let d = power_law(0.7, 0.0, 1e6);
    let a = r_function(&d, &params(0.5, 0.5), 2000.0, 0, 1).unwrap();
    let b = r_function(&d, &params(0.5, 0.5), 2000.0, 0, 99).unwrap();
    assert!(a.deterministic && a.radius == 0.0);
    assert_eq!(a.value, b.value);
    assert!(a.value > 0.0);
    let zero = r_function(&d, &params(50.0, 0.5), 2000.0, 0, 1).unwrap();
    assert_eq!(zero.value, 0.0);
}

#[test]
fn r_function_below_relaxed_bound() {
    let d = power_law(0.7, 0.0, 1e6);
    for x in [500.0, 2000.0, 8000.0] {
        let r = r_function(&d, &params(0.5, 0.5), x, 0, 1).unwrap();
        let b = r_relaxed(&d, &params(0.5, 0.5), x, 0, 1).unwrap();
        assert!(r.value <= b.value, "x = {x}: {} > {}", r.value, b.value);
    }
}

#[test]
fn r_function_two_sided_monte_carlo() {
    let d = power_law(0.7, 0.3, 1e5);
    let a = r_function(&d, &params(0.5, 0.5), 1000.0, 1000, 3).unwrap();
    let b = r_function(&d, &params(0.5, 0.5), 1000.0, 1000, 3).unwrap();
    assert!(!a.deterministic);
    assert_eq!(a.value, b.value);
    assert!(a.value > 0.0 && a.radius > 0.0 && a.radius.is_finite());
}

#[test]
fn relaxed_bound_delta_slope() {
    let d = power_law(0.7, 0.0, 1e6);
    let x = 1e4;
    let deltas = geom_grid(0.02, 0.5, 8);
    let v: Vec<f64> = deltas
        .iter()
        .map(|&dl| r_relaxed(&d, &params(0.5, dl), x, 0, 1).unwrap().value)
        .collect();
    let lx: Vec<f64> = deltas.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    let slope = ls_slope(&lx, &ly);
    assert!((slope - 0.4).abs() < 0.15, "{slope}");
}

#[test]
fn lambda_integral_tracks_monte_carlo() {
    let d = power_law(0.7, 0.3, 1e5);
    let (int, mc, rad) = lambda(&d, d.ell(), 16.0, 4096.0, 20_000, 7).unwrap();
    assert!(int > 0.0 && mc > 0.0);
    assert!(rad < 0.1 * mc);
    let r = int / mc;
    assert!((1.0 / 3.0..=3.0).contains(&r), "{r}");
}

#[test]
fn theta_exists_for_power_laws() {
    for d in [power_law(0.5, 0.0, 1e5), power_law(0.7, 0.3, 1e5)] {
        let t = moment_theta_scan(&d, 1e5, 60).unwrap();
        let theta = t.theta.expect("θ");
        assert!(theta < 1e3, "{theta}");
    }
}
