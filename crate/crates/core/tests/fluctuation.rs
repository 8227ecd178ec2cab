use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renewal_core::fluctuation::*;
use renewal_core::lattice::{LatticeDist, PowerLawSpec};
use renewal_core::numerics::geom_grid;
use renewal_core::regvar::RegVarFn;
use renewal_core::stable::{positivity, StableLimit};
use renewal_core::stats::wilson;

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

fn within(k: u64, n: u64, p: f64) -> bool {
    let (lo, hi) = wilson(k, n, 3.0);
    lo <= p && p <= hi
}

#[test]
fn sampler_reproduces_law() {
    let d = power_law(0.7, 0.3, 1e3);
    let s = WalkSampler::new(&d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 200_000;
    let draws: Vec<i64> = (0..n).map(|_| s.draw(&mut rng)).collect();
    let pos = draws.iter().filter(|&&j| j > 0).count() as u64;
    assert!(within(pos, n, d.p_plus()), "p₊");
    for x in [1.0, 10.0, 100.0, 1e3, 1e4, 1e5] {
        let k = draws.iter().filter(|&&j| j as f64 > x).count() as u64;
        assert!(within(k, n, d.tail(x)), "right tail at {x}");
        let k = draws.iter().filter(|&&j| (j as f64) < -x).count() as u64;
        let p = 1.0 - d.tail_from_index(-(x as i64));
        assert!(within(k, n, p), "left tail at {x}");
    }
}

#[test]
fn one_sided_ladder_is_the_walk() {
    let d = power_law(0.5, 0.0, 1e4);
    let mut cfg = LadderConfig::new(20_000, 5, 100, 2);
    cfg.keep_paths = 50;
    let l = sample_ladder(&d, &cfg).unwrap();
    assert_eq!(l.censored, 0);
    assert_eq!(l.increments.len(), 100_000);
    for p in &l.kept {
        assert_eq!(p.epochs, vec![1, 2, 3, 4, 5]);
        assert!(p.ascending.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p.descending, Vec::<i64>::new());
    }
    let n = l.increments.len() as u64;
    for x in [0.5, 1.5, 4.0, 20.0, 300.0, 5e3, 5e4] {
        let (_, lo, hi) = l.f_plus_tail(x);
        let p = d.tail(x).min(1.0);
        assert!(lo <= p && p <= hi, "F̂₊ tail at {x}");
    }
    let ones = (l.f_plus_cell(1) * n as f64).round() as u64;
    assert!(within(ones, n, d.mass(1)));
}

#[test]
fn fair_walk_ladders() {
    let d = fair_walk();
    let mut cfg = LadderConfig::new(50_000, 4, 100_000, 3);
    cfg.cells = 4;
    cfg.keep_paths = 100;
    let l = sample_ladder(&d, &cfg).unwrap();
    assert!(l.increments.iter().all(|&v| v == 1));
    for y in 0..4 {
        let (m, se) = l.v_minus_cell(y).unwrap();
        assert!((m - 2.0).abs() <= 3.0 * se + 0.01, "V̂₋{{{y}}} = {m} ± {se}");
    }
    let cum: Vec<f64> = (0..4).map(|y| l.v_minus_cum(y)).collect();
    for (y, c) in cum.iter().enumerate() {
        assert!((c / (2.0 * (y + 1) as f64) - 1.0).abs() < 0.03);
    }
    for p in &l.kept {
        assert!(p.descending.windows(2).all(|w| w[1] <= w[0]));
        assert!(p.ascending.windows(2).all(|w| w[1] == w[0] + 1));
    }
}

#[test]
fn ladder_tail_index_for_two_sided_law() {
    let d = power_law(1.2, 1.0, 1e5);
    let cfg = LadderConfig::new(1_000_000, 1, 1_000_000, 5);
    let l = sample_ladder(&d, &cfg).unwrap();
    assert!(l.increments.len() >= 990_000);
    let fit = l.tail_index(1.5, 200, 1).unwrap();
    let target = 1.2 * StableLimit::new(1.2, 1.0).unwrap().varrho();
    assert!((fit.exponent - target).abs() <= 0.1, "{fit:?} vs {target}");
    assert!(fit.ci_lo < fit.exponent && fit.exponent < fit.ci_hi);
}

#[test]
fn wiener_hopf_one_sided_reduces_to_step_law() {
    let d = power_law(0.5, 0.0, 1e4);
    let mut cfg = LadderConfig::new(50_000, 1, 10, 6);
    cfg.cells = 8;
    let l = sample_ladder(&d, &cfg).unwrap();
    assert_eq!(l.v_minus_cell(0).unwrap(), (1.0, 0.0));
    let grid = [0.0, 1.0, 2.0, 5.0, 20.0];
    let wh = wiener_hopf_residual(&d, &l, &grid).unwrap();
    for r in &wh.ascending {
        assert!((r.predicted - d.mass(r.j)).abs() < 1e-15);
        assert!((r.predicted_ladder - d.mass(r.j)).abs() < 1e-15);
        assert!(r.z.abs() <= 3.0, "{r:?}");
    }
}

#[test]
fn wiener_hopf_fair_walk() {
    let d = fair_walk();
    let mut cfg = LadderConfig::new(50_000, 1, 100_000, 7);
    cfg.cells = 2;
    let l = sample_ladder(&d, &cfg).unwrap();
    let wh = wiener_hopf_residual(&d, &l, &[0.0, 1.0, 2.0, 3.0]).unwrap();
    for r in wh.ascending.iter().chain(&wh.descending) {
        assert!(r.z.abs() <= 3.0, "{r:?}");
        assert!(r.z_ladder.abs() <= 3.0, "{r:?}");
    }
    // F₊ = δ₁ and F₋ = ½δ₀ + ½δ₋₁
    assert!((wh.ascending[0].predicted_ladder - 1.0).abs() < 0.02);
    assert!((wh.descending[0].predicted - 0.5).abs() < 0.01);
    assert!((wh.descending[1].predicted - 0.5).abs() < 0.01);
}

#[test]
fn wiener_hopf_two_sided_law() {
    let d = power_law(1.2, 1.0, 1e5);
    let mut cfg = LadderConfig::new(100_000, 1, 2000, 8);
    cfg.cells = 200;
    let l = sample_ladder(&d, &cfg).unwrap();
    let grid: Vec<f64> = (0..20).map(|k| 1.5f64.powi(k).floor()).collect();
    let wh = wiener_hopf_residual(&d, &l, &grid).unwrap();
    let (up, down) = wh.within_3sigma();
    assert!(up >= 0.9 && down >= 0.9, "{up} {down}");
    assert!(wh.censored_plus < 5000);
}

#[test]
fn ladder_renewal_half_law() {
    let d = power_law(0.5, 0.0, 1e6);
    let mut cfg = LadderConfig::new(200_000, usize::MAX, 1_000_000, 11);
    cfg.cells = 20_001;
    cfg.height_cap = Some(20_000);
    let l = sample_ladder(&d, &cfg).unwrap();
    let xs: Vec<f64> = geom_grid(100.0, 19_000.0, 12).into_iter().map(|x| x.round()).collect();
    let r = ladder_srt_check(&d, &l, &xs, 0.5, None).unwrap();
    assert!(r.ell_plus_fitted);
    let inside = r.rows.iter().filter(|w| w.lo <= r.target && r.target <= w.hi).count();
    assert!(inside >= 11, "{inside}");
    assert!((r.v_minus_sup - 1.0).abs() < 0.05);
    let c = StableLimit::new(0.5, 0.0).unwrap().srt_constant(1.0).unwrap();
    assert!((r.target - c).abs() < 1e-12);
}

#[test]
fn duality_principle() {
    for (alpha, rho) in [(1.2, 1.0), (0.7, 0.3)] {
        let d = power_law(alpha, rho, 1e4);
        let c = duality_check(&d, 50_000, 200, 9).unwrap();
        assert!(c.z.abs() <= 3.0, "{c:?}");
    }
}

#[test]
fn positivity_one_sided_and_symmetric() {
    let d = power_law(0.5, 0.0, 1e4);
    let p = positivity_mc(&d, 10_000, 2000, 1).unwrap();
    assert_eq!(p.estimate, 1.0);
    let d = power_law(1.2, 1.0, 1e4);
    let p = positivity_mc(&d, 256, 40_000, 2).unwrap();
    let closed = positivity(1.2, 1.0).unwrap();
    assert!((p.estimate - closed).abs() <= 3.0 * p.se, "{p:?}");
}

#[test]
fn compound_poisson_single_atom() {
    let nu = LatticeDist::point_mass(1.0, 0.0, 7).unwrap();
    let s = compound_poisson_build(&nu, 0.8, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000u64;
    let draws: Vec<i64> = (0..n).map(|_| s.sample(5, &mut rng)).collect();
    assert!(draws.iter().all(|v| v % 7 == 0));
    let lam: f64 = 4.0;
    let mut pmf = (-lam).exp();
    for k in 0..12u64 {
        let hits = draws.iter().filter(|&&v| v == 7 * k as i64).count() as u64;
        assert!(within(hits, n, pmf), "k = {k}");
        pmf *= lam / (k + 1) as f64;
    }
}

#[test]
fn compound_poisson_first_order() {
    let nu = power_law(0.4, 0.0, 1e3);
    let mu = 0.01;
    let s = compound_poisson_build(&nu, mu, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200_000u64;
    let zeros = (0..n).filter(|_| s.sample(1, &mut rng) == 0).count() as u64;
    assert!(within(zeros, n, (-mu).exp()));
    assert!(((-mu).exp() - (1.0 - mu)).abs() < mu * mu);
}

#[test]
fn infinitely_divisible_renewal_tracks_srt() {
    let nu = power_law(0.4, 0.0, 1e6);
    let w = LatticeDist::explicit(1.0, 0.0, -1, vec![0.25, 0.5, 0.25], RegVarFn::constant(1.0), None).unwrap();
    let s = compound_poisson_build(&nu, 0.5, Some(&w)).unwrap();
    let xs = [300.0, 1e3, 3e3, 1e4];
    let r = s.renewal_estimate(&xs, 10.0, 100_000, 1_000_000, 3).unwrap();
    let k = StableLimit::new(0.4, 0.0).unwrap().srt_constant(1.0).unwrap();
    for i in 0..xs.len() {
        let rel_se = r.se[i] / r.u_hat[i];
        assert!((r.x_fbar_u[i] / k - 1.0).abs() <= 4.0 * rel_se + 0.03, "{i}: {}", r.x_fbar_u[i] / k);
    }
    assert_eq!(r.censored, 0);
}

#[test]
fn small_jumps_must_be_bounded() {
    let nu = power_law(0.4, 0.0, 1e3);
    assert!(compound_poisson_build(&nu, 0.5, Some(&nu)).is_err());
    assert!(compound_poisson_build(&nu, 0.0, None).is_err());
}

#[test]
fn ladder_needs_lattice_through_origin() {
    let d = LatticeDist::explicit(1.0, 0.5, 0, vec![0.5, 0.5], RegVarFn::constant(1.0), None).unwrap();
    assert!(sample_ladder(&d, &LadderConfig::new(10, 1, 10, 0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn censoring_accounting(seed in 0u64..1000, cap in 1u64..40, m in 1usize..6) {
        let d = power_law(0.7, 0.3, 200.0);
        let mut cfg = LadderConfig::new(3000, m, cap, seed);
        cfg.keep_paths = 3000;
        let l = sample_ladder(&d, &cfg).unwrap();
        prop_assert_eq!(l.completed + l.censored, 3000);
        prop_assert!(l.increments.iter().all(|&v| v > 0));
        prop_assert_eq!(l.kept.iter().filter(|p| p.censored).count() as u64, l.censored);
        for p in &l.kept {
            prop_assert!(p.ascending.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(p.descending.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(p.steps <= cap);
        }
    }

    #[test]
    fn ladder_is_deterministic(seed in 0u64..1000) {
        let d = power_law(1.2, 1.0, 200.0);
        let mut cfg = LadderConfig::new(5000, 2, 500, seed);
        cfg.cells = 10;
        let a = sample_ladder(&d, &cfg).unwrap();
        let b = sample_ladder(&d, &cfg).unwrap();
        prop_assert_eq!(a.increments, b.increments);
        prop_assert_eq!(a.v_minus_sum, b.v_minus_sum);
    }
}
