use renewal_core::criteria::*;
use renewal_core::error::Error;
use renewal_core::fluctuation::{sample_ladder, LadderConfig};
use renewal_core::lattice::{LatticeDist, PowerLawSpec, SeqRule, WilliamsonSpec};
use renewal_core::numerics::geom_grid;
use renewal_core::regvar::RegVarFn;

fn power_law(alpha: f64, rho: f64, centered: bool, x_max: f64) -> LatticeDist {
    LatticeDist::power_law(&PowerLawSpec {
        h: 1.0,
        a: 0.0,
        alpha,
        rho,
        c: None,
        centered,
        x_max,
    })
    .unwrap()
}

fn williamson(b: f64, g: Option<RegVarFn>, x_max: f64) -> LatticeDist {
    LatticeDist::williamson(&WilliamsonSpec {
        h: 1.0,
        b_plus: SeqRule::power(b),
        b_minus: SeqRule::power(b),
        g,
        rho: 1.0,
        x_max,
    })
    .unwrap()
}

/// `j^{-1-α}` on `1..top` with `ω(j−1) ≍ j^c` at the given spike points;
/// the tail beyond `top` is lumped into the last cell.
fn spiked(alpha: f64, c: f64, spikes: &[i64], top: i64) -> LatticeDist {
    let mut w: Vec<f64> = (1..top).map(|j| (j as f64).powf(-1.0 - alpha)).collect();
    for &s in spikes.iter().filter(|&&s| s < top) {
        w[(s - 1) as usize] = (s as f64).powf(c - 1.0 - alpha) / alpha;
    }
    w.push((top as f64).powf(-alpha) / alpha);
    let z: f64 = w.iter().sum();
    let m: Vec<f64> = w.iter().map(|v| v / z).collect();
    let d = LatticeDist::explicit(1.0, 0.0, 1, m, RegVarFn::constant(1.0), None).unwrap();
    let x_ref = top as f64 / 100.0;
    let ell = RegVarFn::power(alpha, 1.0).matched_at(x_ref, 1.0 / d.tail(x_ref));
    d.with_ell(ell)
}

fn grid(lo: f64, hi: f64) -> Vec<f64> {
    geom_grid(lo, hi, ((hi / lo).log10() * 64.0) as usize)
}

fn cfg() -> TrendConfig {
    TrendConfig::default()
}

#[test]
fn lowcut_with_unit_cutoff_is_empty() {
    let d = power_law(0.5, 0.0, false, 1e5);
    let xs = grid(10.0, 1e4);
    let l = check_lowcut(&d, d.ell(), &RegVarFn::constant(1.0), &xs, 0.5, &cfg()).unwrap();
    assert!(l.plain.values.iter().all(|&v| v == 0.0));
    assert_eq!(l.plain.verdict, Verdict::SatisfiedOnRange);
    assert_eq!(l.ratio.verdict, Verdict::SatisfiedOnRange);
}

#[test]
fn lowcut_trends_to_zero_for_slow_cutoff() {
    let d = power_law(0.5, 0.0, false, 1e5);
    let xs = grid(10.0, 3e4);
    let cut = RegVarFn::power(0.1, 1.0).with_floor(1.0);
    let l = check_lowcut(&d, d.ell(), &cut, &xs, 0.5, &cfg()).unwrap();
    assert!(l.plain.values.iter().any(|&v| v > 0.0));
    assert_eq!(l.plain.verdict, Verdict::SatisfiedOnRange, "{:?}", l.plain.trend);
    assert_eq!(l.ratio.verdict, Verdict::SatisfiedOnRange);
    let one = check_lowcut(&d, d.ell(), &cut, &xs, 1.0, &cfg()).unwrap();
    for (a, b) in l.uniform.values.iter().zip(&one.uniform.values) {
        assert!(a >= b);
    }
    for (a, b) in one.uniform.values.iter().zip(&one.plain.values) {
        assert!(a >= b);
    }
}

#[test]
fn diff2_vanishes_below_threshold() {
    let d = power_law(0.3, 0.0, false, 1e6);
    let xs = grid(10.0, 1e5);
    let c = check_diff2(&d, d.ell(), &RegVarFn::constant(1.0), 1.0, 0.5, &xs, &cfg()).unwrap();
    assert!(c.values.iter().all(|&v| v == 0.0));
    assert_eq!(c.verdict, Verdict::SatisfiedOnRange);
}

#[test]
fn diff2_decays_in_the_polynomial_spike_regime() {
    let spikes: Vec<i64> = (3..24).map(|k| 1i64 << k).collect();
    let d = spiked(0.3, 0.2, &spikes, 1 << 23);
    let xs = grid(100.0, 1e6);
    let cut = RegVarFn::power(0.1, 1.0).with_floor(1.0);
    let c = check_diff2(&d, d.ell(), &cut, 1.0, 0.5, &xs, &cfg()).unwrap();
    assert!(c.values.iter().any(|&v| v > 0.0));
    assert_eq!(c.verdict, Verdict::SatisfiedOnRange, "{:?}", c.trend);
    let mut inp = CriterionInputs::new(&d, 10.0, 1e4);
    inp.cutoff = RegVarFn::power(0.7, 1.0).with_floor(1.0);
    let r = evaluate(&inp).unwrap();
    assert_eq!(r.overall, Verdict::Violated);
    assert!(r.offending.contains(&"cutoff-ratio".to_string()));
}

#[test]
fn diff_half_threshold_above_sup_omega() {
    let d = power_law(0.5, 0.0, false, 1e6);
    let xs = grid(10.0, 1e5);
    let c = check_diff_half(&d, d.ell(), &RegVarFn::constant(1.0), 50.0, 0.5, &xs, &cfg()).unwrap();
    assert!(c.values.iter().all(|&v| v == 0.0));
    assert_eq!(c.verdict, Verdict::SatisfiedOnRange);
}

#[test]
fn williamson_spikes_scale_like_k_over_b() {
    let x_max = 2f64.powi(20);
    let xs = grid(16.0, x_max);
    let top = |b: f64| {
        let d = williamson(b, None, x_max);
        let c = check_diff_half(&d, d.ell(), &RegVarFn::constant(1.0), 1.0, 0.5, &xs, &cfg()).unwrap();
        assert_eq!(c.detail["big_o_branch"], 0.0);
        (c.verdict, c.trend.unwrap().last_decade_max)
    };
    let (v1, m1) = top(1.0);
    let (_, m2) = top(2.0);
    assert_eq!(v1, Verdict::Violated);
    assert!(m1 > 10.0 * m2, "{m1} vs {m2}");
}

#[test]
fn williamson_report_names_offender() {
    let d = williamson(1.0, None, 2f64.powi(16));
    let inp = CriterionInputs::new(&d, 16.0, 2f64.powi(16));
    let r = evaluate(&inp).unwrap();
    assert_eq!(r.overall, Verdict::Violated);
    assert_eq!(r.offending, vec!["diff-half".to_string()]);
    let names: Vec<&str> = r.conditions.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names.iter().filter(|n| ["diff2", "diff-half", "index-above-half"].contains(n)).count(), 1);
    let again = evaluate(&inp).unwrap();
    assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
    assert!(r.render().contains("offending: diff-half"));
}

#[test]
fn index_above_half_needs_only_lowcut() {
    let d = power_law(0.7, 0.0, false, 1e6);
    let r = evaluate(&CriterionInputs::new(&d, 10.0, 1e5)).unwrap();
    assert_eq!(r.overall, Verdict::SatisfiedOnRange);
    assert!(r.condition("index-above-half").is_some());
}

#[test]
fn prior_cutoff_for_polynomial_omega() {
    let spikes: Vec<i64> = (3..24).map(|k| 1i64 << k).collect();
    let d = spiked(0.3, 0.2, &spikes, 1 << 23);
    let xs = grid(100.0, 1e6);
    let m = RegVarFn::power(0.8, 1.0);
    let p = prior_cutoff(&d, d.ell(), &m, 0.8, CutoffMode::Walk, &xs, &cfg()).unwrap();
    assert!((p.g_exponent - 0.2).abs() < 1e-12);
    assert!((p.gamma_min - 1.1).abs() < 1e-12);
    assert!((p.eps_max - 1.0 / 2.1).abs() < 1e-12);
    assert_eq!(p.omega_scan.verdict, Verdict::SatisfiedOnRange);
    let err = prior_cutoff(&d, d.ell(), &RegVarFn::power(-0.2, 1.0), 0.8, CutoffMode::Walk, &xs, &cfg()).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "m"));
    let err = prior_cutoff(&d, d.ell(), &RegVarFn::power(0.1, 1.0), 0.1, CutoffMode::Walk, &xs, &cfg()).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "beta"));
    let err = prior_cutoff(&d, d.ell(), &RegVarFn::power(1.0, 1.0), 1.0, CutoffMode::Walk, &xs, &cfg()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn density_condition_examples() {
    let (alpha, c) = (0.3, 0.4);
    let spikes: Vec<i64> = (2..20000).map(|k| (k as f64).powf(1.0 / (1.0 - c)) as i64).collect();
    let d = spiked(alpha, c, &spikes, 1 << 22);
    let r = check_density_srt(&d, 2.0, c, 0.5, 1e3, 1e5, &cfg()).unwrap();
    assert!(r.detail["e_t_measure"] > 0.0);
    assert_eq!(r.verdict, Verdict::SatisfiedOnRange);
    let plain = power_law(alpha, 0.0, false, 1e6);
    let r = check_density_srt(&plain, 5.0, c, 0.5, 1e3, 1e5, &cfg()).unwrap();
    assert_eq!(r.verdict, Verdict::SatisfiedOnRange);
    assert_eq!(r.detail["e_t_measure"], 0.0);
    let geo: Vec<f64> = (0..4000).map(|j| 0.01 * 0.99f64.powi(j)).collect();
    let z: f64 = geo.iter().sum();
    let dense = LatticeDist::explicit(1.0, 0.0, 1, geo.iter().map(|v| v / z).collect(), RegVarFn::power(0.3, 1.0), None).unwrap();
    let r = check_density_srt(&dense, 1.0, c, 0.5, 50.0, 3000.0, &cfg()).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    assert!(check_density_srt(&plain, 1.0, 0.7, 0.5, 1e3, 1e5, &cfg()).is_err());
}

#[test]
fn levy_conditions_on_big_jump_law() {
    let nu = power_law(0.4, 0.0, false, 1e6);
    let xs = grid(10.0, 1e4);
    let v = check_levy_criteria(&nu, 1.0, nu.ell(), &RegVarFn::constant(1.0), 1.0, 0.5, &[0.1], &xs, &cfg()).unwrap();
    assert_eq!(v[0].verdict, Verdict::SatisfiedOnRange);
    assert_eq!(v.last().unwrap().name, "diff2");
    let cut = RegVarFn::power(0.1, 1.0).with_floor(1.0);
    let v = check_levy_criteria(&nu, 1.0, nu.ell(), &cut, 1.0, 0.5, &[0.05, 0.2], &xs, &cfg()).unwrap();
    for (a, b) in v[0].values.iter().zip(&v[1].values) {
        assert!(a <= b);
    }
    assert!(check_levy_criteria(&nu, 0.0, nu.ell(), &cut, 1.0, 0.5, &[0.1], &xs, &cfg()).is_err());
}

#[test]
fn ladder_conditions() {
    let one = power_law(0.5, 0.0, false, 1e6);
    let lad = sample_ladder(&one, &LadderConfig::new(2000, 4, 100, 1)).unwrap();
    let xs = grid(10.0, 1e4);
    let v = check_ladder_criteria(&one, &lad, one.ell(), 0.5, &RegVarFn::constant(1.0), 1.0, 0.5, &xs, &cfg()).unwrap();
    assert!(v[0].values.iter().all(|&x| x == 0.0));
    assert_eq!(v[1].name, "ladder-diff-half");
    let fast = power_law(0.7, 0.0, false, 1e6);
    let lad7 = sample_ladder(&fast, &LadderConfig::new(100, 2, 100, 1)).unwrap();
    assert!(matches!(
        check_ladder_criteria(&fast, &lad7, fast.ell(), 0.7, &RegVarFn::constant(1.0), 1.0, 0.5, &xs, &cfg()),
        Err(Error::Precondition(_))
    ));
    // ϱ = 1/(2α) for α = 1.2 needs ρ_tail ≈ 0.809
    let two = power_law(1.2, 0.809, true, 1e5);
    let lad2 = sample_ladder(&two, &LadderConfig::new(20_000, 4, 100_000, 3)).unwrap();
    let ell_plus = lad2.fit_ell_plus(0.5).unwrap();
    let cut = RegVarFn::power(0.1, 1.0).with_floor(1.0);
    let v = check_ladder_criteria(&two, &lad2, &ell_plus, 0.5, &cut, 1.0, 0.5, &xs, &cfg()).unwrap();
    assert!(v[0].upper.is_some());
    assert!(v[0].values.iter().any(|&x| x > 0.0));
    assert!(v[1].detail.contains_key("big_o_branch"));
}
