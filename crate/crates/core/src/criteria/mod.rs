//! Evaluation of the sufficient conditions for the strong renewal theorem
//! on a concrete law, with every intermediate trajectory kept in the report.

pub mod trend;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::conv::{PowerEngine, Window};
use crate::error::{Error, Result};
use crate::fluctuation::LadderSample;
use crate::lattice::{density_at_scale, LatticeDist, OmegaScan, OverflowTable};
use crate::numerics::geom_grid;
use crate::regvar::RegVarFn;

pub use trend::{bounded, vanishing, TrendConfig, TrendResult, Verdict};

pub const SCHEMA_VERSION: u32 = 1;

/// One evaluated condition.
#[derive(Debug, Clone, Serialize)]
pub struct Condition {
    pub name: String,
    /// The asymptotic statement tested, in words.
    pub requirement: String,
    /// Whether the overall verdict depends on this condition.
    pub required: bool,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// Upper confidence band, for Monte Carlo trajectories.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    pub trend: Option<TrendResult>,
    pub verdict: Verdict,
    /// Scalars used along the way (thresholds, branch tests).
    pub detail: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Condition {
    fn new(name: &str, requirement: &str, x: Vec<f64>, values: Vec<f64>) -> Self {
        Condition {
            name: name.into(),
            requirement: requirement.into(),
            required: true,
            x,
            values,
            upper: None,
            trend: None,
            verdict: Verdict::Inconclusive,
            detail: BTreeMap::new(),
            note: None,
        }
    }

    fn vanishing(mut self, cfg: &TrendConfig) -> Self {
        let t = vanishing(&self.x, &self.values, cfg);
        self.verdict = t.verdict;
        self.trend = Some(t);
        self
    }

    fn bounded(mut self, cfg: &TrendConfig) -> Self {
        let t = bounded(&self.x, &self.values, cfg);
        self.verdict = t.verdict;
        self.trend = Some(t);
        self
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.detail.insert(key.into(), v);
        self
    }
}

/// Combine verdicts: any violation wins, then any inconclusive.
pub fn combine<'a>(vs: impl IntoIterator<Item = &'a Verdict>) -> Verdict {
    let mut out = Verdict::SatisfiedOnRange;
    for v in vs {
        match v {
            Verdict::Violated => return Verdict::Violated,
            Verdict::Inconclusive => out = Verdict::Inconclusive,
            Verdict::SatisfiedOnRange => {}
        }
    }
    out
}

fn check_grid(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("x_grid", "empty"));
    }
    if xs.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::invalid("x_grid", "points must be positive and finite"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("x_grid", "must be strictly increasing"));
    }
    Ok(xs[xs.len() - 1])
}

fn check_t_eta(t: f64, eta: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("{t} must be finite and >= 0")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid("eta", format!("{eta} not in (0, 1]")));
    }
    Ok(())
}

fn check_cutoff(cutoff: &RegVarFn, xs: &[f64]) -> Result<()> {
    for &x in xs {
        let l = cutoff.eval(x);
        if !(l >= 1.0) {
            return Err(Error::invalid("cutoff", format!("L({x}) = {l} is below 1")));
        }
    }
    Ok(())
}

/// `I_η(x, T)` on the grid.
pub fn overflow_values(dist: &LatticeDist, t: f64, eta: f64, xs: &[f64]) -> Result<Vec<f64>> {
    check_t_eta(t, eta)?;
    let x_max = check_grid(xs)?;
    let table = OverflowTable::new(dist, t, x_max + dist.h());
    Ok(xs.iter().map(|&x| table.overflow(x, eta)).collect())
}

/// The three low-cut trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct LowCut {
    /// `L(x)/ℓ(x)`.
    pub ratio: Condition,
    /// `(x/ℓ(x)) ∑_{n<L(x)} F*ⁿ(x+I]`.
    pub plain: Condition,
    /// `(x/ℓ(x)) ∑_{n<L(x)} sup_{t ≥ θx} F*ⁿ(t+I]`.
    pub uniform: Condition,
}

/// Low-cut condition, exact via convolution powers. The uniform form takes
/// the sup over the cells of the window at or beyond `θx`.
pub fn check_lowcut(dist: &LatticeDist, ell: &RegVarFn, cutoff: &RegVarFn, xs: &[f64], theta: f64, cfg: &TrendConfig) -> Result<LowCut> {
    let x_max = check_grid(xs)?;
    check_cutoff(cutoff, xs)?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid("theta", format!("{theta} not in (0, 1]")));
    }
    let cuts: Vec<f64> = xs.iter().map(|&x| cutoff.eval(x)).collect();
    let n_top = cuts.iter().map(|c| c.ceil() as u64).max().unwrap_or(1);
    let mut plain = vec![0.0; xs.len()];
    let mut uniform = vec![0.0; xs.len()];
    let mut exact = true;
    let mut ledger = 0.0;
    if n_top > 1 {
        let window = Window::covering(dist, x_max + 2.0 * dist.h(), 2.0);
        let top = dist.a() + window.hi as f64 * dist.h();
        let mut engine = PowerEngine::new(dist, window)?;
        while engine.n() < n_top {
            let n = engine.n() as f64;
            if n >= 1.0 {
                for (i, &x) in xs.iter().enumerate() {
                    if n < cuts[i] {
                        plain[i] += engine.interval_mass(x, dist.h());
                        uniform[i] += engine.sup_cell(theta * x, top * engine.n() as f64);
                    }
                }
            }
            if engine.n() + 1 >= n_top {
                break;
            }
            engine.step()?;
        }
        exact = engine.is_exact();
        ledger = engine.ledger();
    }
    let scale: Vec<f64> = xs.iter().map(|&x| x / ell.eval(x)).collect();
    let plain: Vec<f64> = plain.iter().zip(&scale).map(|(a, b)| a * b).collect();
    let uniform: Vec<f64> = uniform.iter().zip(&scale).map(|(a, b)| a * b).collect();
    let ratio: Vec<f64> = xs.iter().map(|&x| cutoff.eval(x) / ell.eval(x)).collect();
    let note = (!exact).then(|| "two-sided window: convolution values are lower bounds".to_string());
    let mut plain = Condition::new("lowcut", "(x/ℓ(x)) ∑_{n<L(x)} F*ⁿ(x+I] → 0", xs.to_vec(), plain)
        .with("ledger", ledger)
        .with("n_max", n_top as f64)
        .vanishing(cfg);
    plain.note = note.clone();
    let mut uniform = Condition::new(
        "lowcut-uniform",
        "(x/ℓ(x)) ∑_{n<L(x)} sup_{t≥θx} F*ⁿ(t+I] → 0",
        xs.to_vec(),
        uniform,
    )
    .with("theta", theta)
    .vanishing(cfg);
    uniform.required = false;
    uniform.note = note;
    let ratio = Condition::new("cutoff-ratio", "L(x)/ℓ(x) → 0", xs.to_vec(), ratio).vanishing(cfg);
    Ok(LowCut { ratio, plain, uniform })
}

/// `I_η(x,T)·L(x)²/(ℓ(x)²·ℓ⁻(L(x)))`, which must vanish when `α < 1/2`.
pub fn check_diff2(dist: &LatticeDist, ell: &RegVarFn, cutoff: &RegVarFn, t: f64, eta: f64, xs: &[f64], cfg: &TrendConfig) -> Result<Condition> {
    check_cutoff(cutoff, xs)?;
    let i = overflow_values(dist, t, eta, xs)?;
    let mut v = Vec::with_capacity(xs.len());
    for (&x, iv) in xs.iter().zip(i) {
        let l = cutoff.eval(x);
        let lx = ell.eval(x);
        v.push(iv * l * l / (lx * lx * ell.invert(l)?));
    }
    Ok(Condition::new("diff2", "I_η(x,T) = o(ℓ(x)²ℓ⁻(L(x))/L(x)²)", xs.to_vec(), v)
        .with("t", t)
        .with("eta", eta)
        .vanishing(cfg))
}

/// `I_η(x,T)/k(x)` with `k = ℓ²/u`: bounded when `u(x)/u(ℓ⁻(L(x))) → 1`,
/// vanishing otherwise. The branch is read off the top decade of the grid.
pub fn check_diff_half(dist: &LatticeDist, ell: &RegVarFn, cutoff: &RegVarFn, t: f64, eta: f64, xs: &[f64], cfg: &TrendConfig) -> Result<Condition> {
    check_cutoff(cutoff, xs)?;
    let x_max = check_grid(xs)?;
    let i = overflow_values(dist, t, eta, xs)?;
    let mut u_ratio: f64 = 0.0;
    for &x in xs.iter().filter(|&&x| x >= x_max / 10.0) {
        let lo = ell.invert(cutoff.eval(x))?;
        let r = ell.karamata_u(x) / ell.karamata_u(lo);
        u_ratio = u_ratio.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    let big_o = u_ratio <= cfg.u_ratio;
    let v: Vec<f64> = xs.iter().zip(i).map(|(&x, iv)| iv / ell.karamata_k(x)).collect();
    let c = if big_o {
        Condition::new("diff-half", "I_η(x,T) = O(k(x)) when u(x)/u(ℓ⁻(L(x))) → 1", xs.to_vec(), v).bounded(cfg)
    } else {
        Condition::new("diff-half", "I_η(x,T) = o(k(x)) when u(x)/u(ℓ⁻(L(x))) stays away from 1", xs.to_vec(), v)
            .vanishing(cfg)
    };
    Ok(c.with("u_ratio", u_ratio)
        .with("big_o_branch", big_o as u8 as f64)
        .with("t", t)
        .with("eta", eta))
}

/// Which of the two index branches applies, or neither.
fn index_branch(alpha: f64) -> std::cmp::Ordering {
    if (alpha - 0.5).abs() < 1e-9 {
        std::cmp::Ordering::Equal
    } else {
        alpha.total_cmp(&0.5)
    }
}

/// Setting for the admissible cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CutoffMode {
    Walk,
    /// Ladder variant with `g(x) = x^{2cαϱ}√(M(x)/x)`.
    Ladder { c: f64, varrho: f64 },
}

/// Admissible cutoffs derived from `M` and `β`.
#[derive(Debug, Clone, Serialize)]
pub struct PriorCutoff {
    pub mode: CutoffMode,
    pub beta: f64,
    /// `g`; its index is `g_exponent`.
    pub g: RegVarFn,
    pub g_exponent: f64,
    /// First branch: `L ≪ g/(ln x)^γ` for any `γ > gamma_min`.
    pub gamma_min: f64,
    /// Second branch: `1 ≪ L ≪ g^ε` for any `ε < eps_max`.
    pub eps_max: f64,
    /// `g/(ln x)^{γ_min + 1}`.
    pub example_first: RegVarFn,
    /// `g^{ε_max/2}`.
    pub example_second: RegVarFn,
    /// `ω(x)M(x)/x` must stay bounded.
    pub omega_scan: Condition,
    /// `(x/M(x))/ℓ(x)²` must vanish.
    pub small_vs_ell: Condition,
}

/// Admissible cutoff families from a majorant `M` of index `β`; fails when
/// `M` decreases on the grid, `β` is out of range or `ω M/x` is unbounded.
pub fn prior_cutoff(dist: &LatticeDist, ell: &RegVarFn, m: &RegVarFn, beta: f64, mode: CutoffMode, xs: &[f64], cfg: &TrendConfig) -> Result<PriorCutoff> {
    check_grid(xs)?;
    let alpha = dist.alpha();
    let lo = match mode {
        CutoffMode::Walk => 1.0 - 2.0 * alpha,
        CutoffMode::Ladder { c, varrho } => 1.0 - 2.0 * c * alpha * varrho,
    };
    if !(beta >= lo && beta <= 1.0) {
        return Err(Error::invalid("beta", format!("{beta} not in [{lo}, 1]")));
    }
    let mv: Vec<f64> = xs.iter().map(|&x| m.eval(x)).collect();
    if let Some(k) = mv.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::invalid("m", format!("M decreases between x = {} and {}", xs[k], xs[k + 1])));
    }
    let scan = OmegaScan::new(dist, xs[0], xs[xs.len() - 1], &[]);
    if scan.x.is_empty() {
        return Err(Error::Precondition("no lattice cells on the grid".into()));
    }
    let w: Vec<f64> = scan.x.iter().zip(&scan.omega).map(|(&x, &o)| o * m.eval(x) / x).collect();
    let omega_scan = Condition::new("omega-vs-m", "ω(x) ≪ x/M(x)", scan.x.clone(), w).bounded(cfg);
    if omega_scan.verdict == Verdict::Violated {
        let (k, _) = omega_scan
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (k, &v)| if v > b.1 { (k, v) } else { b });
        return Err(Error::Precondition(format!(
            "ω·M/x unbounded; worst offender x = {}, value {}",
            omega_scan.x[k], omega_scan.values[k]
        )));
    }
    let small: Vec<f64> = xs.iter().map(|&x| x / m.eval(x) / ell.eval(x).powi(2)).collect();
    let small_vs_ell = Condition::new("m-vs-ell", "x/M(x) = o(ℓ(x)²)", xs.to_vec(), small).vanishing(cfg);
    let root = m.powf(0.5).mul(&RegVarFn::power(-0.5, 1.0));
    let g = match mode {
        CutoffMode::Walk => ell.mul(&root),
        CutoffMode::Ladder { c, varrho } => RegVarFn::power(2.0 * c * alpha * varrho, 1.0).mul(&root),
    };
    let gamma_min = alpha + beta;
    let eps_max = 1.0 / (1.0 + alpha + beta);
    Ok(PriorCutoff {
        mode,
        beta,
        g_exponent: g.alpha,
        example_first: g.clone().with_log(1, -(gamma_min + 1.0)),
        example_second: g.powf(0.5 * eps_max),
        g,
        gamma_min,
        eps_max,
        omega_scan,
        small_vs_ell,
    })
}

/// `ω = O(x^c)` together with density `O(x^{-c})` of `E_T` at scale `x^s`.
pub fn check_density_srt(dist: &LatticeDist, t: f64, c: f64, s: f64, x_lo: f64, x_hi: f64, cfg: &TrendConfig) -> Result<Condition> {
    let alpha = dist.alpha();
    if !(c > 0.0 && c < 2.0 * alpha && c <= s && s < 2.0 * alpha) {
        return Err(Error::invalid("c", format!("need 0 < c <= s < 2α = {}, got c = {c}, s = {s}", 2.0 * alpha)));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "must be >= 0"));
    }
    let scan = OmegaScan::new(dist, x_lo, x_hi, &[t]);
    let e = &scan.exceedance[0];
    let growth: Vec<f64> = scan.x.iter().zip(&scan.omega).map(|(&x, &w)| w / x.powf(c)).collect();
    let omega_bound = bounded(&scan.x, &growth, cfg);
    let mut cond = Condition::new(
        "density-at-scale",
        "ω(x) = O(x^c) and E_T has density O(x^{-c}) at scale x^s",
        scan.x.clone(),
        growth,
    )
    .with("t", t)
    .with("c", c)
    .with("s", s)
    .with("e_t_measure", e.measure_in(x_lo, x_hi));
    cond.required = false;
    if e.is_empty() {
        cond.verdict = Verdict::SatisfiedOnRange;
        cond.note = Some("E_T is empty on the range".into());
        cond.trend = Some(omega_bound);
        return Ok(cond);
    }
    let d = density_at_scale(e, c, s, x_lo, x_hi, cfg)?;
    cond.detail.insert("density_constant".into(), d.constant);
    cond.detail.insert("density_worst_x".into(), d.worst_x);
    let dv = if d.holds { Verdict::SatisfiedOnRange } else { Verdict::Violated };
    cond.verdict = combine(&[dv, omega_bound.verdict]);
    cond.trend = Some(omega_bound);
    Ok(cond)
}

/// `I_η` condition for the declared index: the `α < 1/2` or `α = 1/2`
/// form, or a satisfied placeholder for `α > 1/2`.
fn index_condition(dist: &LatticeDist, alpha: f64, ell: &RegVarFn, cutoff: &RegVarFn, t: f64, eta: f64, xs: &[f64], cfg: &TrendConfig) -> Result<Condition> {
    Ok(match index_branch(alpha) {
        std::cmp::Ordering::Less => check_diff2(dist, ell, cutoff, t, eta, xs, cfg)?,
        std::cmp::Ordering::Equal => check_diff_half(dist, ell, cutoff, t, eta, xs, cfg)?,
        std::cmp::Ordering::Greater => {
            let mut c = Condition::new("index-above-half", "α > 1/2 needs no overflow condition", xs.to_vec(), vec![0.0; xs.len()]);
            c.verdict = Verdict::SatisfiedOnRange;
            c.detail.insert("alpha".into(), alpha);
            c
        }
    })
}

/// Conditions for an infinitely divisible law, evaluated on the normalised
/// big-jump law `F_ν` of total mass `nu_mass`.
#[allow(clippy::too_many_arguments)]
pub fn check_levy_criteria(
    f_nu: &LatticeDist,
    nu_mass: f64,
    ell_nu: &RegVarFn,
    cutoff: &RegVarFn,
    t: f64,
    eta: f64,
    eps_list: &[f64],
    xs: &[f64],
    cfg: &TrendConfig,
) -> Result<Vec<Condition>> {
    if !(nu_mass > 0.0 && nu_mass.is_finite()) {
        return Err(Error::invalid("nu_mass", "the Lévy measure needs positive mass beyond 1"));
    }
    let inside: f64 = (f_nu.j_min()..=f_nu.j_max())
        .filter(|&j| f_nu.point(j).abs() < 1.0)
        .map(|j| f_nu.mass(j))
        .sum();
    if inside > 1e-12 {
        return Err(Error::invalid("nu", "F_ν must put no mass inside (−1, 1)"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::invalid("eps", "each ε must lie in (0, 1)"));
    }
    let x_max = check_grid(xs)?;
    check_cutoff(cutoff, xs)?;
    let cuts: Vec<f64> = xs.iter().map(|&x| cutoff.eval(x)).collect();
    let n_top = cuts.iter().map(|c| c.ceil() as u64).max().unwrap_or(1);
    let mut sums = vec![vec![0.0; xs.len()]; eps_list.len()];
    if n_top > 1 {
        let e_max = eps_list.iter().cloned().fold(0.0, f64::max);
        let window = Window::covering(f_nu, (1.0 + e_max) * x_max + 2.0 * f_nu.h(), 2.0);
        let mut engine = PowerEngine::new(f_nu, window)?;
        loop {
            let n = engine.n() as f64;
            if n >= 1.0 {
                for (k, &e) in eps_list.iter().enumerate() {
                    for (i, &x) in xs.iter().enumerate() {
                        if n < cuts[i] {
                            sums[k][i] += engine.sup_cell((1.0 - e) * x, (1.0 + e) * x);
                        }
                    }
                }
            }
            if engine.n() + 1 >= n_top {
                break;
            }
            engine.step()?;
        }
    }
    let mut out = Vec::new();
    for (k, &e) in eps_list.iter().enumerate() {
        let v: Vec<f64> = xs.iter().zip(&sums[k]).map(|(&x, s)| x / ell_nu.eval(x) * s).collect();
        out.push(
            Condition::new(
                &format!("levy-lowcut-eps-{e}"),
                "(x/ℓ(x)) ∑_{n<L(x)} sup_{|t−x|≤εx} F_ν*ⁿ(t+I] → 0",
                xs.to_vec(),
                v,
            )
            .with("eps", e)
            .with("nu_mass", nu_mass)
            .vanishing(cfg),
        );
    }
    let ratio: Vec<f64> = xs.iter().map(|&x| cutoff.eval(x) / ell_nu.eval(x)).collect();
    out.push(Condition::new("cutoff-ratio", "L(x)/ℓ(x) → 0", xs.to_vec(), ratio).vanishing(cfg));
    out.push(index_condition(f_nu, f_nu.alpha(), ell_nu, cutoff, t, eta, xs, cfg)?);
    Ok(out)
}

/// Conditions for the ladder height process. The low-cut sum uses powers
/// of the empirical ladder height law and a Wilson band on `F̄₊`; the
/// overflow conditions use the walk's `ω` against `ℓ₊`.
#[allow(clippy::too_many_arguments)]
pub fn check_ladder_criteria(
    dist: &LatticeDist,
    ladder: &LadderSample,
    ell_plus: &RegVarFn,
    alpha_varrho: f64,
    cutoff: &RegVarFn,
    t: f64,
    eta: f64,
    xs: &[f64],
    cfg: &TrendConfig,
) -> Result<Vec<Condition>> {
    if !(alpha_varrho > 0.0) {
        return Err(Error::invalid("alpha_varrho", "must be positive"));
    }
    if alpha_varrho > 0.5 + 1e-9 {
        return Err(Error::Precondition(format!("αϱ = {alpha_varrho} > 1/2: the ladder conditions do not apply")));
    }
    let x_max = check_grid(xs)?;
    check_cutoff(cutoff, xs)?;
    if ladder.increments.is_empty() {
        return Err(Error::Precondition("no ladder heights observed".into()));
    }
    let h = ladder.h;
    let top = (x_max / h).ceil() as i64 + 2;
    let mut counts = vec![0u64; top as usize + 1];
    for &j in &ladder.increments {
        counts[(j.min(top) - 1).max(0) as usize] += 1;
    }
    let total = ladder.increments.len() as f64;
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let law = LatticeDist::explicit(h, 0.0, 1, masses, ell_plus.clone(), None)?;
    let cuts: Vec<f64> = xs.iter().map(|&x| cutoff.eval(x)).collect();
    let n_top = cuts.iter().map(|c| c.ceil() as u64).max().unwrap_or(1);
    let mut sums = vec![0.0; xs.len()];
    if n_top > 1 {
        let mut engine = PowerEngine::new(&law, Window::new(0, top)?)?;
        loop {
            let n = engine.n() as f64;
            if n >= 1.0 {
                for (i, &x) in xs.iter().enumerate() {
                    if n < cuts[i] {
                        sums[i] += engine.interval_mass(x, h);
                    }
                }
            }
            if engine.n() + 1 >= n_top {
                break;
            }
            engine.step()?;
        }
    }
    let mut est = Vec::with_capacity(xs.len());
    let mut hi = Vec::with_capacity(xs.len());
    for (&x, s) in xs.iter().zip(&sums) {
        let (f, _, fh) = ladder.f_plus_tail(x);
        est.push(x * f * s);
        hi.push(x * fh * s);
    }
    let mut low = Condition::new("ladder-lowcut", "x F̄₊(x) ∑_{n<L(x)} P(H_n ∈ x+I] → 0", xs.to_vec(), est)
        .with("paths", ladder.config.paths as f64)
        .with("censor_fraction", ladder.censor_fraction)
        .vanishing(cfg);
    let upper_verdict = vanishing(xs, &hi, cfg).verdict;
    if upper_verdict != low.verdict {
        low.verdict = Verdict::Inconclusive;
        low.note = Some("estimate and upper band disagree".into());
    }
    low.upper = Some(hi);
    let mut out = vec![low];
    let mut idx = match index_branch(alpha_varrho) {
        std::cmp::Ordering::Equal => check_diff_half(dist, ell_plus, cutoff, t, eta, xs, cfg)?,
        _ => check_diff2(dist, ell_plus, cutoff, t, eta, xs, cfg)?,
    };
    idx.name = format!("ladder-{}", idx.name);
    idx.detail.insert("alpha_varrho".into(), alpha_varrho);
    out.push(idx);
    Ok(out)
}

/// Everything the report needs.
#[derive(Debug, Clone)]
pub struct CriterionInputs<'a> {
    pub dist: &'a LatticeDist,
    pub ell: RegVarFn,
    /// `L`, at least 1 on the grid.
    pub cutoff: RegVarFn,
    pub t: f64,
    pub eta: f64,
    pub x_grid: Vec<f64>,
    /// Uniform low-cut form starts at `θx`.
    pub theta: f64,
    /// `M` and its index `β`.
    pub majorant: Option<(RegVarFn, f64)>,
    /// `(c, s)` for the density-at-scale condition.
    pub density: Option<(f64, f64)>,
    pub config: TrendConfig,
}

impl<'a> CriterionInputs<'a> {
    /// Defaults: `ℓ` of the law, `L ≡ 1`, `T = 1`, `η = 1/2`, `θ = 1/2`,
    /// and a geometric grid of 64 points per decade on `[x_lo, x_hi]`.
    pub fn new(dist: &'a LatticeDist, x_lo: f64, x_hi: f64) -> Self {
        let pts = ((x_hi / x_lo).log10() * 64.0).ceil().max(2.0) as usize;
        CriterionInputs {
            dist,
            ell: dist.ell().clone(),
            cutoff: RegVarFn::constant(1.0),
            t: 1.0,
            eta: 0.5,
            x_grid: geom_grid(x_lo, x_hi, pts),
            theta: 0.5,
            majorant: None,
            density: None,
            config: TrendConfig::default(),
        }
    }
}

/// Report for one law.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub schema_version: u32,
    pub alpha: f64,
    pub t: f64,
    pub eta: f64,
    pub conditions: Vec<Condition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_cutoff: Option<PriorCutoff>,
    pub overall: Verdict,
    /// Required conditions that were violated.
    pub offending: Vec<String>,
    pub config: TrendConfig,
}

impl CriterionReport {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Plain-text summary, one line per condition.
    pub fn render(&self) -> String {
        let mut s = format!("alpha = {}, T = {}, eta = {}\n", self.alpha, self.t, self.eta);
        for c in &self.conditions {
            let v = serde_json::to_value(c.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            s.push_str(&format!(
                "{:<22} {:<18} {}{}\n",
                c.name,
                v,
                c.requirement,
                if c.required { "" } else { " (informative)" }
            ));
        }
        let v = serde_json::to_value(self.overall).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        s.push_str(&format!("overall: {v}\n"));
        if !self.offending.is_empty() {
            s.push_str(&format!("offending: {}\n", self.offending.join(", ")));
        }
        s
    }
}

/// Evaluate the low-cut condition, the overflow condition of the declared
/// index, and the optional density and cutoff checks.
pub fn evaluate(inp: &CriterionInputs) -> Result<CriterionReport> {
    check_t_eta(inp.t, inp.eta)?;
    check_grid(&inp.x_grid)?;
    let dist = inp.dist;
    let alpha = dist.alpha();
    let cfg = &inp.config;
    let xs = &inp.x_grid;
    let low = check_lowcut(dist, &inp.ell, &inp.cutoff, xs, inp.theta, cfg)?;
    let mut conditions = vec![low.ratio, low.plain, low.uniform];
    conditions.push(index_condition(dist, alpha, &inp.ell, &inp.cutoff, inp.t, inp.eta, xs, cfg)?);
    if let Some((c, s)) = inp.density {
        conditions.push(check_density_srt(dist, inp.t, c, s, xs[0], xs[xs.len() - 1], cfg)?);
    }
    let prior_cutoff = match &inp.majorant {
        Some((m, beta)) => Some(prior_cutoff(dist, &inp.ell, m, *beta, CutoffMode::Walk, xs, cfg)?),
        None => None,
    };
    let required: Vec<&Condition> = conditions.iter().filter(|c| c.required).collect();
    let overall = combine(required.iter().map(|c| &c.verdict));
    let offending = required
        .iter()
        .filter(|c| c.verdict == Verdict::Violated)
        .map(|c| c.name.clone())
        .collect();
    Ok(CriterionReport {
        schema_version: SCHEMA_VERSION,
        alpha,
        t: inp.t,
        eta: inp.eta,
        conditions,
        prior_cutoff,
        overall,
        offending,
        config: *cfg,
    })
}
