//! Exponential tilting, the local large deviation bound, the small-`n`
//! functional `R` with its relaxation, and Monte Carlo probes of the
//! order-statistic events.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::conv::{conv_power, is_one_sided, naive_power, Window};
use crate::criteria::trend::{self, TrendConfig, TrendResult};
use crate::error::{Error, Result};
use crate::fluctuation::WalkSampler;
use crate::io::Table;
use crate::lattice::{exp_window_integral, LatticeDist, OverflowTable};
use crate::numerics::geom_grid;
use crate::numerics::quad::{integrate, QuadOpts};
use crate::regvar::{NormingSeq, RegVarFn};
use crate::rng::{chunked, stream, CHUNK};
use crate::stats::{wilson, MeanVar};

/// Masses at or below which convolution output is treated as FFT noise.
pub const RESOLUTION: f64 = 1e-13;

/// `κ = ⌊1/α⌋`.
pub fn kappa(alpha: f64) -> u32 {
    (1.0 / alpha).floor() as u32
}

/// The law `F·1{X ≤ s}` on the window up to `s`.
#[derive(Debug, Clone, Serialize)]
pub struct Truncated {
    pub s: f64,
    pub j_lo: i64,
    pub j_hi: i64,
    /// Sub-probability masses on `j_lo..=j_hi`.
    pub masses: Vec<f64>,
    /// `P(X ≤ s)` restricted to the window.
    pub mass: f64,
    /// Left-tail mass outside the window, not represented.
    pub dropped: f64,
}

/// `F·1{X ≤ s}` on the indices `base.j_min()..=⌊s⌋`, capped at the window.
pub fn truncate(base: &LatticeDist, s: f64) -> Result<Truncated> {
    let j_hi = base.index_floor(s).min(base.j_max());
    let j_lo = base.j_min().min(j_hi);
    let masses: Vec<f64> = (j_lo..=j_hi).map(|j| base.mass(j)).collect();
    let mass: f64 = masses.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::invalid("s", format!("no mass at or below {s}")));
    }
    Ok(Truncated {
        s,
        j_lo,
        j_hi,
        masses,
        mass,
        dropped: base.left_beyond(),
    })
}

impl Truncated {
    fn normalized(&self, base: &LatticeDist) -> Result<LatticeDist> {
        let m = self.masses.iter().map(|v| v / self.mass).collect();
        LatticeDist::explicit(base.h(), base.a(), self.j_lo, m, base.ell().clone(), base.rho())
    }
}

/// `G_s(dx) = ψ(s)^{-1} e^{x/s} F(dx) 1{x ≤ s}`.
#[derive(Debug, Clone, Serialize)]
pub struct TiltedLaw {
    pub s: f64,
    pub h: f64,
    pub a: f64,
    pub psi: f64,
    pub j_lo: i64,
    /// Masses of `G_s` on `j_lo..`.
    pub masses: Vec<f64>,
    /// `2μ₁(s)/s`, an upper bound for `ln ψ(s)`.
    pub log_psi_bound: f64,
}

/// Tilt `base` at scale `s`.
pub fn tilt(base: &LatticeDist, s: f64) -> Result<TiltedLaw> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("s", format!("{s} must be positive")));
    }
    let tr = truncate(base, s)?;
    let w: Vec<f64> = tr
        .masses
        .iter()
        .enumerate()
        .map(|(k, m)| m * (base.point(tr.j_lo + k as i64) / s).exp())
        .collect();
    let psi: f64 = w.iter().sum();
    Ok(TiltedLaw {
        s,
        h: base.h(),
        a: base.a(),
        psi,
        j_lo: tr.j_lo,
        masses: w.iter().map(|v| v / psi).collect(),
        log_psi_bound: 2.0 * base.truncated_moment(1, s) / s,
    })
}

impl TiltedLaw {
    fn as_dist(&self, base: &LatticeDist) -> Result<LatticeDist> {
        LatticeDist::explicit(self.h, self.a, self.j_lo, self.masses.clone(), base.ell().clone(), base.rho())
    }
}

/// One point of the tilting identity.
#[derive(Debug, Clone, Serialize)]
pub struct TiltRow {
    pub n: u64,
    pub s: f64,
    pub x: f64,
    /// `P(S_n ∈ x + I, X_{n:1} ≤ s)`.
    pub lhs: f64,
    /// `ψ(s)ⁿ E[e^{−S̃_n/s}; S̃_n ∈ x + I]`.
    pub rhs: f64,
    pub rel_diff: f64,
}

/// Both sides of the tilting identity by direct convolution over the full
/// truncated support, at each `x` (cells `x + I`, `I = (0, h]`).
pub fn tilting_identity(base: &LatticeDist, n: u64, s: f64, xs: &[f64]) -> Result<Vec<TiltRow>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let tr = truncate(base, s)?;
    let g = tilt(base, s)?;
    let window = Window::new(n as i64 * tr.j_lo, n as i64 * tr.j_hi)?;
    let f_pow = naive_power(&tr.normalized(base)?, n, window);
    let g_pow = naive_power(&g.as_dist(base)?, n, window);
    let (h, a) = (base.h(), base.a());
    let scale_f = tr.mass.powi(n as i32);
    let scale_g = g.psi.powi(n as i32);
    Ok(xs
        .iter()
        .map(|&x| {
            let t = (x - n as f64 * a) / h;
            let j = t.floor() as i64 + 1;
            let (lhs, rhs) = if j < window.lo || j > window.hi {
                (0.0, 0.0)
            } else {
                let k = (j - window.lo) as usize;
                let y = n as f64 * a + j as f64 * h;
                (scale_f * f_pow[k], scale_g * (-y / s).exp() * g_pow[k])
            };
            let den = lhs.abs().max(rhs.abs());
            TiltRow {
                n,
                s,
                x,
                lhs,
                rhs,
                rel_diff: if den > 0.0 { (lhs - rhs).abs() / den } else { 0.0 },
            }
        })
        .collect())
}

/// `P(S_n ∈ x + I, X_{n:1} ≤ s)` for each `x`, by FFT powers of the
/// normalised truncated law on a window covering `x_max`.
pub fn truncated_cell_probs(base: &LatticeDist, n: u64, s: f64, xs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let tr = truncate(base, s)?;
    let law = tr.normalized(base)?;
    let x_max = xs.iter().cloned().fold(0.0, f64::max);
    let window = Window::covering(&law, x_max + 2.0 * base.h(), 2.0);
    let p = conv_power(&law, n, window, 1.0)?;
    let (h, a) = (base.h(), base.a());
    let scale = tr.mass.powi(n as i32);
    let probs = xs
        .iter()
        .map(|&x| {
            let j = ((x - n as f64 * a) / h).floor() as i64 + 1;
            if j < window.lo || j > window.hi {
                0.0
            } else {
                scale * p.masses[(j - window.lo) as usize]
            }
        })
        .collect();
    Ok((probs, p.ledger))
}

/// One grid point of the local large deviation check.
#[derive(Debug, Clone, Serialize)]
pub struct LldRow {
    pub n: u64,
    pub a_n: f64,
    pub s: f64,
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs/rhs`, or 0 when `lhs` is below the resolution.
    pub ratio: f64,
    pub resolved: bool,
}

/// Local large deviation check over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct LldCheck {
    /// `c = sup 2μ₁(s)ℓ(s)/s` over the `s` values of the grid.
    pub c: f64,
    pub rows: Vec<LldRow>,
    pub sup_ratio: f64,
    /// Sup ratio at each `n`.
    pub sup_by_n: Vec<(u64, f64)>,
    /// Boundedness verdict of the sup ratio along `n`.
    pub trend: TrendResult,
    pub ledger: f64,
}

impl LldCheck {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["n", "a_n", "s", "x", "lhs", "rhs", "ratio", "resolved"]);
        for r in &self.rows {
            t.push(vec![r.n as f64, r.a_n, r.s, r.x, r.lhs, r.rhs, r.ratio, r.resolved as u8 as f64]);
        }
        t
    }
}

/// Compare `P(S_n ∈ x + I, X_{n:1} ≤ s)` with `(1/s + 1/a_n)e^{−x/s + cn/ℓ(s)}`
/// on `s = σ·a_n`, `x = ξ·a_n` for `σ ∈ s_mult`, `ξ ∈ x_mult`. The left side
/// is exact; values below [`RESOLUTION`] are not used in ratios. Grid
/// points with no mass at or below `s` are skipped.
pub fn lld_bound_check(base: &LatticeDist, ns: &[u64], s_mult: &[f64], x_mult: &[f64]) -> Result<LldCheck> {
    if base.alpha() >= 1.0 {
        return Err(Error::Precondition("the local bound is stated for α < 1".into()));
    }
    let norming = NormingSeq::new(base.ell().clone())?;
    let ell = base.ell();
    let mut cells = Vec::new();
    for &n in ns {
        let a_n = norming.get(n);
        for &sm in s_mult {
            let s = sm * a_n;
            if base.truncated_moment(0, s) > 0.0 {
                cells.push((n, a_n, s));
            }
        }
    }
    let c = cells
        .iter()
        .map(|&(_, _, s)| 2.0 * base.truncated_moment(1, s) * ell.eval(s) / s)
        .fold(0.0, f64::max);
    let mut rows = Vec::new();
    let mut ledger = 0.0f64;
    for &(n, a_n, s) in &cells {
        let xs: Vec<f64> = x_mult.iter().map(|m| (m * a_n).round()).collect();
        let (lhs, led) = truncated_cell_probs(base, n, s, &xs)?;
        ledger = ledger.max(led);
        for (x, l) in xs.into_iter().zip(lhs) {
            let rhs = (1.0 / s + 1.0 / a_n) * (-x / s + c * n as f64 / ell.eval(s)).exp();
            let resolved = l > RESOLUTION;
            rows.push(LldRow {
                n,
                a_n,
                s,
                x,
                lhs: l,
                rhs,
                ratio: if resolved { l / rhs } else { 0.0 },
                resolved,
            });
        }
    }
    let mut sup_by_n: Vec<(u64, f64)> = Vec::new();
    for &n in ns {
        let m = rows.iter().filter(|r| r.n == n).map(|r| r.ratio).fold(0.0, f64::max);
        sup_by_n.push((n, m));
    }
    let xs: Vec<f64> = sup_by_n.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = sup_by_n.iter().map(|p| p.1).collect();
    let trend = trend::bounded(&xs, &ys, &TrendConfig::default());
    Ok(LldCheck {
        c,
        sup_ratio: ys.iter().cloned().fold(0.0, f64::max),
        rows,
        sup_by_n,
        trend,
        ledger,
    })
}

/// First `s` on a geometric grid from which `μ₂(s)μ₀(s) > 2μ₁(s)²` holds
/// throughout the grid.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaScan {
    pub theta: Option<f64>,
    pub s: Vec<f64>,
    /// `μ₂μ₀/(2μ₁²)`.
    pub ratio: Vec<f64>,
}

pub fn moment_theta_scan(base: &LatticeDist, s_max: f64, points: usize) -> Result<ThetaScan> {
    if !(s_max > base.h()) || points < 2 {
        return Err(Error::invalid("s_max", "must exceed the span, with two grid points"));
    }
    let s = geom_grid(base.h(), s_max, points);
    let ratio: Vec<f64> = s
        .iter()
        .map(|&v| {
            let (m0, m1, m2) = (
                base.truncated_moment(0, v),
                base.truncated_moment(1, v),
                base.truncated_moment(2, v),
            );
            if m1 > 0.0 {
                m2 * m0 / (2.0 * m1 * m1)
            } else {
                0.0
            }
        })
        .collect();
    let mut theta = None;
    for i in (0..s.len()).rev() {
        if ratio[i] > 1.0 {
            theta = Some(s[i]);
        } else {
            break;
        }
    }
    Ok(ThetaScan { theta, s, ratio })
}

/// Parameters of the small-`n` functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RParams {
    /// Threshold `T`.
    pub t: f64,
    pub eta: f64,
    pub r: f64,
    pub c1: f64,
    pub c2: f64,
    /// Lower summation limit `L(x)`.
    pub l: f64,
    pub delta: f64,
}

impl RParams {
    fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0) {
            return Err(Error::invalid("t", "threshold must be nonnegative"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::invalid("eta", format!("{} not in (0, 1)", self.eta)));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::invalid("r", format!("{} not in (0, 1]", self.r)));
        }
        if !(self.c1 >= 0.5 && self.c1 < 1.0 && self.c2 >= 1.0) {
            return Err(Error::invalid("c1", "need 1/2 ≤ c1 < 1 ≤ c2"));
        }
        if !(self.l > 0.0) {
            return Err(Error::invalid("l", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta", format!("{} not in (0, 1)", self.delta)));
        }
        Ok(())
    }
}

/// Estimate of `R_{T,η,r,c₁,c₂}(x, δ)`.
#[derive(Debug, Clone, Serialize)]
pub struct REstimate {
    pub x: f64,
    pub value: f64,
    /// 3σ radius (0 when the expectation is deterministic).
    pub radius: f64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub samples: u64,
    pub deterministic: bool,
}

/// t-grid for the inner sup: ratio `2^{1/8}`, at least 64 points.
fn sup_grid(lo: f64, hi: f64) -> Vec<f64> {
    let steps = ((hi / lo).log2() * 8.0).ceil().max(0.0) as usize + 1;
    geom_grid(lo, hi, steps.max(64))
}

struct RSetup<'a> {
    base: &'a LatticeDist,
    p: &'a RParams,
    kappa: f64,
    norming: NormingSeq,
    table: OverflowTable,
}

impl RSetup<'_> {
    /// `(N/a_N)·F̄(x_n)/x_n·sup_t Î_{η,N,r}(t, T)`.
    fn term(&self, big_n: u64, x_n: f64) -> f64 {
        if big_n == 0 {
            return 0.0;
        }
        let a = self.norming.get(big_n);
        let s = self.p.r * a;
        let lo = self.p.c1 * x_n / self.kappa;
        let hi = self.p.c2 * x_n + 2.0 * self.base.h();
        let sup = sup_grid(lo, hi)
            .into_iter()
            .map(|t| {
                if self.table.covers(t) {
                    self.table.exp_window(t, self.p.eta, s)
                } else {
                    exp_window_integral(self.base, t, self.p.t, self.p.eta, s).unwrap_or(0.0)
                }
            })
            .fold(0.0, f64::max);
        big_n as f64 / a * self.base.tail(x_n) / x_n * sup
    }
}

/// `R(x, δ)`. For laws without negative mass `N_n = n` and `x_n = x`, so
/// the sum is evaluated directly. Otherwise `n` is drawn uniformly within
/// up to 64 strata of `[L(x), ℓ(δx))` and `(N_n, S_n⁻)` by simulating the
/// walk, `samples` draws in all.
pub fn r_function(base: &LatticeDist, p: &RParams, x: f64, samples: u64, seed: u64) -> Result<REstimate> {
    p.validate()?;
    if !(x > 0.0) {
        return Err(Error::invalid("x", "must be positive"));
    }
    let ell = base.ell();
    let n_lo = p.l.ceil().max(1.0) as u64;
    let n_hi = ell.eval(p.delta * x).ceil() as u64;
    let deterministic = is_one_sided(base);
    let table_hi = 16.0 * p.c2 * x + 4.0 * base.h();
    let setup = RSetup {
        base,
        p,
        kappa: kappa(base.alpha()).max(1) as f64,
        norming: NormingSeq::new(ell.clone())?,
        table: OverflowTable::new(base, p.t, table_hi),
    };
    let pre = x / ell.eval(x);
    if n_hi <= n_lo || setup.table.hot_cells().is_empty() && deterministic {
        return Ok(REstimate {
            x,
            value: 0.0,
            radius: 0.0,
            n_lo,
            n_hi,
            samples: 0,
            deterministic,
        });
    }
    if deterministic {
        let value: f64 = (n_lo..n_hi).map(|n| setup.term(n, x)).sum();
        return Ok(REstimate {
            x,
            value: pre * value,
            radius: 0.0,
            n_lo,
            n_hi,
            samples: 0,
            deterministic,
        });
    }
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least two samples"));
    }
    let strata = strata(n_lo, n_hi);
    let per = (samples / strata.len() as u64).max(2);
    let sampler = WalkSampler::new(base)?;
    let h = base.h();
    let mut value = 0.0;
    let mut var = 0.0;
    for (k, &(s_lo, s_hi)) in strata.iter().enumerate() {
        let parts = chunked(seed ^ ((k as u64) << 32), per, CHUNK, |rng, _, count| {
            let mut mv = MeanVar::default();
            for _ in 0..count {
                let n = rng.gen_range(s_lo..s_hi);
                let (mut big_n, mut neg) = (0u64, 0.0f64);
                for _ in 0..n {
                    let j = sampler.draw(rng);
                    let step = base.a() + j as f64 * h;
                    if step > 0.0 {
                        big_n += 1;
                    } else {
                        neg -= step;
                    }
                }
                mv.push(setup.term(big_n, x + neg));
            }
            mv
        });
        let mut mv = MeanVar::default();
        parts.iter().for_each(|m| mv.merge(m));
        let width = (s_hi - s_lo) as f64;
        value += width * mv.mean;
        var += width * width * mv.se().powi(2);
    }
    Ok(REstimate {
        x,
        value: pre * value,
        radius: 3.0 * pre * var.sqrt(),
        n_lo,
        n_hi,
        samples: per * strata.len() as u64,
        deterministic,
    })
}

/// Up to 64 contiguous strata covering `[lo, hi)`.
fn strata(lo: u64, hi: u64) -> Vec<(u64, u64)> {
    let k = (hi - lo).min(64);
    (0..k).map(|i| (lo + (hi - lo) * i / k, lo + (hi - lo) * (i + 1) / k)).collect()
}

/// The relaxed bound and its ingredients.
#[derive(Debug, Clone, Serialize)]
pub struct RRelaxed {
    pub x: f64,
    pub delta: f64,
    pub value: f64,
    /// `sup_{t ≥ c₁x/κ} I_η(t, T)/(tℓ(t))` over `[c₁x/κ, 64x]`.
    pub sup_ratio: f64,
    pub sup_at: f64,
    /// `∫_{ℓ⁻¹(L)}^{δx} (ℓ(s)/s)² ds`.
    pub integral: f64,
    /// `∫ t/a(t) dt` over `[L, ℓ(δx)]`.
    pub lambda_integral: f64,
    /// Monte Carlo `∑ E(N_n/a_{N_n})` over `L ≤ n < ℓ(δx)`.
    pub lambda_mc: f64,
    pub lambda_radius: f64,
}

/// The relaxed bound on `R`, with `λ(x)` computed two ways.
pub fn r_relaxed(base: &LatticeDist, p: &RParams, x: f64, samples: u64, seed: u64) -> Result<RRelaxed> {
    p.validate()?;
    if !(x > 0.0) {
        return Err(Error::invalid("x", "must be positive"));
    }
    let ell = base.ell();
    let lo = p.c1 * x / kappa(base.alpha()).max(1) as f64;
    let hi = 64.0 * x;
    let table = OverflowTable::new(base, p.t, hi + 2.0 * base.h());
    let (mut sup_ratio, mut sup_at) = (0.0f64, lo);
    for t in geom_grid(lo, hi, ((hi / lo).log2() * 64.0).ceil() as usize + 1) {
        let v = table.overflow(t, p.eta) / (t * ell.eval(t));
        if v > sup_ratio {
            sup_ratio = v;
            sup_at = t;
        }
    }
    let s_lo = ell.invert(p.l)?;
    let s_hi = p.delta * x;
    let integral = if s_hi > s_lo {
        integrate(|s| (ell.eval(s) / s).powi(2), s_lo, s_hi, QuadOpts::rel(1e-10)).value
    } else {
        0.0
    };
    let value = x / ell.eval(x) * sup_ratio * integral;
    let (lambda_integral, lambda_mc, lambda_radius) = lambda(base, ell, p.l, ell.eval(s_hi), samples, seed)?;
    Ok(RRelaxed {
        x,
        delta: p.delta,
        value,
        sup_ratio,
        sup_at,
        integral,
        lambda_integral,
        lambda_mc,
        lambda_radius,
    })
}

/// `λ = ∑_{n_lo ≤ n < n_hi} E(N_n/a_{N_n})` with `N_n ∼ Bin(n, p₊)`, by the
/// integral `∫ t/a(t) dt` and by Monte Carlo; returns
/// `(integral, estimate, 3σ radius)`.
pub fn lambda(base: &LatticeDist, ell: &RegVarFn, n_lo: f64, n_hi: f64, samples: u64, seed: u64) -> Result<(f64, f64, f64)> {
    let norming = NormingSeq::new(ell.clone())?;
    let (a, b) = (n_lo.max(1.0), n_hi);
    if !(b > a) {
        return Ok((0.0, 0.0, 0.0));
    }
    let integral = integrate(
        |u| {
            let t = u.exp();
            t * t / ell.invert(t).unwrap_or(f64::INFINITY)
        },
        a.ln(),
        b.ln(),
        QuadOpts::rel(1e-8),
    )
    .value;
    let p_plus = base.p_plus().min(1.0);
    let (lo, hi) = (a.ceil() as u64, b.ceil() as u64);
    if hi <= lo || samples == 0 {
        return Ok((integral, 0.0, 0.0));
    }
    let st = strata(lo, hi);
    let per = (samples / st.len() as u64).max(2);
    let mut value = 0.0;
    let mut var = 0.0;
    for (k, &(s_lo, s_hi)) in st.iter().enumerate() {
        let mut rng = stream(seed, k as u64);
        let mut mv = MeanVar::default();
        for _ in 0..per {
            let n = rng.gen_range(s_lo..s_hi);
            let big_n = Binomial::new(n, p_plus).map(|d| d.sample(&mut rng)).unwrap_or(n);
            mv.push(if big_n == 0 { 0.0 } else { big_n as f64 / norming.get(big_n) });
        }
        let w = (s_hi - s_lo) as f64;
        value += w * mv.mean;
        var += w * w * mv.se().powi(2);
    }
    Ok((integral, value, 3.0 * var.sqrt()))
}

/// Monte Carlo estimates for the events at one `(n, k, x)`.
#[derive(Debug, Clone, Serialize)]
pub struct EventProbe {
    pub n: u64,
    pub k: u64,
    pub x: f64,
    pub eps: f64,
    pub gamma: f64,
    /// `ζ_{n,x} = a_n^{1−γ}x^γ`.
    pub zeta: f64,
    pub samples: u64,
    pub seed: u64,
    /// `P(E_{n,k,x})`: `S_n ∈ x + I` with exactly `k` steps above `ζ`.
    pub p_e: f64,
    /// `P(Γ_{n,k,x})`: the steps above `ζ` are exactly the first `k`.
    pub p_gamma: f64,
    /// `P(E_{n,k,x}, S_{n:k} ≤ (1 − ε)x)`.
    pub p_e_small_top: f64,
    /// 3σ Wilson half-widths of the three estimates.
    pub radius_e: f64,
    pub radius_gamma: f64,
    pub radius_small_top: f64,
    /// `P̂(E)/(C(n, k)·P̂(Γ))`, recorded only.
    pub combinatorial_ratio: f64,
}

/// Monte Carlo partition of `{S_n ∈ x + I}` by the number of steps above `ζ`.
#[derive(Debug, Clone, Serialize)]
pub struct EventPartition {
    pub n: u64,
    pub x: f64,
    pub zeta: f64,
    pub samples: u64,
    /// `counts[k]`: samples in `E_{n,k,x}`.
    pub counts: Vec<u64>,
    /// `∑_k P̂(E_{n,k,x})`.
    pub total: f64,
    pub se: f64,
}

fn check_gamma(base: &LatticeDist, gamma: f64) -> Result<()> {
    let alpha = base.alpha();
    let lo = 1.0 / (alpha * (kappa(alpha) + 1) as f64);
    if !(gamma > lo && gamma < 1.0) {
        return Err(Error::invalid("gamma", format!("{gamma} not in ({lo}, 1)")));
    }
    Ok(())
}

/// Order statistics of one sample: `S_n` in the cell, number above `ζ`,
/// whether those are the first ones, and the sum of the top `k`.
fn draw_sample<R: Rng + ?Sized>(sampler: &WalkSampler, n: u64, zeta: f64, k: usize, rng: &mut R, buf: &mut Vec<f64>) -> (f64, usize, bool, f64) {
    buf.clear();
    let mut s = 0.0;
    let mut above = 0usize;
    let mut prefix = true;
    for i in 0..n as usize {
        let v = sampler.draw_point(rng);
        s += v;
        if v > zeta {
            above += 1;
            if i >= k {
                prefix = false;
            }
        }
        buf.push(v);
    }
    let top = if k == 0 {
        0.0
    } else {
        let kk = k.min(buf.len());
        buf.select_nth_unstable_by(kk - 1, |a, b| b.total_cmp(a));
        buf[..kk].iter().sum()
    };
    (s, above, prefix && above == k, top)
}

fn in_cell(s: f64, x: f64, h: f64) -> bool {
    s > x && s <= x + h * (1.0 + 1e-12)
}

/// Probe `E_{n,k,x}`, `Γ_{n,k,x}` and `E_{n,k,x} ∩ {S_{n:k} ≤ (1−ε)x}`.
#[allow(clippy::too_many_arguments)]
pub fn event_probe(base: &LatticeDist, n: u64, k: u64, x: f64, eps: f64, gamma: f64, samples: u64, seed: u64) -> Result<EventProbe> {
    check_gamma(base, gamma)?;
    let kap = kappa(base.alpha()) as u64;
    if k > kap + 1 {
        return Err(Error::invalid("k", format!("{k} exceeds κ + 1 = {}", kap + 1)));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps", format!("{eps} not in (0, 1)")));
    }
    if n == 0 || samples == 0 {
        return Err(Error::invalid("n", "n and samples must be positive"));
    }
    let norming = NormingSeq::new(base.ell().clone())?;
    let zeta = norming.get(n).powf(1.0 - gamma) * x.powf(gamma);
    let mut probe = EventProbe {
        n,
        k,
        x,
        eps,
        gamma,
        zeta,
        samples,
        seed,
        p_e: 0.0,
        p_gamma: 0.0,
        p_e_small_top: 0.0,
        radius_e: 0.0,
        radius_gamma: 0.0,
        radius_small_top: 0.0,
        combinatorial_ratio: f64::NAN,
    };
    if k > n {
        return Ok(probe);
    }
    let sampler = WalkSampler::new(base)?;
    let h = base.h();
    let counts = chunked(seed, samples, CHUNK, |rng, _, count| {
        let mut buf = Vec::with_capacity(n as usize);
        let mut c = [0u64; 3];
        for _ in 0..count {
            let (s, above, first, top) = draw_sample(&sampler, n, zeta, k as usize, rng, &mut buf);
            if in_cell(s, x, h) && above == k as usize {
                c[0] += 1;
                c[1] += first as u64;
                c[2] += (top <= (1.0 - eps) * x) as u64;
            }
        }
        c
    })
    .into_iter()
    .fold([0u64; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let est = |c: u64| {
        let (lo, hi) = wilson(c, samples, 3.0);
        (c as f64 / samples as f64, 0.5 * (hi - lo))
    };
    (probe.p_e, probe.radius_e) = est(counts[0]);
    (probe.p_gamma, probe.radius_gamma) = est(counts[1]);
    (probe.p_e_small_top, probe.radius_small_top) = est(counts[2]);
    if counts[1] > 0 {
        probe.combinatorial_ratio = probe.p_e / (binomial(n, k) * probe.p_gamma);
    }
    Ok(probe)
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Split `{S_n ∈ x + I}` into `E_{n,k,x}`, `k = 0..=n`, by simulation.
pub fn event_partition(base: &LatticeDist, n: u64, x: f64, gamma: f64, samples: u64, seed: u64) -> Result<EventPartition> {
    check_gamma(base, gamma)?;
    if n == 0 || samples < 2 {
        return Err(Error::invalid("n", "need n ≥ 1 and two samples"));
    }
    let norming = NormingSeq::new(base.ell().clone())?;
    let zeta = norming.get(n).powf(1.0 - gamma) * x.powf(gamma);
    let sampler = WalkSampler::new(base)?;
    let h = base.h();
    let parts = chunked(seed, samples, CHUNK, |rng, _, count| {
        let mut buf = Vec::with_capacity(n as usize);
        let mut c = vec![0u64; n as usize + 1];
        for _ in 0..count {
            let (s, above, _, _) = draw_sample(&sampler, n, zeta, 0, rng, &mut buf);
            if in_cell(s, x, h) {
                c[above] += 1;
            }
        }
        c
    });
    let mut counts = vec![0u64; n as usize + 1];
    for p in parts {
        for (a, b) in counts.iter_mut().zip(p) {
            *a += b;
        }
    }
    let hits: u64 = counts.iter().sum();
    let total = hits as f64 / samples as f64;
    let p_for_se = if hits == 0 { 1.0 / samples as f64 } else { total };
    Ok(EventPartition {
        n,
        x,
        zeta,
        samples,
        counts,
        total,
        se: (p_for_se * (1.0 - p_for_se) / samples as f64).sqrt(),
    })
}
