//! Heavy-tailed laws on a lattice `a + hZ`.
//!
//! A law is stored as a contiguous window of point masses plus a parametric
//! model that supplies every mass beyond the window, so tails and interval
//! masses are available at any `x` without truncation.

mod omega;

pub use omega::{density_at_scale, exp_window_integral, overflow_integral, IntervalSet, OmegaScan, OverflowTable, ScaleDensity};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_log_tail, monotone_root, tail_sum};
use crate::regvar::RegVarFn;

/// Relative distance below which an abscissa is snapped onto the lattice.
const SNAP: f64 = 1e-9;

/// `b_k = coef · k^power`, the spike damping sequence of the spiked laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeqRule {
    pub coef: f64,
    pub power: f64,
}

impl SeqRule {
    pub fn power(power: f64) -> Self {
        SeqRule { coef: 1.0, power }
    }

    pub fn at(&self, k: u32) -> f64 {
        self.coef * (k as f64).powf(self.power)
    }
}

/// Pointwise masses beyond the stored window.
#[derive(Debug, Clone, PartialEq)]
pub enum MassModel {
    /// No mass outside the window.
    Finite,
    /// `c·j^{-1-α}` for `j ≥ 1` and `ρ·c·|j|^{-1-α}` for `j ≤ -1`.
    Power { c: f64, alpha: f64, rho: f64 },
    /// `c·|j|^{-3/2}·g(|j|)` (times `ρ` on the left) off the spikes and
    /// `c·2^{-k/2}/b_k^±` at `j = ±2^k`, `k ≥ 1`.
    Spiked {
        c: f64,
        g: RegVarFn,
        rho: f64,
        b_plus: SeqRule,
        b_minus: SeqRule,
    },
}

const MAX_SPIKE_K: u32 = 240;

fn spike_k(j: u64) -> Option<u32> {
    if j >= 2 && j.is_power_of_two() {
        Some(j.trailing_zeros())
    } else {
        None
    }
}

impl MassModel {
    fn smooth(&self, x: f64) -> f64 {
        match self {
            MassModel::Finite => 0.0,
            MassModel::Power { c, alpha, .. } => c * x.powf(-1.0 - alpha),
            MassModel::Spiked { c, g, .. } => c * x.powf(-1.5) * g.eval_unclamped(x),
        }
    }

    fn side_factor(&self, left: bool) -> f64 {
        match self {
            MassModel::Finite => 0.0,
            MassModel::Power { rho, .. } | MassModel::Spiked { rho, .. } => {
                if left {
                    *rho
                } else {
                    1.0
                }
            }
        }
    }

    /// Mass at lattice index `j`.
    pub fn mass(&self, j: i64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        let left = j < 0;
        let m = j.unsigned_abs();
        if let MassModel::Spiked {
            c, b_plus, b_minus, ..
        } = self
        {
            if let Some(k) = spike_k(m) {
                let b = if left { b_minus.at(k) } else { b_plus.at(k) };
                return c * 2f64.powf(-0.5 * k as f64) / b;
            }
        }
        self.side_factor(left) * self.smooth(m as f64)
    }

    /// `∑_{|j| ≥ m0}` on one side, `m0 ≥ 1`.
    pub fn side_sum_from(&self, m0: u64, left: bool) -> f64 {
        let m0 = m0.max(1);
        match self {
            MassModel::Finite => 0.0,
            MassModel::Power { .. } => {
                self.side_factor(left) * tail_sum(|x| self.smooth(x), m0 as i64)
            }
            MassModel::Spiked {
                c, b_plus, b_minus, ..
            } => {
                let f = self.side_factor(left);
                let mut s = f * tail_sum(|x| self.smooth(x), m0 as i64);
                for k in 1..MAX_SPIKE_K {
                    let p = 2f64.powi(k as i32);
                    if p < m0 as f64 {
                        continue;
                    }
                    let b = if left { b_minus.at(k) } else { b_plus.at(k) };
                    s += c * 2f64.powf(-0.5 * k as f64) / b - f * self.smooth(p);
                }
                s
            }
        }
    }

    /// Draw `|j| ≥ m0` on one side with probability proportional to its mass.
    ///
    /// The smooth part is drawn by inverting its tail integral on
    /// `[m0 − ½, ∞)` and rounding; the relative error of the induced masses
    /// is `O(m0^{-2})`.
    pub fn sample_side<R: Rng + ?Sized>(&self, m0: u64, left: bool, rng: &mut R) -> u64 {
        let m0 = m0.max(1);
        let lo = m0 as f64 - 0.5;
        let phi = |y: f64| -> f64 {
            match self {
                MassModel::Power { c, alpha, .. } => c * y.powf(-alpha) / alpha,
                _ => integrate_log_tail(|x| self.smooth(x), y, 1e-10),
            }
        };
        let draw_smooth = |rng: &mut R| -> u64 {
            let total = phi(lo);
            let target = rng.gen::<f64>() * total;
            let y = match self {
                MassModel::Power { c, alpha, .. } => (target * alpha / c).powf(-1.0 / alpha),
                _ => {
                    let ln_lo = lo.ln();
                    let u = monotone_root(|u| total - phi(u.exp()) - (total - target), ln_lo, ln_lo + 700.0, 1e-12 * total);
                    u.exp()
                }
            };
            if y.is_finite() && y < 9.0e18 {
                (y.round() as u64).max(m0)
            } else {
                u64::MAX / 2
            }
        };
        match self {
            MassModel::Finite => m0,
            MassModel::Power { .. } => draw_smooth(rng),
            MassModel::Spiked {
                c, b_plus, b_minus, ..
            } => {
                let f = self.side_factor(left);
                let mut spikes = Vec::new();
                let mut spike_total = 0.0;
                for k in 1..MAX_SPIKE_K {
                    let p = 2f64.powi(k as i32);
                    if p < m0 as f64 {
                        continue;
                    }
                    let b = if left { b_minus.at(k) } else { b_plus.at(k) };
                    let w = c * 2f64.powf(-0.5 * k as f64) / b;
                    spike_total += w;
                    spikes.push((k, w));
                }
                let smooth_total = f * phi(lo);
                let u = rng.gen::<f64>() * (spike_total + smooth_total);
                if u < spike_total {
                    let mut acc = 0.0;
                    for &(k, w) in &spikes {
                        acc += w;
                        if u < acc {
                            return 1u64 << k.min(62);
                        }
                    }
                    1u64 << spikes.last().map(|s| s.0).unwrap_or(1).min(62)
                } else {
                    loop {
                        let j = draw_smooth(rng);
                        if spike_k(j).is_none() {
                            return j;
                        }
                    }
                }
            }
        }
    }
}

/// Declared builder kind, kept for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    PowerLaw,
    Williamson,
    Explicit,
}

#[derive(Debug, Clone)]
pub struct LatticeDist {
    kind: DistKind,
    h: f64,
    a: f64,
    j_min: i64,
    masses: Vec<f64>,
    model: MassModel,
    right_beyond: f64,
    left_beyond: f64,
    /// `suffix[i] = ∑_{k ≥ i} masses[k] + right_beyond`
    suffix: Vec<f64>,
    ell: RegVarFn,
    rho: Option<f64>,
    /// Relative band within which `F̄ℓ` is declared to match 1 in the window.
    tail_band: f64,
}

/// Parameters of the power-law family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    #[serde(default = "one")]
    pub h: f64,
    #[serde(default)]
    pub a: f64,
    pub alpha: f64,
    /// Left-to-right tail ratio; 0 for one-sided laws.
    #[serde(default)]
    pub rho: f64,
    /// Coefficient of `n^{-1-α}`; `None` normalizes with no atom at 0.
    #[serde(default)]
    pub c: Option<f64>,
    /// Add an atom at `∓h` that makes the mean zero (α > 1 only).
    #[serde(default)]
    pub centered: bool,
    pub x_max: f64,
}

fn one() -> f64 {
    1.0
}

/// Parameters of the spiked family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilliamsonSpec {
    #[serde(default = "one")]
    pub h: f64,
    pub b_plus: SeqRule,
    pub b_minus: SeqRule,
    /// Slowly varying weight; defaults to `ln x`.
    #[serde(default)]
    pub g: Option<RegVarFn>,
    /// Multiplier of `g` on the left.
    #[serde(default = "one")]
    pub rho: f64,
    pub x_max: f64,
}

fn zeta_like(s: f64) -> f64 {
    tail_sum(|x| x.powf(-s), 1)
}

/// Smallest `x ≥ start` from a doubling scan where `f` is increasing.
fn monotone_floor(f: &RegVarFn, start: f64) -> f64 {
    let mut x = start.max(f.floor);
    for _ in 0..200 {
        let probe = f.clone().with_floor(x);
        if probe.validate().is_ok() {
            return x;
        }
        x *= 1.5;
    }
    x
}

impl LatticeDist {
    /// `P(X = a + jh) = c·j^{-1-α}` for `j ≥ 1`, mirrored with weight `ρ`.
    pub fn power_law(spec: &PowerLawSpec) -> Result<Self> {
        let PowerLawSpec {
            h,
            a,
            alpha,
            rho,
            c,
            centered,
            x_max,
        } = *spec;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", "must be positive"));
        }
        if !(0.0..h).contains(&a) {
            return Err(Error::invalid("a", format!("{a} not in [0, h)")));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::invalid("alpha", format!("{alpha} not in (0, 2)")));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::invalid("rho", "must be finite and >= 0"));
        }
        if centered && (alpha <= 1.0 || a != 0.0) {
            return Err(Error::invalid("centered", "requires alpha > 1 and a = 0"));
        }
        let j_max = ((x_max - a) / h).floor();
        if !(j_max >= 64.0) {
            return Err(Error::WindowTooSmall {
                required: a + 64.0 * h,
                missed: 1.0,
            });
        }
        if j_max > 1.0e9 {
            return Err(Error::invalid("x_max", "window above 1e9 lattice points"));
        }
        let j_max = j_max as i64;
        let z1 = zeta_like(1.0 + alpha);
        let drift_z = if centered { zeta_like(alpha) * (1.0 - rho) } else { 0.0 };
        let c = match c {
            Some(c) => {
                if !(c > 0.0) {
                    return Err(Error::invalid("c", "must be positive"));
                }
                c
            }
            None => 1.0 / (z1 * (1.0 + rho) + drift_z.abs()),
        };
        let heavy = c * z1 * (1.0 + rho);
        let drift = c * drift_z;
        let atom0 = if spec.c.is_none() && drift == 0.0 {
            0.0
        } else {
            1.0 - heavy - drift.abs()
        };
        if atom0 < -1e-14 {
            return Err(Error::invalid(
                "c",
                format!("total heavy mass {} exceeds 1", heavy + drift.abs()),
            ));
        }
        let model = MassModel::Power { c, alpha, rho };
        let j_min = if rho > 0.0 { -j_max } else { 0 };
        let mut masses: Vec<f64> = (j_min..=j_max).map(|j| model.mass(j)).collect();
        masses[(-j_min) as usize] = atom0.max(0.0);
        if drift != 0.0 {
            let j = if drift > 0.0 { -1 } else { 1 };
            let idx = (j - j_min) as usize;
            if idx >= masses.len() {
                return Err(Error::invalid("centered", "window cannot hold the centering atom"));
            }
            masses[idx] += drift.abs();
        }
        let right_beyond = model.side_sum_from(j_max as u64 + 1, false);
        let left_beyond = if rho > 0.0 {
            model.side_sum_from((-j_min) as u64 + 1, true)
        } else {
            0.0
        };
        // F̄(x) ~ (c/α)(x/h)^{-α}
        let ell = RegVarFn::power(alpha, alpha * h.powf(-alpha) / c);
        LatticeDist::assemble(
            DistKind::PowerLaw,
            h,
            a,
            j_min,
            masses,
            model,
            right_beyond,
            left_beyond,
            ell,
            if rho > 0.0 { Some(rho) } else { None },
            0.05,
        )
    }

    /// The spiked family: `C 2^{-k/2}/b_k^±` at `±2^k`, `C|n|^{-3/2} g(|n|)`
    /// elsewhere (left side weighted by `ρ`), `C` normalizing.
    pub fn williamson(spec: &WilliamsonSpec) -> Result<Self> {
        let h = spec.h;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", "must be positive"));
        }
        for (name, b) in [("b_plus", spec.b_plus), ("b_minus", spec.b_minus)] {
            if !(b.coef > 0.0 && b.power.is_finite() && b.power >= 0.0) {
                return Err(Error::invalid(
                    format!("{name}"),
                    "need coef > 0 and power >= 0 so that inf b_k > 0",
                ));
            }
        }
        if !(spec.rho >= 0.0 && spec.rho.is_finite()) {
            return Err(Error::invalid("rho", "must be finite and >= 0"));
        }
        let g = spec
            .g
            .clone()
            .unwrap_or_else(|| RegVarFn::power(0.0, 1.0).with_log(1, 1.0));
        if g.alpha != 0.0 {
            return Err(Error::invalid("g.alpha", "g must be slowly varying"));
        }
        let j_max = (spec.x_max / h).floor();
        if !(j_max >= 64.0) {
            return Err(Error::WindowTooSmall {
                required: 64.0 * h,
                missed: 1.0,
            });
        }
        if j_max > 1.0e9 {
            return Err(Error::invalid("x_max", "window above 1e9 lattice points"));
        }
        let j_max = j_max as i64;
        let raw = MassModel::Spiked {
            c: 1.0,
            g: g.clone(),
            rho: spec.rho,
            b_plus: spec.b_plus,
            b_minus: spec.b_minus,
        };
        let j_min = -j_max;
        let window_raw: f64 = (j_min..=j_max).map(|j| raw.mass(j)).sum();
        let total = window_raw
            + raw.side_sum_from(j_max as u64 + 1, false)
            + raw.side_sum_from((-j_min) as u64 + 1, true);
        let c = 1.0 / total;
        let model = MassModel::Spiked {
            c,
            g: g.clone(),
            rho: spec.rho,
            b_plus: spec.b_plus,
            b_minus: spec.b_minus,
        };
        let masses: Vec<f64> = (j_min..=j_max).map(|j| model.mass(j)).collect();
        let right_beyond = model.side_sum_from(j_max as u64 + 1, false);
        let left_beyond = model.side_sum_from((-j_min) as u64 + 1, true);
        let shape = RegVarFn::power(0.5, 1.0).div(&g);
        let floor = monotone_floor(&shape, 1.0);
        let shape = shape.with_floor(floor);
        let mut dist = LatticeDist::assemble(
            DistKind::Williamson,
            h,
            0.0,
            j_min,
            masses,
            model,
            right_beyond,
            left_beyond,
            shape.clone(),
            Some(spec.rho),
            0.5,
        )?;
        let x_edge = j_max as f64 * h;
        dist.ell = shape.matched_at(x_edge, 1.0 / dist.tail(x_edge));
        Ok(dist)
    }

    /// A law given by its masses on `a + jh`, `j = j_min, …`.
    pub fn explicit(h: f64, a: f64, j_min: i64, masses: Vec<f64>, ell: RegVarFn, rho: Option<f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", "must be positive"));
        }
        if !(0.0..h).contains(&a) {
            return Err(Error::invalid("a", format!("{a} not in [0, h)")));
        }
        if masses.is_empty() {
            return Err(Error::invalid("masses", "empty"));
        }
        for (i, &m) in masses.iter().enumerate() {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::invalid(format!("masses[{i}]"), format!("{m} is not a probability")));
            }
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("masses", format!("sum {total} differs from 1")));
        }
        let masses = masses.iter().map(|m| m / total).collect();
        LatticeDist::assemble(DistKind::Explicit, h, a, j_min, masses, MassModel::Finite, 0.0, 0.0, ell, rho, f64::INFINITY)
    }

    /// Unit mass at `a + jh`.
    pub fn point_mass(h: f64, a: f64, j: i64) -> Result<Self> {
        LatticeDist::explicit(h, a, j, vec![1.0], RegVarFn::power(1.0, 1.0), None)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: DistKind,
        h: f64,
        a: f64,
        j_min: i64,
        masses: Vec<f64>,
        model: MassModel,
        right_beyond: f64,
        left_beyond: f64,
        ell: RegVarFn,
        rho: Option<f64>,
        tail_band: f64,
    ) -> Result<Self> {
        let mut suffix = vec![0.0; masses.len() + 1];
        suffix[masses.len()] = right_beyond;
        for i in (0..masses.len()).rev() {
            suffix[i] = suffix[i + 1] + masses[i];
        }
        let total = suffix[0] + left_beyond;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("total mass {total} is not 1")));
        }
        let d = LatticeDist {
            kind,
            h,
            a,
            j_min,
            masses,
            model,
            right_beyond,
            left_beyond,
            suffix,
            ell,
            rho,
            tail_band,
        };
        if d.tail(0.0) <= 0.0 && kind != DistKind::Explicit {
            return Err(Error::Precondition("no mass on (0, ∞)".into()));
        }
        Ok(d)
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn j_min(&self) -> i64 {
        self.j_min
    }
    pub fn j_max(&self) -> i64 {
        self.j_min + self.masses.len() as i64 - 1
    }
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
    pub fn model(&self) -> &MassModel {
        &self.model
    }
    pub fn ell(&self) -> &RegVarFn {
        &self.ell
    }
    pub fn rho(&self) -> Option<f64> {
        self.rho
    }
    pub fn right_beyond(&self) -> f64 {
        self.right_beyond
    }
    pub fn left_beyond(&self) -> f64 {
        self.left_beyond
    }
    pub fn tail_band(&self) -> f64 {
        self.tail_band
    }
    pub fn alpha(&self) -> f64 {
        self.ell.alpha
    }
    /// Replace the declared `ℓ`.
    pub fn with_ell(mut self, ell: RegVarFn) -> Self {
        self.ell = ell;
        self
    }

    /// Position of lattice index `j`.
    pub fn point(&self, j: i64) -> f64 {
        self.a + j as f64 * self.h
    }

    /// Largest `j` with `a + jh ≤ x`, snapping `x` onto nearby lattice points.
    pub fn index_floor(&self, x: f64) -> i64 {
        let t = (x - self.a) / self.h;
        let r = t.round();
        if (t - r).abs() <= SNAP * r.abs().max(1.0) {
            r as i64
        } else {
            t.floor() as i64
        }
    }

    /// Mass at index `j`.
    pub fn mass(&self, j: i64) -> f64 {
        if j >= self.j_min && j <= self.j_max() {
            self.masses[(j - self.j_min) as usize]
        } else {
            self.model.mass(j)
        }
    }

    /// `P(X ≥ a + jh)`.
    pub fn tail_from_index(&self, j: i64) -> f64 {
        if j < self.j_min {
            // mass on [j, j_min) lies in the left model tail
            let below = if j <= 0 {
                self.model.side_sum_from((1 - j) as u64, true)
            } else {
                self.left_beyond
            };
            (self.suffix[0] + (self.left_beyond - below).max(0.0)).min(1.0)
        } else if j > self.j_max() {
            if j <= 0 {
                return self.suffix[self.masses.len()];
            }
            self.model.side_sum_from(j as u64, false)
        } else {
            self.suffix[(j - self.j_min) as usize]
        }
    }

    /// `F̄(x) = P(X > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return if x < 0.0 { 1.0 } else { 0.0 };
        }
        self.tail_from_index(self.index_floor(x) + 1)
    }

    /// `F(x, x + len] = P(x < X ≤ x + len)`, summed pointwise.
    pub fn interval_mass(&self, x: f64, len: f64) -> f64 {
        let j0 = self.index_floor(x) + 1;
        let j1 = self.index_floor(x + len);
        if j1 < j0 {
            return 0.0;
        }
        if j1 - j0 > 1_000_000 {
            return (self.tail_from_index(j0) - self.tail_from_index(j1 + 1)).max(0.0);
        }
        (j0..=j1).map(|j| self.mass(j)).sum()
    }

    /// `p₊ = F̄(0)`.
    pub fn p_plus(&self) -> f64 {
        self.tail(0.0)
    }

    /// `ω(x) = x·F(x + I]/F̄(x)` with `I = (0, h]`.
    pub fn omega(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::invalid("x", format!("{x} must be positive")));
        }
        let j = self.index_floor(x) + 1;
        let tail = self.tail_from_index(j);
        if tail <= 0.0 {
            return Err(Error::OutOfSupport { x });
        }
        Ok(x * self.mass(j) / tail)
    }

    /// `μ_p(s) = E[X^p; 0 < X ≤ s]`, an exact lattice sum.
    pub fn truncated_moment(&self, p: u32, s: f64) -> f64 {
        if p == 0 {
            return (self.tail(0.0) - self.tail(s)).max(0.0);
        }
        let j_lo = self.index_floor(0.0) + 1;
        let j_hi = self.index_floor(s);
        let mut acc = 0.0;
        let mut j = j_lo;
        while j <= j_hi {
            let m = self.mass(j);
            if m > 0.0 {
                acc += self.point(j).powi(p as i32) * m;
            }
            j += 1;
        }
        acc
    }

    /// `μ_p(s)(p − α)ℓ(s)/(α s^p)`, which tends to 1 for `p > α`.
    pub fn karamata_moment_ratio(&self, p: u32, s: f64) -> f64 {
        let alpha = self.alpha();
        self.truncated_moment(p, s) * (p as f64 - alpha) * self.ell.eval(s) / (alpha * s.powi(p as i32))
    }

    /// Maximum of `|F̄(x)ℓ(x) − 1|` over a geometric grid of window points
    /// from `x_from` to the window edge.
    pub fn tail_consistency(&self, x_from: f64) -> f64 {
        let edge = self.point(self.j_max());
        if edge <= x_from {
            return 0.0;
        }
        crate::numerics::geom_grid(x_from, edge, 64)
            .into_iter()
            .map(|x| (self.tail(x) * self.ell.eval(x) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Empirical left/right tail ratio `F(−x)/F̄(x)` at `x`.
    pub fn tail_ratio_at(&self, x: f64) -> f64 {
        let left = 1.0 - self.tail_from_index(self.index_floor(-x));
        // P(X ≤ −x) counts the point −x; the right side counts X > x
        let right = self.tail(x);
        left / right
    }

    /// Mean of the law restricted to the window plus model tails, when
    /// finite (`None` for heavy tails with exponent ≤ 1).
    pub fn mean_if_finite(&self) -> Option<f64> {
        if self.right_beyond + self.left_beyond > 0.0 && self.alpha() <= 1.0 {
            return None;
        }
        let w: f64 = self
            .masses
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.point(self.j_min + i as i64))
            .sum();
        let tails = match &self.model {
            MassModel::Power { c, alpha, rho } => {
                let r = self.j_max() as u64 + 1;
                let right = c * tail_sum(|x| x.powf(-alpha), r as i64) * self.h;
                let left = if self.j_min < 0 {
                    rho * c * tail_sum(|x| x.powf(-alpha), (-self.j_min) + 1) * self.h
                } else {
                    0.0
                };
                right - left + self.a * (self.right_beyond + self.left_beyond)
            }
            _ => 0.0,
        };
        Some(w + tails)
    }
}
