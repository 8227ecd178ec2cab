//! The ratio `ω(y) = y·F(y + I]/F̄(y)` and its overflow integrals.
//!
//! On the cell `[x_i, x_{i+1})` between consecutive lattice points the mass
//! `F(y + I]` and the tail `F̄(y)` are constant, so `ω(y) = c_i·y` is linear
//! and every integral of `[ω − T]^+` against `1` or an exponential weight has
//! a closed form per cell.

use serde::Serialize;

use super::LatticeDist;
use crate::criteria::trend::{bounded, TrendConfig, Verdict};
use crate::error::{Error, Result};
use crate::numerics::{geom_grid, z_exp_minus_expm1};

/// Slope `c_i` of `ω` on cell `i`, or `None` past the support.
fn cell_slope(dist: &LatticeDist, i: i64) -> Option<f64> {
    let tail = dist.tail_from_index(i + 1);
    if tail <= 0.0 {
        None
    } else {
        Some(dist.mass(i + 1) / tail)
    }
}

/// `∫_l^u e^{(y−x)/s} [c·y − T]^+ dy`; `s = ∞` drops the weight.
fn cell_excess(c: f64, t: f64, l: f64, u: f64, x: f64, s: f64) -> f64 {
    if c <= 0.0 || u <= l {
        return 0.0;
    }
    let lo = l.max(t / c);
    if lo >= u {
        return 0.0;
    }
    if s.is_infinite() {
        return (u - lo) * (0.5 * c * (u + lo) - t);
    }
    let z = (u - lo) / s;
    let w = ((lo - x) / s).exp();
    w * ((c * lo - t) * s * z.exp_m1() + c * s * s * z_exp_minus_expm1(z))
}

/// `I_η(x, T) = ∫_{(1−η)x}^x [ω(y) − T]^+ dy`, summed cell by cell.
pub fn overflow_integral(dist: &LatticeDist, x: f64, t: f64, eta: f64) -> Result<f64> {
    weighted_overflow(dist, x, t, eta, f64::INFINITY)
}

/// `Î(x, T) = ∫_{(1−η)x}^x e^{−(x−y)/s} [ω(y) − T]^+ dy` with `s = r·a_n`.
pub fn exp_window_integral(dist: &LatticeDist, x: f64, t: f64, eta: f64, s: f64) -> Result<f64> {
    weighted_overflow(dist, x, t, eta, s)
}

fn check_args(x: f64, t: f64, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid("eta", format!("{eta} not in (0, 1]")));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("T", format!("{t} must be >= 0")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid("x", format!("{x} must be positive")));
    }
    Ok(())
}

fn weighted_overflow(dist: &LatticeDist, x: f64, t: f64, eta: f64, s: f64) -> Result<f64> {
    check_args(x, t, eta)?;
    let lo = ((1.0 - eta) * x).max(x - 40.0 * s);
    let i0 = dist.index_floor(lo);
    let i1 = dist.index_floor(x);
    // walk down from x, accumulating the tail instead of re-summing it per cell
    let mut acc = 0.0;
    let mut tail = dist.tail_from_index(i1 + 1);
    for i in (i0..=i1).rev() {
        if tail > 0.0 {
            let l = dist.point(i).max(lo);
            let u = dist.point(i + 1).min(x);
            acc += cell_excess(dist.mass(i + 1) / tail, t, l, u, x, s);
        }
        tail += dist.mass(i);
    }
    Ok(acc)
}

/// Precomputed cell slopes and excess prefix sums for one threshold `T`.
#[derive(Debug, Clone)]
pub struct OverflowTable {
    t: f64,
    i_lo: i64,
    slopes: Vec<f64>,
    /// prefix[k] = ∑_{cells < i_lo + k} full-cell excess
    prefix: Vec<f64>,
    /// cells with positive excess somewhere
    hot: Vec<i64>,
    h: f64,
    a: f64,
}

impl OverflowTable {
    /// Table over the cells meeting `[0, x_hi]`.
    pub fn new(dist: &LatticeDist, t: f64, x_hi: f64) -> Self {
        let i_lo = dist.index_floor(0.0);
        let i_hi = dist.index_floor(x_hi) + 1;
        let n = (i_hi - i_lo + 1).max(0) as usize;
        let mut slopes = Vec::with_capacity(n);
        let mut prefix = Vec::with_capacity(n + 1);
        let mut hot = Vec::new();
        prefix.push(0.0);
        let mut acc = 0.0;
        for k in 0..n as i64 {
            let i = i_lo + k;
            let c = cell_slope(dist, i).unwrap_or(0.0);
            let l = dist.point(i).max(0.0);
            let u = dist.point(i + 1);
            let e = cell_excess(c, t, l, u, 0.0, f64::INFINITY);
            if e > 0.0 {
                hot.push(i);
            }
            acc += e;
            slopes.push(c);
            prefix.push(acc);
        }
        OverflowTable {
            t,
            i_lo,
            slopes,
            prefix,
            hot,
            h: dist.h(),
            a: dist.a(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    pub fn hot_cells(&self) -> &[i64] {
        &self.hot
    }

    fn point(&self, i: i64) -> f64 {
        self.a + i as f64 * self.h
    }

    fn index_floor(&self, x: f64) -> i64 {
        let t = (x - self.a) / self.h;
        let r = t.round();
        if (t - r).abs() <= 1e-9 * r.abs().max(1.0) {
            r as i64
        } else {
            t.floor() as i64
        }
    }

    fn slope(&self, i: i64) -> f64 {
        let k = i - self.i_lo;
        if k < 0 || k as usize >= self.slopes.len() {
            0.0
        } else {
            self.slopes[k as usize]
        }
    }

    pub fn covers(&self, x: f64) -> bool {
        let k = self.index_floor(x) - self.i_lo;
        k >= 0 && (k as usize) < self.slopes.len()
    }

    /// `I_η(x, T)` from the prefix sums.
    pub fn overflow(&self, x: f64, eta: f64) -> f64 {
        let lo = (1.0 - eta) * x;
        let i0 = self.index_floor(lo);
        let i1 = self.index_floor(x);
        let part = |i: i64, l: f64, u: f64| cell_excess(self.slope(i), self.t, l, u, x, f64::INFINITY);
        if i0 == i1 {
            return part(i0, lo, x);
        }
        let first = part(i0, lo, self.point(i0 + 1));
        let last = part(i1, self.point(i1), x);
        let k0 = ((i0 + 1 - self.i_lo).max(0) as usize).min(self.prefix.len() - 1);
        let k1 = ((i1 - self.i_lo).max(0) as usize).min(self.prefix.len() - 1);
        let middle = if k1 > k0 { self.prefix[k1] - self.prefix[k0] } else { 0.0 };
        first + middle.max(0.0) + last
    }

    /// `Î(x, T)` with weight scale `s`, summing only the hot cells; cells
    /// below `x − 40s` (weight under `e^{-40}`) are skipped.
    pub fn exp_window(&self, x: f64, eta: f64, s: f64) -> f64 {
        let lo = ((1.0 - eta) * x).max(x - 40.0 * s);
        let i0 = self.index_floor(lo);
        let i1 = self.index_floor(x);
        let start = self.hot.partition_point(|&i| i < i0);
        let mut acc = 0.0;
        for &i in &self.hot[start..] {
            if i > i1 {
                break;
            }
            let l = self.point(i).max(lo);
            let u = self.point(i + 1).min(x);
            acc += cell_excess(self.slope(i), self.t, l, u, x, s);
        }
        acc
    }

    /// `sup ω` over cells in the table.
    pub fn sup_omega(&self) -> f64 {
        self.slopes
            .iter()
            .enumerate()
            .map(|(k, c)| c * self.point(self.i_lo + k as i64 + 1))
            .fold(0.0, f64::max)
    }
}

/// Sorted disjoint union of intervals `(l, u)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
    #[serde(skip)]
    prefix: Vec<f64>,
}

impl IntervalSet {
    pub fn from_intervals(mut v: Vec<(f64, f64)>) -> Self {
        v.retain(|(l, u)| u > l);
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (l, u) in v {
            match merged.last_mut() {
                Some(last) if l <= last.1 => last.1 = last.1.max(u),
                _ => merged.push((l, u)),
            }
        }
        let mut prefix = Vec::with_capacity(merged.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for (l, u) in &merged {
            acc += u - l;
            prefix.push(acc);
        }
        IntervalSet {
            intervals: merged,
            prefix,
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let k = self.intervals.partition_point(|iv| iv.1 <= x);
        k < self.intervals.len() && self.intervals[k].0 < x
    }

    /// Lebesgue measure of the set below `x`.
    fn measure_below(&self, x: f64) -> f64 {
        let k = self.intervals.partition_point(|iv| iv.1 <= x);
        let mut m = self.prefix[k];
        if k < self.intervals.len() && self.intervals[k].0 < x {
            m += x - self.intervals[k].0;
        }
        m
    }

    /// `|E ∩ (l, u)|`.
    pub fn measure_in(&self, l: f64, u: f64) -> f64 {
        if u <= l {
            return 0.0;
        }
        self.measure_below(u) - self.measure_below(l)
    }
}

/// Result of the density-at-scale sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleDensity {
    pub holds: bool,
    pub constant: f64,
    pub worst_x: f64,
    pub worst_y: f64,
    pub worst_measure: f64,
    /// Per-`x` supremum of `|E ∩ (x, x+y)| / (x^{-c} y)` over `y`.
    pub trajectory: Vec<(f64, f64)>,
}

/// Sweep `|E ∩ (x, x + y)| / (x^{-c}·y)` over `x` in `[x_lo, x_hi]` and
/// `y = x^s·2^j`; the density bound holds when the per-`x` supremum stays
/// bounded across the scan.
pub fn density_at_scale(e: &IntervalSet, c: f64, s: f64, x_lo: f64, x_hi: f64, cfg: &TrendConfig) -> Result<ScaleDensity> {
    if !(c > 0.0 && c <= s) {
        return Err(Error::invalid("c", format!("need 0 < c <= s, got c = {c}, s = {s}")));
    }
    let mut out = ScaleDensity {
        holds: true,
        constant: 0.0,
        worst_x: f64::NAN,
        worst_y: f64::NAN,
        worst_measure: 0.0,
        trajectory: Vec::new(),
    };
    for x in geom_grid(x_lo, x_hi, 160) {
        let mut y = x.powf(s);
        let mut sup: f64 = 0.0;
        while x + y <= x_hi {
            let m = e.measure_in(x, x + y);
            let r = m / (x.powf(-c) * y);
            if r > sup {
                sup = r;
            }
            if r > out.constant {
                out.constant = r;
                out.worst_x = x;
                out.worst_y = y;
                out.worst_measure = m;
            }
            y *= 2.0;
        }
        if x + x.powf(s) <= x_hi {
            out.trajectory.push((x, sup));
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = out.trajectory.iter().cloned().unzip();
    if xs.len() >= 2 {
        out.holds = bounded(&xs, &ys, cfg).verdict != Verdict::Violated;
    }
    Ok(out)
}

/// `ω` on cell midpoints of `[x_lo, x_hi]` with the exceedance sets `E_T`.
#[derive(Debug, Clone, Serialize)]
pub struct OmegaScan {
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
    pub running_sup: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub exceedance: Vec<IntervalSet>,
    /// Set when the support ends inside the requested range.
    pub truncated: bool,
}

impl OmegaScan {
    pub fn new(dist: &LatticeDist, x_lo: f64, x_hi: f64, thresholds: &[f64]) -> Self {
        let i0 = dist.index_floor(x_lo.max(0.0));
        let i1 = dist.index_floor(x_hi);
        let mut scan = OmegaScan {
            x: Vec::new(),
            omega: Vec::new(),
            running_sup: Vec::new(),
            thresholds: thresholds.to_vec(),
            exceedance: Vec::new(),
            truncated: false,
        };
        let mut sets: Vec<Vec<(f64, f64)>> = vec![Vec::new(); thresholds.len()];
        let mut sup: f64 = 0.0;
        for i in i0..=i1 {
            let c = match cell_slope(dist, i) {
                Some(c) => c,
                None => {
                    scan.truncated = true;
                    break;
                }
            };
            let l = dist.point(i).max(0.0);
            let u = dist.point(i + 1);
            let mid = 0.5 * (l + u);
            if mid <= 0.0 {
                continue;
            }
            let w = c * mid;
            sup = sup.max(c * u);
            scan.x.push(mid);
            scan.omega.push(w);
            scan.running_sup.push(sup);
            for (k, &t) in thresholds.iter().enumerate() {
                if c > 0.0 {
                    let start = l.max(t / c);
                    if start < u {
                        sets[k].push((start, u));
                    }
                }
            }
        }
        scan.exceedance = sets.into_iter().map(IntervalSet::from_intervals).collect();
        scan
    }

    /// CSV with columns `x, omega, in_E_T` for the first threshold.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,omega,in_E_T\n");
        for (&x, &w) in self.x.iter().zip(&self.omega) {
            let inside = self
                .exceedance
                .first()
                .map(|e| e.contains(x))
                .unwrap_or(false);
            s.push_str(&format!("{},{},{}\n", crate::io::fmt17(x), crate::io::fmt17(w), inside as u8));
        }
        s
    }
}
