//! Finite-range verdicts for `o(1)` and `O(1)` statements.
//!
//! A trajectory is reduced to an envelope of per-bin maxima (a fixed number
//! of bins per decade) so that isolated spikes and empty cells do not drive
//! medians and slopes.

use serde::{Deserialize, Serialize};

use crate::numerics::ls_slope;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendConfig {
    /// `o(1)` needs the last-decade max below first-decade max / this.
    pub decay_factor: f64,
    /// `o(1)` needs the top-two-decade log-log slope at most this.
    pub max_slope: f64,
    /// `O(1)` needs the last-decade max at most this times the median.
    pub bounded_factor: f64,
    /// `u(x)/u(ℓ⁻(L(x)))` below this counts as tending to 1.
    pub u_ratio: f64,
    pub bins_per_decade: usize,
    /// Minimum span in decades for a verdict.
    pub min_decades: f64,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig {
            decay_factor: 4.0,
            max_slope: -0.05,
            bounded_factor: 1.5,
            u_ratio: 1.02,
            bins_per_decade: 4,
            min_decades: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SatisfiedOnRange,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendResult {
    pub verdict: Verdict,
    pub decades: f64,
    pub first_decade_max: f64,
    pub last_decade_max: f64,
    pub median: f64,
    pub slope: f64,
    /// Bin centers and maxima.
    pub envelope: Vec<(f64, f64)>,
}

fn envelope(xs: &[f64], ys: &[f64], per_decade: usize) -> Vec<(f64, f64)> {
    let x0 = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut bins: Vec<(f64, f64, bool)> = Vec::new();
    let width = 1.0 / per_decade as f64;
    for (&x, &y) in xs.iter().zip(ys) {
        let k = ((x / x0).log10() / width).floor() as usize;
        if bins.len() <= k {
            bins.resize(k + 1, (0.0, 0.0, false));
        }
        let b = &mut bins[k];
        b.1 = if b.2 { b.1.max(y) } else { y };
        b.2 = true;
        b.0 = x0 * 10f64.powf((k as f64 + 0.5) * width);
    }
    bins.into_iter().filter(|b| b.2).map(|b| (b.0, b.1)).collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn summarize(xs: &[f64], ys: &[f64], cfg: &TrendConfig) -> TrendResult {
    let x0 = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x1 = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let decades = (x1 / x0).log10();
    let env = envelope(xs, ys, cfg.bins_per_decade);
    let mut first = 0.0f64;
    let mut last = 0.0f64;
    for (&x, &y) in xs.iter().zip(ys) {
        if x <= x0 * 10.0 {
            first = first.max(y);
        }
        if x >= x1 / 10.0 {
            last = last.max(y);
        }
    }
    let mut m: Vec<f64> = env.iter().map(|e| e.1).collect();
    let med = median(&mut m);
    let top: Vec<(f64, f64)> = env
        .iter()
        .filter(|e| e.0 >= x1 / 100.0 && e.1 > 0.0)
        .cloned()
        .collect();
    let slope = if top.len() >= 2 {
        let lx: Vec<f64> = top.iter().map(|e| e.0.ln()).collect();
        let ly: Vec<f64> = top.iter().map(|e| e.1.ln()).collect();
        ls_slope(&lx, &ly)
    } else if top.is_empty() {
        f64::NEG_INFINITY
    } else {
        f64::NAN
    };
    TrendResult {
        verdict: Verdict::Inconclusive,
        decades,
        first_decade_max: first,
        last_decade_max: last,
        median: med,
        slope,
        envelope: env,
    }
}

/// Verdict for `y(x) → 0`.
pub fn vanishing(xs: &[f64], ys: &[f64], cfg: &TrendConfig) -> TrendResult {
    let mut r = summarize(xs, ys, cfg);
    if ys.iter().all(|&y| y == 0.0) {
        r.verdict = Verdict::SatisfiedOnRange;
        return r;
    }
    if !(r.decades >= cfg.min_decades) {
        return r;
    }
    let decays = r.last_decade_max < r.first_decade_max / cfg.decay_factor;
    let slope_ok = r.slope <= cfg.max_slope;
    r.verdict = if decays && slope_ok {
        Verdict::SatisfiedOnRange
    } else {
        Verdict::Violated
    };
    r
}

/// Verdict for `y(x) = O(1)`.
pub fn bounded(xs: &[f64], ys: &[f64], cfg: &TrendConfig) -> TrendResult {
    let mut r = summarize(xs, ys, cfg);
    if ys.iter().all(|&y| y == 0.0) {
        r.verdict = Verdict::SatisfiedOnRange;
        return r;
    }
    if !(r.decades >= cfg.min_decades.min(1.0)) {
        return r;
    }
    r.verdict = if r.last_decade_max <= cfg.bounded_factor * r.median {
        Verdict::SatisfiedOnRange
    } else {
        Verdict::Violated
    };
    r
}
