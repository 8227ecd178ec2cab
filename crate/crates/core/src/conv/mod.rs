//! Convolution powers `F*ⁿ` on a truncated lattice window.
//!
//! Index `j` of the `n`-th power sits at `n·a + j·h`. Powers are kept on a
//! fixed window `[lo, hi]` of indices; each step multiplies by the cached
//! spectrum of the base law restricted to the same window and discards what
//! falls outside. When the law has no mass below 0 and `lo = 0`, nothing
//! outside the window can re-enter it, so window values are exact; otherwise
//! they are lower bounds and `lost(n) = 1 − ∑ window` bounds the error.

mod checkpoint;
mod renewal;

pub use checkpoint::Checkpoint;
pub use renewal::{
    lower_bound_check, renewal_scan, small_n_limit_table, DEFAULT_DELTAS, DEFAULT_MARGIN, LowerBound, LowerBoundPoint, RenewalConfig, RenewalScan, SmallNTable,
};

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeDist;

/// Largest clamp total tolerated before a computation is aborted.
pub const LEDGER_BUDGET: f64 = 1e-9;

/// A range `[lo, hi]` of lattice indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(Error::invalid("window", format!("[{lo}, {hi}] must contain 0")));
        }
        Ok(Window { lo, hi })
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Window for scans up to `x_max`: `[0, x_max]` for laws without
    /// negative mass, `[−m·x_max, (1 + m)·x_max]` otherwise, in lattice units
    /// with a few cells of slack.
    pub fn covering(base: &LatticeDist, x_max: f64, margin: f64) -> Window {
        let h = base.h();
        let top = (x_max / h).ceil() as i64 + 3;
        if is_one_sided(base) {
            return Window { lo: 0, hi: top };
        }
        let extra = (margin * x_max / h).ceil() as i64;
        Window {
            lo: -extra.max(1),
            hi: top + extra,
        }
    }
}

/// True when `P(X < 0) = 0`.
pub fn is_one_sided(base: &LatticeDist) -> bool {
    base.left_beyond() == 0.0 && (base.j_min()..0).all(|j| base.mass(j) == 0.0)
}

/// Smallest `2^a·3^b ≥ n`.
fn fft_size(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p3 = 1usize;
    while p3 < best {
        let mut m = p3;
        while m < n {
            m *= 2;
        }
        best = best.min(m);
        p3 *= 3;
    }
    best
}

/// Transform length for which the window slice of a circular product equals
/// the linear one.
fn transform_size(w: Window) -> usize {
    let len = w.len();
    let shift = (-w.lo) as usize;
    fft_size((2 * len - 1 - shift).max(shift + len))
}

/// Largest `j` with `j ≤ t`, snapping `t` onto nearby integers.
fn snap_floor(t: f64) -> i64 {
    let r = t.round();
    if (t - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as i64
    } else {
        t.floor() as i64
    }
}

struct Fft {
    size: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    buf: Vec<f64>,
    spec: Vec<Complex64>,
    scratch_f: Vec<Complex64>,
    scratch_i: Vec<Complex64>,
}

impl Fft {
    fn new(size: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let r2c = planner.plan_fft_forward(size);
        let c2r = planner.plan_fft_inverse(size);
        let scratch_f = r2c.make_scratch_vec();
        let scratch_i = c2r.make_scratch_vec();
        Fft {
            size,
            buf: r2c.make_input_vec(),
            spec: r2c.make_output_vec(),
            r2c,
            c2r,
            scratch_f,
            scratch_i,
        }
    }

    /// Spectrum of `v` zero-padded to the transform size.
    fn forward(&mut self, v: &[f64]) -> Vec<Complex64> {
        self.buf.iter_mut().for_each(|b| *b = 0.0);
        self.buf[..v.len()].copy_from_slice(v);
        self.r2c
            .process_with_scratch(&mut self.buf, &mut self.spec, &mut self.scratch_f)
            .expect("forward transform");
        self.spec.clone()
    }

    /// Linear convolution of `v` with the signal whose spectrum is `other`,
    /// written into `self.buf`.
    fn convolve(&mut self, v: &[f64], other: &[Complex64]) {
        self.buf.iter_mut().for_each(|b| *b = 0.0);
        self.buf[..v.len()].copy_from_slice(v);
        self.r2c
            .process_with_scratch(&mut self.buf, &mut self.spec, &mut self.scratch_f)
            .expect("forward transform");
        let scale = 1.0 / self.size as f64;
        for (s, o) in self.spec.iter_mut().zip(other) {
            *s *= o * scale;
        }
        // the imaginary parts of the DC and Nyquist bins are zero in exact
        // arithmetic and must be zero for the inverse transform
        self.spec[0].im = 0.0;
        if self.size % 2 == 0 {
            let last = self.spec.len() - 1;
            self.spec[last].im = 0.0;
        }
        self.c2r
            .process_with_scratch(&mut self.spec, &mut self.buf, &mut self.scratch_i)
            .expect("inverse transform");
    }
}

/// Copy `buf[shift .. shift + out.len()]` into `out`, clamping negatives;
/// returns the clamped total.
fn extract(buf: &[f64], shift: usize, out: &mut [f64], exact_below: usize) -> f64 {
    let mut clamped = 0.0;
    for (k, o) in out.iter_mut().enumerate() {
        let v = buf[k + shift];
        if k < exact_below {
            *o = 0.0;
            clamped += v.abs();
        } else if v < 0.0 {
            clamped -= v;
            *o = 0.0;
        } else {
            *o = v;
        }
    }
    clamped
}

fn base_on(base: &LatticeDist, w: Window) -> Vec<f64> {
    (w.lo..=w.hi).map(|j| base.mass(j)).collect()
}

/// Sequential powers `F*⁰, F*¹, …` on a fixed window.
pub struct PowerEngine {
    h: f64,
    a: f64,
    window: Window,
    n: u64,
    current: Vec<f64>,
    base_spec: Vec<Complex64>,
    fft: Fft,
    ledger: f64,
    exact: bool,
    /// smallest index with base mass, used to pin exact zeros of one-sided powers
    base_min: i64,
}

impl PowerEngine {
    pub fn new(base: &LatticeDist, window: Window) -> Result<Self> {
        let window = Window::new(window.lo, window.hi)?;
        let w = window.len();
        let size = transform_size(window);
        let mut fft = Fft::new(size.max(2));
        let b = base_on(base, window);
        let base_spec = fft.forward(&b);
        let mut current = vec![0.0; w];
        current[(-window.lo) as usize] = 1.0;
        let exact = is_one_sided(base) && window.lo == 0;
        let base_min = (window.lo..=window.hi).find(|&j| base.mass(j) > 0.0).unwrap_or(0);
        Ok(PowerEngine {
            h: base.h(),
            a: base.a(),
            window,
            n: 0,
            current,
            base_spec,
            fft,
            ledger: 0.0,
            exact,
            base_min,
        })
    }

    /// Resume from a checkpoint taken on the same base law and window.
    pub fn resume(base: &LatticeDist, cp: &Checkpoint) -> Result<Self> {
        let mut e = PowerEngine::new(base, cp.window)?;
        if cp.masses.len() != e.current.len() || cp.h != e.h || cp.a != e.a {
            return Err(Error::Format("checkpoint does not match the base law and window".into()));
        }
        e.n = cp.n;
        e.ledger = cp.ledger;
        e.current = cp.masses.clone();
        Ok(e)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            n: self.n,
            window: self.window,
            h: self.h,
            a: self.a,
            ledger: self.ledger,
            masses: self.current.clone(),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn window(&self) -> Window {
        self.window
    }
    /// Masses of `F*ⁿ` on the window, index `lo` first.
    pub fn masses(&self) -> &[f64] {
        &self.current
    }
    /// Total negative FFT roundoff clamped so far.
    pub fn ledger(&self) -> f64 {
        self.ledger
    }
    /// Whether window values are exact rather than lower bounds.
    pub fn is_exact(&self) -> bool {
        self.exact
    }
    /// `1 − ∑ window`, an upper bound on the mass of `F*ⁿ` outside the window.
    pub fn lost(&self) -> f64 {
        (1.0 - self.current.iter().sum::<f64>()).max(0.0)
    }

    /// Advance to `F*ⁿ⁺¹`.
    pub fn step(&mut self) -> Result<()> {
        self.fft.convolve(&self.current, &self.base_spec);
        let shift = (-self.window.lo) as usize;
        let exact_below = if self.exact && self.base_min > 0 {
            (((self.n + 1) as i64 * self.base_min) as usize).min(self.current.len())
        } else {
            0
        };
        self.ledger += extract(&self.fft.buf, shift, &mut self.current, exact_below);
        self.n += 1;
        if self.ledger > LEDGER_BUDGET {
            return Err(Error::BudgetExceeded {
                what: "negative-mass ledger".into(),
                value: self.ledger,
                budget: LEDGER_BUDGET,
            });
        }
        Ok(())
    }

    fn index_range(&self, x: f64, len: f64) -> (i64, i64) {
        let off = self.n as f64 * self.a;
        let j0 = snap_floor((x - off) / self.h) + 1;
        let j1 = snap_floor((x + len - off) / self.h);
        (j0.max(self.window.lo), j1.min(self.window.hi))
    }

    /// `F*ⁿ(x, x + len]` restricted to the window.
    pub fn interval_mass(&self, x: f64, len: f64) -> f64 {
        let (j0, j1) = self.index_range(x, len);
        if j1 < j0 {
            return 0.0;
        }
        let s = (j0 - self.window.lo) as usize;
        let e = (j1 - self.window.lo) as usize;
        self.current[s..=e].iter().sum()
    }

    /// Whether `(x, x + len]` lies inside the window.
    pub fn covers(&self, x: f64, len: f64) -> bool {
        let off = self.n as f64 * self.a;
        let j0 = snap_floor((x - off) / self.h) + 1;
        let j1 = snap_floor((x + len - off) / self.h);
        j0 >= self.window.lo && j1 <= self.window.hi
    }

    /// `sup_{t ∈ [t_lo, t_hi]} F*ⁿ(t + I]`, `I = (0, h]`, over the window.
    pub fn sup_cell(&self, t_lo: f64, t_hi: f64) -> f64 {
        let (j0, _) = self.index_range(t_lo, self.h);
        let (_, j1) = self.index_range(t_hi, self.h);
        if j1 < j0 {
            return 0.0;
        }
        let s = (j0 - self.window.lo) as usize;
        let e = (j1 - self.window.lo) as usize;
        self.current[s..=e].iter().cloned().fold(0.0, f64::max)
    }
}

/// One computed power.
#[derive(Debug, Clone, Serialize)]
pub struct PowerResult {
    pub n: u64,
    pub window: Window,
    pub masses: Vec<f64>,
    /// Upper bound on the mass outside the window.
    pub lost: f64,
    pub ledger: f64,
    /// `lost` exceeds the declared budget.
    pub overflow: bool,
}

/// `F*ⁿ` on `window` by binary powering; `budget` flags large lost mass.
pub fn conv_power(base: &LatticeDist, n: u64, window: Window, budget: f64) -> Result<PowerResult> {
    let window = Window::new(window.lo, window.hi)?;
    let w = window.len();
    let shift = (-window.lo) as usize;
    let size = transform_size(window);
    let mut fft = Fft::new(size.max(2));
    let mut result = vec![0.0; w];
    result[shift] = 1.0;
    let mut square = base_on(base, window);
    let mut ledger = 0.0;
    let mut k = n;
    let mut out = vec![0.0; w];
    while k > 0 {
        if k & 1 == 1 {
            let sp = fft.forward(&square);
            fft.convolve(&result, &sp);
            ledger += extract(&fft.buf, shift, &mut out, 0);
            std::mem::swap(&mut result, &mut out);
        }
        k >>= 1;
        if k > 0 {
            let sp = fft.forward(&square);
            fft.convolve(&square, &sp);
            ledger += extract(&fft.buf, shift, &mut out, 0);
            std::mem::swap(&mut square, &mut out);
        }
    }
    if ledger > LEDGER_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "negative-mass ledger".into(),
            value: ledger,
            budget: LEDGER_BUDGET,
        });
    }
    let lost = (1.0 - result.iter().sum::<f64>()).max(0.0);
    Ok(PowerResult {
        n,
        window,
        masses: result,
        lost,
        ledger,
        overflow: lost > budget,
    })
}

/// `F*ⁿ` on `window` by repeated direct convolution, `O(n·W²)`.
pub fn naive_power(base: &LatticeDist, n: u64, window: Window) -> Vec<f64> {
    let w = window.len();
    let shift = (-window.lo) as usize;
    let b = base_on(base, window);
    let mut cur = vec![0.0; w];
    cur[shift] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0; w];
        for (i, &p) in cur.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            // index (lo + i) + (lo + k) lands at slot i + k + lo
            let k0 = (-window.lo - i as i64).max(0) as usize;
            let k1 = (w as i64 - window.lo - i as i64).clamp(0, w as i64) as usize;
            if k1 <= k0 {
                continue;
            }
            let s0 = (i + k0) as i64 + window.lo;
            let dst = &mut next[s0 as usize..s0 as usize + (k1 - k0)];
            for (d, &q) in dst.iter_mut().zip(&b[k0..k1]) {
                *d += p * q;
            }
        }
        cur = next;
    }
    cur
}
