//! Renewal-measure accumulation and small-`n` sums.

use serde::Serialize;

use super::{PowerEngine, Window};
use crate::error::{Error, Result};
use crate::io::{fmt17, Table};
use crate::lattice::LatticeDist;
use crate::numerics::tail_sum;
use crate::regvar::NormingSeq;
use crate::stable::StableLimit;

/// Window margin, in units of the largest abscissa, for two-sided laws.
pub const DEFAULT_MARGIN: f64 = 2.0;

pub const DEFAULT_DELTAS: [f64; 5] = [0.4, 0.2, 0.1, 0.05, 0.025];

#[derive(Debug, Clone)]
pub struct RenewalConfig {
    pub x_grid: Vec<f64>,
    /// Last power included; defaults to the smallest `n` with `a_n ≥ 4·max x`.
    pub n_max: Option<u64>,
    pub deltas: Vec<f64>,
    pub window: Option<Window>,
    /// Stop once the window holds less than this mass.
    pub stop_mass: Option<f64>,
    /// Estimate `∑_{n > N} h·p(x/a_n)/a_n` from the stable limit.
    pub remainder: bool,
    /// Lost-mass budget per power.
    pub budget: f64,
}

impl RenewalConfig {
    pub fn new(x_grid: Vec<f64>) -> Self {
        RenewalConfig {
            x_grid,
            n_max: None,
            deltas: DEFAULT_DELTAS.to_vec(),
            window: None,
            stop_mass: None,
            remainder: false,
            budget: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RenewalScan {
    pub x: Vec<f64>,
    /// `U_N(x + I] = ∑_{n ≤ N} F*ⁿ(x + I]`.
    pub u_n: Vec<f64>,
    /// `x·F̄(x)·U_N(x + I]`.
    pub x_fbar_u: Vec<f64>,
    /// Stable-limit estimate of the omitted `n > N`, NaN when unavailable.
    pub remainder: Vec<f64>,
    pub deltas: Vec<f64>,
    /// `g[d][i] = ∑_{n < ℓ(δ_d x_i)} F*ⁿ(x_i + I]`.
    pub g: Vec<Vec<f64>>,
    pub n_used: u64,
    pub window: Window,
    /// Window values are exact rather than lower bounds.
    pub exact: bool,
    pub max_lost: f64,
    pub ledger: f64,
    /// Lost mass exceeded the budget on a truncated window.
    pub overflow: bool,
}

impl RenewalScan {
    pub fn table(&self) -> Table {
        let mut cols = vec![
            "x".to_string(),
            "U_N".into(),
            "xFbarU".into(),
            "remainder_estimate".into(),
        ];
        cols.extend(self.deltas.iter().map(|d| format!("G_delta_{d}")));
        let mut t = Table::new(cols);
        for i in 0..self.x.len() {
            let mut row = vec![self.x[i], self.u_n[i], self.x_fbar_u[i], self.remainder[i]];
            row.extend(self.g.iter().map(|g| g[i]));
            t.push(row);
        }
        t
    }
}

fn check_grid(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("x_grid", "empty"));
    }
    let mut hi: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::invalid(format!("x_grid[{i}]"), format!("{x} must be finite and >= 0")));
        }
        hi = hi.max(x);
    }
    Ok(hi)
}

/// `∑_n F*ⁿ(x + I]` over `n ≤ N` and over `n < ℓ(δx)` for each `δ`.
pub fn renewal_scan(base: &LatticeDist, cfg: &RenewalConfig) -> Result<RenewalScan> {
    let x_max = check_grid(&cfg.x_grid)?;
    for (i, &d) in cfg.deltas.iter().enumerate() {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::invalid(format!("deltas[{i}]"), "must be positive"));
        }
    }
    let ell = base.ell();
    let n_max = match cfg.n_max {
        Some(n) => n,
        None => ell.eval(4.0 * x_max).ceil() as u64,
    };
    let window = cfg.window.unwrap_or_else(|| Window::covering(base, x_max, DEFAULT_MARGIN));
    let h = base.h();
    let nx = cfg.x_grid.len();
    let cut: Vec<Vec<f64>> = cfg
        .deltas
        .iter()
        .map(|&d| cfg.x_grid.iter().map(|&x| ell.eval(d * x)).collect())
        .collect();
    let mut u = vec![0.0; nx];
    let mut g = vec![vec![0.0; nx]; cfg.deltas.len()];
    let mut engine = PowerEngine::new(base, window)?;
    let mut max_lost: f64 = 0.0;
    loop {
        let n = engine.n();
        let nf = n as f64;
        for (i, &x) in cfg.x_grid.iter().enumerate() {
            let m = engine.interval_mass(x, h);
            u[i] += m;
            for (d, gd) in g.iter_mut().enumerate() {
                if nf < cut[d][i] {
                    gd[i] += m;
                }
            }
        }
        max_lost = max_lost.max(engine.lost());
        if n >= n_max {
            break;
        }
        if let Some(s) = cfg.stop_mass {
            if n > 0 && engine.masses().iter().sum::<f64>() < s {
                break;
            }
        }
        engine.step()?;
    }
    let n_used = engine.n();
    let remainder = if cfg.remainder && base.alpha() < 1.0 {
        let lim = StableLimit::new(base.alpha(), base.rho().unwrap_or(0.0))?;
        let norm = NormingSeq::new(ell.clone())?;
        cfg.x_grid
            .iter()
            .map(|&x| llt_remainder(&lim, &norm, x, h, n_used))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![f64::NAN; nx]
    };
    let x_fbar_u = cfg
        .x_grid
        .iter()
        .zip(&u)
        .map(|(&x, &v)| x * base.tail(x) * v)
        .collect();
    let exact = engine.is_exact();
    Ok(RenewalScan {
        x: cfg.x_grid.clone(),
        u_n: u,
        x_fbar_u,
        remainder,
        deltas: cfg.deltas.clone(),
        g,
        n_used,
        window,
        exact,
        max_lost,
        ledger: engine.ledger(),
        overflow: !exact && max_lost > cfg.budget,
    })
}

/// `∑_{n > N} h·p(x/a_n)/a_n` with `a_n = ℓ⁻(n)` at real `n`.
fn llt_remainder(lim: &StableLimit, norm: &NormingSeq, x: f64, h: f64, n: u64) -> Result<f64> {
    let ell = norm.source();
    lim.density(x)?;
    Ok(tail_sum(
        |t| {
            let a = ell.invert(t).unwrap_or(f64::NAN);
            h * lim.density(x / a).unwrap_or(f64::NAN) / a
        },
        n as i64 + 1,
    ))
}

/// `x·F̄(x)·∑_{n < ℓ(δx)} F*ⁿ(x + I]` over a `(δ, x)` grid.
#[derive(Debug, Clone, Serialize)]
pub struct SmallNTable {
    pub deltas: Vec<f64>,
    pub x: Vec<f64>,
    /// `values[d][i]`
    pub values: Vec<Vec<f64>>,
    /// Per `δ`, the maximum over the largest decade of `x`.
    pub top_decade_max: Vec<f64>,
    pub exact: bool,
    pub max_lost: f64,
    pub ledger: f64,
}

impl SmallNTable {
    pub fn table(&self) -> Table {
        let mut cols = vec!["x".to_string()];
        cols.extend(self.deltas.iter().map(|d| format!("delta_{d}")));
        let mut t = Table::new(cols);
        for i in 0..self.x.len() {
            let mut row = vec![self.x[i]];
            row.extend(self.values.iter().map(|v| v[i]));
            t.push(row);
        }
        t
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("delta,top_decade_max\n");
        for (d, m) in self.deltas.iter().zip(&self.top_decade_max) {
            s.push_str(&format!("{},{}\n", fmt17(*d), fmt17(*m)));
        }
        s
    }
}

pub fn small_n_limit_table(base: &LatticeDist, deltas: &[f64], xs: &[f64], window: Option<Window>) -> Result<SmallNTable> {
    let x_max = check_grid(xs)?;
    let d_max = deltas.iter().cloned().fold(0.0, f64::max);
    let n_max = base.ell().eval(d_max * x_max).ceil() as u64;
    let mut cfg = RenewalConfig::new(xs.to_vec());
    cfg.deltas = deltas.to_vec();
    cfg.n_max = Some(n_max);
    cfg.window = window;
    let scan = renewal_scan(base, &cfg)?;
    let values: Vec<Vec<f64>> = scan
        .g
        .iter()
        .map(|g| xs.iter().zip(g).map(|(&x, &v)| x * base.tail(x) * v).collect())
        .collect();
    let top_decade_max = values
        .iter()
        .map(|v| {
            xs.iter()
                .zip(v)
                .filter(|(&x, _)| x >= x_max / 10.0)
                .map(|(_, &y)| y)
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(SmallNTable {
        deltas: deltas.to_vec(),
        x: xs.to_vec(),
        values,
        top_decade_max,
        exact: scan.exact,
        max_lost: scan.max_lost,
        ledger: scan.ledger,
    })
}

/// Stable density tabulated on a compact interval, linearly interpolated.
struct DensityGrid {
    t0: f64,
    dt: f64,
    vals: Vec<f64>,
}

impl DensityGrid {
    fn new(lim: &StableLimit, t0: f64, t1: f64, n: usize) -> Result<Self> {
        let dt = (t1 - t0) / n as f64;
        let vals = (0..=n).map(|k| lim.density(t0 + dt * k as f64)).collect::<Result<Vec<_>>>()?;
        Ok(DensityGrid { t0, dt, vals })
    }

    fn eval(&self, t: f64) -> f64 {
        let u = ((t - self.t0) / self.dt).clamp(0.0, (self.vals.len() - 1) as f64);
        let k = (u.floor() as usize).min(self.vals.len() - 2);
        let w = u - k as f64;
        self.vals[k] * (1.0 - w) + self.vals[k + 1] * w
    }

    fn min(&self) -> f64 {
        self.vals.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `∫_{t0}^{t1} p(t)·ω(x − a·t) dt`, cell by cell in `y = x − a·t`.
fn omega_against_density(dist: &LatticeDist, p: &DensityGrid, t0: f64, t1: f64, x: f64, a: f64) -> f64 {
    const GL: [f64; 2] = [-0.577_350_269_189_625_7, 0.577_350_269_189_625_7];
    let y_lo = x - a * t1;
    let y_hi = x - a * t0;
    let i0 = dist.index_floor(y_lo);
    let i1 = dist.index_floor(y_hi);
    let mut acc = 0.0;
    for i in i0..=i1 {
        let l = dist.point(i).max(y_lo);
        let u = dist.point(i + 1).min(y_hi);
        if u <= l || u <= 0.0 {
            continue;
        }
        let m = dist.mass(i + 1);
        if m == 0.0 {
            continue;
        }
        let tail = dist.tail_from_index(i + 1);
        if tail <= 0.0 {
            continue;
        }
        let c = m / tail;
        let l = l.max(0.0);
        let half = 0.5 * (u - l);
        let mid = 0.5 * (u + l);
        let mut s = 0.0;
        for g in GL {
            let y = mid + half * g;
            s += p.eval((x - y) / a) * c * y;
        }
        acc += s * half / a;
    }
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundPoint {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Number of summands `n < ℓ(δx)`.
    pub n_cut: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBound {
    pub e: (f64, f64),
    pub delta: f64,
    pub n0: u64,
    pub inf_density: f64,
    pub points: Vec<LowerBoundPoint>,
    pub exact: bool,
    pub ledger: f64,
}

/// Compare `(x/ℓ(x))·∑_{n<ℓ(δx)} F*ⁿ(x + (0, 2h]]` with
/// `(1/(4ℓ(x)²))·∑_{n₀≤n<ℓ(δx)} n·∫_E p(t)·ω(x − a_n t) dt`.
pub fn lower_bound_check(
    base: &LatticeDist,
    lim: &StableLimit,
    e: (f64, f64),
    delta: f64,
    n0: u64,
    xs: &[f64],
    window: Option<Window>,
) -> Result<LowerBound> {
    let x_max = check_grid(xs)?;
    if !(e.0 < e.1 && e.0.is_finite() && e.1.is_finite()) {
        return Err(Error::invalid("E", format!("[{}, {}] is not a compact interval", e.0, e.1)));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("{delta} not in (0, 1)")));
    }
    let p = DensityGrid::new(lim, e.0, e.1, 4096)?;
    let inf_density = p.min();
    if !(inf_density > 0.0) {
        return Err(Error::Precondition(format!("density vanishes on [{}, {}]", e.0, e.1)));
    }
    let ell = base.ell();
    let norm = NormingSeq::new(ell.clone())?;
    let h = base.h();
    let cuts: Vec<f64> = xs.iter().map(|&x| ell.eval(delta * x)).collect();
    let n_max = cuts.iter().cloned().fold(0.0, f64::max).ceil() as u64;
    let window = window.unwrap_or_else(|| Window::covering(base, x_max, DEFAULT_MARGIN));
    let mut engine = PowerEngine::new(base, window)?;
    let mut sums = vec![0.0; xs.len()];
    loop {
        let n = engine.n();
        for (i, &x) in xs.iter().enumerate() {
            if (n as f64) < cuts[i] {
                sums[i] += engine.interval_mass(x, 2.0 * h);
            }
        }
        if n + 1 >= n_max {
            break;
        }
        engine.step()?;
    }
    let mut points = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let lx = ell.eval(x);
        let lhs = x / lx * sums[i];
        let mut r = 0.0;
        let mut n = n0.max(1);
        while (n as f64) < cuts[i] {
            let a = norm.get(n);
            r += n as f64 * omega_against_density(base, &p, e.0, e.1, x, a);
            n += 1;
        }
        let rhs = r / (4.0 * lx * lx);
        points.push(LowerBoundPoint {
            x,
            lhs,
            rhs,
            holds: lhs >= rhs,
            n_cut: cuts[i].ceil().max(0.0) as u64,
        });
    }
    Ok(LowerBound {
        e,
        delta,
        n0,
        inf_density,
        points,
        exact: engine.is_exact(),
        ledger: engine.ledger(),
    })
}
