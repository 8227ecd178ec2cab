//! Fluctuation theory by simulation: ladder heights and epochs, the
//! Wiener–Hopf identities, ladder renewal measures and compound Poisson
//! sampling of infinitely divisible laws.
//!
//! Walks run on lattice indices (`i64`, saturating); every task is seeded
//! and split into fixed chunks so results do not depend on thread count.

use rand::Rng;
use rand_distr::{Distribution, Poisson, WeightedAliasIndex};
use serde::Serialize;

use crate::criteria::trend::{self, TrendConfig, TrendResult};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::lattice::LatticeDist;
use crate::numerics::{geom_grid, ls_slope};
use crate::regvar::RegVarFn;
use crate::rng::{chunked, stream, CHUNK};
use crate::stats::{wilson, MeanVar};

const JUMP_CAP: u64 = 1 << 60;

/// I.i.d. steps of a lattice law, returned as lattice indices `j` (the step
/// is `a + jh`). The window is drawn from an alias table and the tails by
/// inverting the parametric tail model.
#[derive(Debug, Clone)]
pub struct WalkSampler {
    base: LatticeDist,
    alias: Option<WeightedAliasIndex<f64>>,
    window: f64,
    right: f64,
    left: f64,
}

impl WalkSampler {
    pub fn new(base: &LatticeDist) -> Result<Self> {
        let window: f64 = base.masses().iter().sum();
        let alias = if window > 0.0 {
            Some(
                WeightedAliasIndex::new(base.masses().to_vec())
                    .map_err(|e| Error::invalid("base.masses", e.to_string()))?,
            )
        } else {
            None
        };
        let (right, left) = (base.right_beyond(), base.left_beyond());
        if !(window + right + left > 0.0) {
            return Err(Error::invalid("base", "law has no mass"));
        }
        Ok(WalkSampler {
            base: base.clone(),
            alias,
            window,
            right,
            left,
        })
    }

    pub fn base(&self) -> &LatticeDist {
        &self.base
    }

    /// One step as a lattice index.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u = rng.gen::<f64>() * (self.window + self.right + self.left);
        if u < self.window {
            if let Some(a) = &self.alias {
                return self.base.j_min() + a.sample(rng) as i64;
            }
        }
        let model = self.base.model();
        if u < self.window + self.right {
            let m0 = (self.base.j_max() + 1).max(1) as u64;
            model.sample_side(m0, false, rng).min(JUMP_CAP) as i64
        } else {
            let m0 = (1 - self.base.j_min()).max(1) as u64;
            -(model.sample_side(m0, true, rng).min(JUMP_CAP) as i64)
        }
    }

    /// One step as a position on the line.
    pub fn draw_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.base.point(self.draw(rng))
    }
}

fn require_centred_lattice(base: &LatticeDist) -> Result<()> {
    if base.a() != 0.0 {
        return Err(Error::Precondition(
            "ladder quantities need a lattice through the origin (a = 0)".into(),
        ));
    }
    Ok(())
}

/// Settings of a ladder simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderConfig {
    pub paths: u64,
    /// Ladder heights `m` wanted per path.
    pub heights: usize,
    /// Steps after which an unfinished path is censored.
    pub step_cap: u64,
    /// A path also finishes once its maximum exceeds this index.
    pub height_cap: Option<i64>,
    /// Renewal histograms cover indices `0..cells`; for laws with negative
    /// steps a path also runs until its minimum is at or below `−cells`.
    pub cells: usize,
    /// Per-path lists are kept for this many leading paths.
    pub keep_paths: usize,
    pub seed: u64,
}

impl LadderConfig {
    pub fn new(paths: u64, heights: usize, step_cap: u64, seed: u64) -> Self {
        LadderConfig {
            paths,
            heights,
            step_cap,
            height_cap: None,
            cells: 0,
            keep_paths: 0,
            seed,
        }
    }
}

/// Ladder record of one path, in lattice indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathLadder {
    /// Strict ascending ladder heights `H_1 < H_2 < ...`.
    pub ascending: Vec<i64>,
    /// Epochs of the ascending heights.
    pub epochs: Vec<u64>,
    /// Weak descending ladder heights `S ≤ previous minimum`, as values of `S`.
    pub descending: Vec<i64>,
    pub steps: u64,
    pub censored: bool,
}

#[derive(Default)]
struct LadderAcc {
    increments: Vec<i64>,
    v_plus: Vec<u64>,
    vm_sum: Vec<u64>,
    vm_sq: Vec<u64>,
    depth: Vec<i64>,
    completed: u64,
    censored: u64,
    shallow: u64,
    kept: Vec<PathLadder>,
}

/// Aggregated ladder statistics.
#[derive(Debug, Clone, Serialize)]
pub struct LadderSample {
    pub config: LadderConfig,
    pub h: f64,
    /// All strict ascending ladder increments of finished epochs, sorted.
    pub increments: Vec<i64>,
    /// `v_plus[y]`: paths with an ascending ladder height (including `H_0 = 0`) at `y`.
    pub v_plus: Vec<u64>,
    /// Sum over paths of weak descending ladder visits at depth `y`.
    pub v_minus_sum: Vec<u64>,
    v_minus_sq: Vec<u64>,
    /// Depth `−min S` reached by the first percent of paths.
    pub depth_q01: i64,
    pub completed: u64,
    pub censored: u64,
    pub censor_fraction: f64,
    /// Paths stopped by the step cap before covering the histogram range
    /// on both sides, so their renewal counts are truncated.
    pub truncated: u64,
    /// More than half of the paths were censored.
    pub unreliable: bool,
    pub kept: Vec<PathLadder>,
}

/// Simulate ladder heights of a walk with steps from `base`.
pub fn sample_ladder(base: &LatticeDist, cfg: &LadderConfig) -> Result<LadderSample> {
    require_centred_lattice(base)?;
    if !(base.p_plus() > 0.0) {
        return Err(Error::invalid("base", "p₊ must be positive"));
    }
    if cfg.paths == 0 || cfg.heights == 0 || cfg.step_cap == 0 {
        return Err(Error::invalid("ladder", "paths, heights and step_cap must be positive"));
    }
    let sampler = WalkSampler::new(base)?;
    let cells = cfg.cells;
    // weak descending visits at depth < cells all happen before the walk first drops below −cells + 1
    let need_depth = cells > 0 && base.tail_from_index(0) < 1.0;
    let parts = chunked(cfg.seed, cfg.paths, CHUNK, |rng, k, count| {
        let mut acc = LadderAcc {
            v_plus: vec![0; cells],
            vm_sum: vec![0; cells],
            vm_sq: vec![0; cells],
            ..Default::default()
        };
        let mut local: Vec<u64> = Vec::new();
        for i in 0..count {
            let keep = ((k * CHUNK + i) as usize) < cfg.keep_paths;
            let mut rec = PathLadder {
                ascending: Vec::new(),
                epochs: Vec::new(),
                descending: Vec::new(),
                steps: 0,
                censored: false,
            };
            local.clear();
            let bump = |y: i64, local: &mut Vec<u64>| {
                if (y as usize) < cells {
                    if local.len() <= y as usize {
                        local.resize(y as usize + 1, 0);
                    }
                    local[y as usize] += 1;
                }
            };
            bump(0, &mut local);
            if cells > 0 {
                acc.v_plus[0] += 1;
            }
            let (mut s, mut max, mut min) = (0i64, 0i64, 0i64);
            let mut asc = 0usize;
            let mut up_done = false;
            let mut done = false;
            let mut n = 0u64;
            while n < cfg.step_cap {
                n += 1;
                s = s.saturating_add(sampler.draw(rng));
                if s > max {
                    acc.increments.push(s - max);
                    max = s;
                    asc += 1;
                    if (max as u64) < cells as u64 {
                        acc.v_plus[max as usize] += 1;
                    }
                    if keep {
                        rec.ascending.push(s);
                        rec.epochs.push(n);
                    }
                    up_done |= asc >= cfg.heights || cfg.height_cap.is_some_and(|c| max > c);
                }
                if s <= min {
                    min = s;
                    bump(-s, &mut local);
                    if keep {
                        rec.descending.push(s);
                    }
                }
                if up_done && (!need_depth || -min >= cells as i64) {
                    done = true;
                    break;
                }
            }
            for (y, &c) in local.iter().enumerate() {
                acc.vm_sum[y] += c;
                acc.vm_sq[y] += c * c;
            }
            acc.depth.push(-min);
            if up_done {
                acc.completed += 1;
            } else {
                acc.censored += 1;
            }
            acc.shallow += !done as u64;
            if keep {
                rec.steps = n;
                rec.censored = !up_done;
                acc.kept.push(rec);
            }
        }
        acc
    });
    let mut all = LadderAcc {
        v_plus: vec![0; cells],
        vm_sum: vec![0; cells],
        vm_sq: vec![0; cells],
        ..Default::default()
    };
    for p in parts {
        all.increments.extend(p.increments);
        for y in 0..cells {
            all.v_plus[y] += p.v_plus[y];
            all.vm_sum[y] += p.vm_sum[y];
            all.vm_sq[y] += p.vm_sq[y];
        }
        all.depth.extend(p.depth);
        all.completed += p.completed;
        all.censored += p.censored;
        all.shallow += p.shallow;
        all.kept.extend(p.kept);
    }
    all.increments.sort_unstable();
    all.depth.sort_unstable();
    let depth_q01 = all.depth[(all.depth.len() - 1) / 100];
    let censor_fraction = all.censored as f64 / cfg.paths as f64;
    Ok(LadderSample {
        config: cfg.clone(),
        h: base.h(),
        increments: all.increments,
        v_plus: all.v_plus,
        v_minus_sum: all.vm_sum,
        v_minus_sq: all.vm_sq,
        depth_q01,
        completed: all.completed,
        censored: all.censored,
        censor_fraction,
        truncated: all.shallow,
        unreliable: censor_fraction > 0.5,
        kept: all.kept,
    })
}

impl LadderSample {
    fn paths(&self) -> u64 {
        self.config.paths
    }

    /// Number of increments `≥ j`.
    fn count_from(&self, j: i64) -> u64 {
        (self.increments.len() - self.increments.partition_point(|&v| v < j)) as u64
    }

    /// `F̂₊(x, ∞)` with its 3σ Wilson band, as `(estimate, lo, hi)`.
    pub fn f_plus_tail(&self, x: f64) -> (f64, f64, f64) {
        let j = (x / self.h).floor() as i64 + 1;
        let n = self.increments.len() as u64;
        let k = self.count_from(j);
        let (lo, hi) = wilson(k, n, 3.0);
        (k as f64 / n.max(1) as f64, lo, hi)
    }

    /// `F̂₊{j}`.
    pub fn f_plus_cell(&self, j: i64) -> f64 {
        let n = self.increments.len().max(1) as f64;
        (self.count_from(j) - self.count_from(j + 1)) as f64 / n
    }

    /// `V̂₊{j}` with its 3σ Wilson band.
    pub fn v_plus_cell(&self, j: i64) -> Option<(f64, f64, f64)> {
        let c = *self.v_plus.get(usize::try_from(j).ok()?)?;
        let (lo, hi) = wilson(c, self.paths(), 3.0);
        Some((c as f64 / self.paths() as f64, lo, hi))
    }

    /// `V̂₋{y}` and its standard error.
    pub fn v_minus_cell(&self, y: i64) -> Option<(f64, f64)> {
        let y = usize::try_from(y).ok()?;
        let s = *self.v_minus_sum.get(y)? as f64;
        let q = self.v_minus_sq[y] as f64;
        let n = self.paths() as f64;
        let mean = s / n;
        let var = (q / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        Some((mean, (var / n).sqrt()))
    }

    /// `V̂₋[0, y]`.
    pub fn v_minus_cum(&self, y: i64) -> f64 {
        let top = (y.max(-1) + 1).min(self.v_minus_sum.len() as i64) as usize;
        self.v_minus_sum[..top].iter().sum::<u64>() as f64 / self.paths() as f64
    }

    /// Pure power `ℓ₊(x) = C x^{αϱ}` matched to `1/F̂₊` at the 90th
    /// percentile of the observed heights.
    pub fn fit_ell_plus(&self, alpha_varrho: f64) -> Result<RegVarFn> {
        if self.increments.is_empty() {
            return Err(Error::Precondition("no ladder heights observed".into()));
        }
        let q = self.increments[(self.increments.len() * 9) / 10] as f64 * self.h;
        let (tail, _, _) = self.f_plus_tail(q);
        if !(tail > 0.0) {
            return Err(Error::Precondition("empty tail at the 90th percentile".into()));
        }
        Ok(RegVarFn::power(alpha_varrho, 1.0).matched_at(q, 1.0 / tail))
    }

    /// Tail exponent of `F̂₊` over the top `decades`, ending where the
    /// exceedances outnumber the censored paths twentyfold (censored epochs
    /// are the long ones and carry the largest heights).
    pub fn tail_index(&self, decades: f64, boot: usize, seed: u64) -> Result<TailFit> {
        let min_exceed = (20 * self.censored as usize).max(100);
        tail_index_fit(&self.increments, self.h, decades, min_exceed, boot, seed)
    }

    /// Histogram export: index, position, `F̂₊`, `V̂₊` with band, `V̂₋` with se.
    pub fn table(&self) -> Table {
        let mut t = Table::new(["j", "x", "f_plus", "v_plus", "v_plus_lo", "v_plus_hi", "v_minus", "v_minus_se"]);
        for j in 0..self.v_plus.len() as i64 {
            let (v, lo, hi) = self.v_plus_cell(j).unwrap_or((0.0, 0.0, 0.0));
            let (m, se) = self.v_minus_cell(j).unwrap_or((0.0, 0.0));
            t.push(vec![j as f64, j as f64 * self.h, self.f_plus_cell(j), v, lo, hi, m, se]);
        }
        t
    }
}

/// Tail exponent fitted to a sample.
#[derive(Debug, Clone, Serialize)]
pub struct TailFit {
    pub exponent: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub samples: usize,
}

/// Least-squares slope of the log survival function over the top
/// `decades` of a sorted sample, ending where `min_exceed` points remain;
/// the 95% interval is a multinomial bootstrap of the bin counts.
pub fn tail_index_fit(sorted: &[i64], h: f64, decades: f64, min_exceed: usize, boot: usize, seed: u64) -> Result<TailFit> {
    let n = sorted.len();
    if n < 10 * min_exceed || min_exceed == 0 {
        return Err(Error::Precondition(format!("{n} samples are too few for a tail fit")));
    }
    let x_hi = sorted[n - min_exceed] as f64 * h;
    let x_lo = x_hi / 10f64.powf(decades);
    if !(x_lo > 0.0) {
        return Err(Error::Precondition("tail range reaches zero".into()));
    }
    let grid = geom_grid(x_lo, x_hi, 13);
    let counts: Vec<u64> = grid
        .iter()
        .map(|&x| (n - sorted.partition_point(|&v| (v as f64 * h) < x)) as u64)
        .collect();
    let lx: Vec<f64> = grid.iter().map(|x| x.ln()).collect();
    let fit = |c: &[u64]| -> f64 {
        let ly: Vec<f64> = c.iter().map(|&k| (k.max(1) as f64 / n as f64).ln()).collect();
        -ls_slope(&lx, &ly)
    };
    let exponent = fit(&counts);
    // bins: below grid[0], [grid[i], grid[i+1]), and the top
    let mut bins = Vec::with_capacity(counts.len() + 1);
    bins.push(n as u64 - counts[0]);
    for w in counts.windows(2) {
        bins.push(w[0] - w[1]);
    }
    bins.push(*counts.last().unwrap());
    let mut rng = stream(seed, 0);
    let mut est: Vec<f64> = (0..boot)
        .map(|_| {
            let mut left = n as u64;
            let mut mass = 1.0;
            let mut draw = Vec::with_capacity(bins.len());
            for &b in &bins {
                let p = (b as f64 / n as f64 / mass).clamp(0.0, 1.0);
                let k = if left == 0 || p <= 0.0 {
                    0
                } else if p >= 1.0 {
                    left
                } else {
                    rand_distr::Binomial::new(left, p).map(|d| d.sample(&mut rng)).unwrap_or(0)
                };
                draw.push(k);
                left -= k;
                mass -= b as f64 / n as f64;
            }
            let mut c = vec![0u64; counts.len()];
            let mut acc = 0;
            for i in (0..counts.len()).rev() {
                acc += draw[i + 1];
                c[i] = acc;
            }
            fit(&c)
        })
        .collect();
    est.sort_by(f64::total_cmp);
    let (ci_lo, ci_hi) = if est.is_empty() {
        (exponent, exponent)
    } else {
        (est[est.len() * 25 / 1000], est[(est.len() * 975 / 1000).min(est.len() - 1)])
    };
    Ok(TailFit {
        exponent,
        ci_lo,
        ci_hi,
        x_lo,
        x_hi,
        samples: n,
    })
}

/// Row of a Wiener–Hopf check.
#[derive(Debug, Clone, Serialize)]
pub struct WienerHopfRow {
    pub t: f64,
    /// Lattice index of the cell `t + I` (ascending) or the point `−t` (descending).
    pub j: i64,
    /// Empirical ladder-height law at the cell.
    pub ladder_hat: f64,
    /// `∑_y F{..}·V̂{y}` with the occupation estimate of the dual renewal measure.
    pub predicted: f64,
    pub residual: f64,
    pub sigma: f64,
    pub z: f64,
    /// Same sum with the renewal measure accumulated along ladder epochs.
    pub predicted_ladder: f64,
    pub sigma_ladder: f64,
    pub z_ladder: f64,
    /// The ladder-accumulated measure does not cover the support of the sum.
    pub inconclusive: bool,
}

/// Both Wiener–Hopf identities on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct WienerHopf {
    /// `F₊(t + I] = ∑_{y ≥ 0} F(t − y + I]·V₋{−y}`.
    pub ascending: Vec<WienerHopfRow>,
    /// `F₋{−t} = ∑_{y ≥ 0} F{−t − y}·V₊{y}`.
    pub descending: Vec<WienerHopfRow>,
    pub paths: u64,
    pub step_cap: u64,
    /// Paths with `T₊` beyond the cap.
    pub censored_plus: u64,
    /// Paths with `T₋` beyond the cap.
    pub censored_minus: u64,
}

impl WienerHopf {
    /// Fraction of ascending and descending rows with `|z| ≤ 3`.
    pub fn within_3sigma(&self) -> (f64, f64) {
        let f = |r: &[WienerHopfRow]| r.iter().filter(|w| w.z.abs() <= 3.0).count() as f64 / r.len().max(1) as f64;
        (f(&self.ascending), f(&self.descending))
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "side", "t", "j", "ladder_hat", "predicted", "residual", "sigma", "z", "predicted_ladder", "sigma_ladder", "z_ladder",
            "inconclusive",
        ]);
        for (side, rows) in [(1.0, &self.ascending), (-1.0, &self.descending)] {
            for r in rows {
                t.push(vec![
                    side, r.t, r.j as f64, r.ladder_hat, r.predicted, r.residual, r.sigma, r.z, r.predicted_ladder, r.sigma_ladder,
                    r.z_ladder, r.inconclusive as u8 as f64,
                ]);
            }
        }
        t
    }
}

/// Check both Wiener–Hopf identities on `t_grid` (`t ≥ 0`).
///
/// Paths are regenerated from the ladder configuration (same seed, capped
/// at `step_cap`). For each path, `D₊(t) = 1{H₁ ∈ t + I} − ∑_{n < T₊} F(t − S_n + I]`
/// has mean zero even under censoring, because the pre-ladder occupation
/// is the dual renewal measure; the residual is its mean and `σ` its
/// standard error. The descending identity uses `T₋ = min{n ≥ 1: S_n ≤ 0}`.
/// The `*_ladder` columns use the renewal measures accumulated along the
/// ladder epochs of `ladder` instead.
pub fn wiener_hopf_residual(base: &LatticeDist, ladder: &LadderSample, t_grid: &[f64]) -> Result<WienerHopf> {
    require_centred_lattice(base)?;
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("t_grid", "points must be nonnegative"));
    }
    let sampler = WalkSampler::new(base)?;
    let h = base.h();
    let up: Vec<i64> = t_grid.iter().map(|&t| (t / h).floor() as i64 + 1).collect();
    let down: Vec<i64> = t_grid.iter().map(|&t| (t / h).round() as i64).collect();
    let g = t_grid.len();
    let cap = ladder.config.step_cap;
    struct Acc {
        up: Vec<MeanVar>,
        down: Vec<MeanVar>,
        hit_up: Vec<u64>,
        hit_down: Vec<u64>,
        cens_up: u64,
        cens_down: u64,
    }
    let parts = chunked(ladder.config.seed ^ 0x5748_5f52_4553_4944, ladder.config.paths, CHUNK, |rng, _, count| {
        let mut acc = Acc {
            up: vec![MeanVar::default(); g],
            down: vec![MeanVar::default(); g],
            hit_up: vec![0; g],
            hit_down: vec![0; g],
            cens_up: 0,
            cens_down: 0,
        };
        let mut occ_up = vec![0.0; g];
        let mut occ_down = vec![0.0; g];
        for _ in 0..count {
            occ_up.iter_mut().for_each(|v| *v = 0.0);
            occ_down.iter_mut().for_each(|v| *v = 0.0);
            let mut s = 0i64;
            let (mut h_up, mut h_down) = (None, None);
            let mut n = 0u64;
            // S_0 = 0 is in both occupations
            loop {
                if n == cap {
                    break;
                }
                if h_up.is_none() {
                    for (o, &j) in occ_up.iter_mut().zip(&up) {
                        *o += base.mass(j - s);
                    }
                }
                if h_down.is_none() {
                    for (o, &j) in occ_down.iter_mut().zip(&down) {
                        *o += base.mass(-j - s);
                    }
                }
                n += 1;
                s = s.saturating_add(sampler.draw(rng));
                if h_up.is_none() && s > 0 {
                    h_up = Some(s);
                }
                if h_down.is_none() && s <= 0 {
                    h_down = Some(s);
                }
                if h_up.is_some() && h_down.is_some() {
                    break;
                }
            }
            acc.cens_up += h_up.is_none() as u64;
            acc.cens_down += h_down.is_none() as u64;
            for i in 0..g {
                let a = (h_up == Some(up[i])) as u8 as f64;
                let d = (h_down == Some(-down[i])) as u8 as f64;
                acc.hit_up[i] += a as u64;
                acc.hit_down[i] += d as u64;
                acc.up[i].push(a - occ_up[i]);
                acc.down[i].push(d - occ_down[i]);
            }
        }
        acc
    });
    let mut up_mv = vec![MeanVar::default(); g];
    let mut down_mv = vec![MeanVar::default(); g];
    let mut hit_up = vec![0u64; g];
    let mut hit_down = vec![0u64; g];
    let (mut cens_up, mut cens_down) = (0, 0);
    for p in parts {
        for i in 0..g {
            up_mv[i].merge(&p.up[i]);
            down_mv[i].merge(&p.down[i]);
            hit_up[i] += p.hit_up[i];
            hit_down[i] += p.hit_down[i];
        }
        cens_up += p.cens_up;
        cens_down += p.cens_down;
    }
    let paths = ladder.config.paths as f64;
    let cells = ladder.v_minus_sum.len() as i64;
    let ladder_hits = ladder.increments.len().max(1) as f64;
    let row = |t: f64, j: i64, hits: u64, mv: &MeanVar, ascending: bool| -> WienerHopfRow {
        let ladder_hat = hits as f64 / paths;
        let residual = mv.mean;
        let predicted = ladder_hat - residual;
        // rare cells may show no hits; their Bernoulli variance is taken from the prediction
        let p = predicted.clamp(0.0, 1.0);
        let extra = (p * (1.0 - p) - ladder_hat * (1.0 - ladder_hat)).max(0.0);
        let sigma = ((mv.variance() + extra) / paths).sqrt();
        // ladder-accumulated dual measure
        let (mut pl, mut var) = (0.0, 0.0);
        let (lh, var_lh, tail_beyond) = if ascending {
            for y in 0..cells {
                let f = base.mass(j + y);
                if let Some((m, se)) = ladder.v_minus_cell(y) {
                    pl += f * m;
                    var += (f * se).powi(2);
                }
            }
            let reach = ladder.depth_q01.min(cells - 1) + 1;
            let lh = ladder.f_plus_cell(j);
            (lh, lh * (1.0 - lh) / ladder_hits, base.tail_from_index(j + reach))
        } else {
            for y in 0..cells {
                let f = base.mass(-j - y);
                if let Some((m, _, _)) = ladder.v_plus_cell(y) {
                    pl += f * m;
                    var += f * f * m * (1.0 - m) / paths;
                }
            }
            let beyond = 1.0 - base.tail_from_index(-j - cells + 1);
            (ladder_hat, ladder_hat * (1.0 - ladder_hat) / paths, beyond)
        };
        let sigma_ladder = (var + var_lh).sqrt();
        let z_ladder = if sigma_ladder > 0.0 {
            (lh - pl) / sigma_ladder
        } else if (lh - pl).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        WienerHopfRow {
            t,
            j: if ascending { j } else { -j },
            ladder_hat,
            predicted,
            residual,
            sigma,
            z: if sigma > 0.0 {
                residual / sigma
            } else if residual.abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            },
            predicted_ladder: pl,
            sigma_ladder,
            z_ladder,
            inconclusive: tail_beyond > 0.01 * pl.max(1e-300),
        }
    };
    let ascending = (0..g).map(|i| row(t_grid[i], up[i], hit_up[i], &up_mv[i], true)).collect();
    let descending = (0..g).map(|i| row(t_grid[i], down[i], hit_down[i], &down_mv[i], false)).collect();
    Ok(WienerHopf {
        ascending,
        descending,
        paths: ladder.config.paths,
        step_cap: cap,
        censored_plus: cens_up,
        censored_minus: cens_down,
    })
}

/// Row of the ladder renewal scan.
#[derive(Debug, Clone, Serialize)]
pub struct LadderSrtRow {
    pub x: f64,
    pub f_plus_tail: f64,
    pub v_plus: f64,
    pub product: f64,
    /// 3σ band of the product.
    pub lo: f64,
    pub hi: f64,
    /// `V̂₋[0, x]·ℓ₊(x)/ℓ(x)`.
    pub v_minus_bound: f64,
}

/// Ladder renewal scan against `h sin(παϱ)/π`.
#[derive(Debug, Clone, Serialize)]
pub struct LadderSrt {
    pub rows: Vec<LadderSrtRow>,
    pub target: f64,
    pub ell_plus: RegVarFn,
    /// `ℓ₊` was fitted rather than supplied.
    pub ell_plus_fitted: bool,
    pub v_minus_sup: f64,
    pub v_minus_trend: TrendResult,
    pub censor_fraction: f64,
}

/// `x F̂̄₊(x) V̂₊(x + I]` on `x_grid`, with the bounded-ness scan of
/// `V̂₋(x)ℓ₊(x)/ℓ(x)`. `ℓ₊` is fitted from the ladder sample when absent.
pub fn ladder_srt_check(
    base: &LatticeDist,
    ladder: &LadderSample,
    x_grid: &[f64],
    alpha_varrho: f64,
    ell_plus: Option<RegVarFn>,
) -> Result<LadderSrt> {
    if !(alpha_varrho > 0.0 && alpha_varrho <= 1.0) {
        return Err(Error::invalid("alpha_varrho", format!("{alpha_varrho} must be in (0, 1]")));
    }
    let h = base.h();
    let target = h * (std::f64::consts::PI * alpha_varrho).sin() / std::f64::consts::PI;
    let fitted = ell_plus.is_none();
    let ell_plus = match ell_plus {
        Some(l) => l,
        None => ladder.fit_ell_plus(alpha_varrho)?,
    };
    let mut rows = Vec::new();
    for &x in x_grid {
        let j = (x / h).floor() as i64 + 1;
        let Some((v, vlo, vhi)) = ladder.v_plus_cell(j) else {
            return Err(Error::invalid("x_grid", format!("{x} lies beyond the ladder histogram")));
        };
        let (f, flo, fhi) = ladder.f_plus_tail(x);
        let y = (x / h).floor() as i64;
        let vm = ladder.v_minus_cum(y);
        rows.push(LadderSrtRow {
            x,
            f_plus_tail: f,
            v_plus: v,
            product: x * f * v,
            lo: x * flo * vlo,
            hi: x * fhi * vhi,
            v_minus_bound: vm * ell_plus.eval(x) / base.ell().eval(x),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let vb: Vec<f64> = rows.iter().map(|r| r.v_minus_bound).collect();
    let v_minus_trend = trend::bounded(&xs, &vb, &TrendConfig::default());
    Ok(LadderSrt {
        v_minus_sup: vb.iter().cloned().fold(0.0, f64::max),
        rows,
        target,
        ell_plus,
        ell_plus_fitted: fitted,
        v_minus_trend,
        censor_fraction: ladder.censor_fraction,
    })
}

/// Time spent positive against the epoch of the first maximum.
#[derive(Debug, Clone, Serialize)]
pub struct DualityCheck {
    pub steps: u64,
    pub paths: u64,
    /// Mean of `#{1 ≤ n ≤ N: S_n > 0}/N`.
    pub positive_fraction: f64,
    /// Mean of (last strict ascending ladder epoch `≤ N`)`/N`.
    pub ladder_fraction: f64,
    pub difference: f64,
    pub sigma: f64,
    pub z: f64,
}

/// Compare the two sides of the equivalence principle: the number of
/// positive partial sums among `S_1..S_N` and the epoch of the first
/// maximum of `S_0..S_N` have the same law.
pub fn duality_check(base: &LatticeDist, paths: u64, steps: u64, seed: u64) -> Result<DualityCheck> {
    require_centred_lattice(base)?;
    if paths < 2 || steps == 0 {
        return Err(Error::invalid("duality", "need at least two paths and one step"));
    }
    let sampler = WalkSampler::new(base)?;
    let parts = chunked(seed, paths, CHUNK, |rng, _, count| {
        let (mut a, mut b, mut d) = (MeanVar::default(), MeanVar::default(), MeanVar::default());
        for _ in 0..count {
            let (mut s, mut max) = (0i64, 0i64);
            let (mut pos, mut last) = (0u64, 0u64);
            for n in 1..=steps {
                s = s.saturating_add(sampler.draw(rng));
                if s > 0 {
                    pos += 1;
                }
                if s > max {
                    max = s;
                    last = n;
                }
            }
            let (p, l) = (pos as f64 / steps as f64, last as f64 / steps as f64);
            a.push(p);
            b.push(l);
            d.push(p - l);
        }
        (a, b, d)
    });
    let (mut a, mut b, mut d) = (MeanVar::default(), MeanVar::default(), MeanVar::default());
    for (x, y, z) in &parts {
        a.merge(x);
        b.merge(y);
        d.merge(z);
    }
    let sigma = d.se();
    Ok(DualityCheck {
        steps,
        paths,
        positive_fraction: a.mean,
        ladder_fraction: b.mean,
        difference: d.mean,
        sigma,
        z: if sigma > 0.0 { d.mean / sigma } else { 0.0 },
    })
}

/// Monte Carlo estimate of `P(S_n > 0)`.
#[derive(Debug, Clone, Serialize)]
pub struct Positivity {
    pub n: u64,
    pub samples: u64,
    pub estimate: f64,
    pub se: f64,
    pub lo: f64,
    pub hi: f64,
}

/// `P(S_n > 0)` from `samples` independent walks.
pub fn positivity_mc(base: &LatticeDist, n: u64, samples: u64, seed: u64) -> Result<Positivity> {
    if samples == 0 || n == 0 {
        return Err(Error::invalid("positivity", "n and samples must be positive"));
    }
    let sampler = WalkSampler::new(base)?;
    let (a, h) = (base.a(), base.h());
    let hits: u64 = chunked(seed, samples, CHUNK, |rng, _, count| {
        (0..count)
            .filter(|_| {
                let s = (0..n).fold(0i64, |s, _| s.saturating_add(sampler.draw(rng)));
                n as f64 * a + s as f64 * h > 0.0
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    let p = hits as f64 / samples as f64;
    let (lo, hi) = wilson(hits, samples, 3.0);
    Ok(Positivity {
        n,
        samples,
        estimate: p,
        se: (p * (1.0 - p) / samples as f64).sqrt(),
        lo,
        hi,
    })
}

/// Sampler for `S_n` of an infinitely divisible lattice law: a
/// `Poisson(nμ)` compound of `F_ν` plus `n` small jumps.
#[derive(Debug, Clone)]
pub struct InfDivSampler {
    nu: WalkSampler,
    mu: f64,
    small: Option<WalkSampler>,
    h: f64,
    /// Largest negative small jump, in lattice units.
    small_left: i64,
}

/// Build the compound Poisson sampler. `nu` is the normalised Lévy mass
/// beyond the small-jump range, `mu` its total mass, `small` a bounded
/// lattice law standing in for the small-jump part.
pub fn compound_poisson_build(nu: &LatticeDist, mu: f64, small: Option<&LatticeDist>) -> Result<InfDivSampler> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid("mu", format!("{mu} must be positive")));
    }
    require_centred_lattice(nu)?;
    let mut small_left = 0;
    let small = match small {
        Some(w) => {
            require_centred_lattice(w)?;
            if w.h() != nu.h() {
                return Err(Error::invalid("small_jump.h", "span must match the Lévy mass"));
            }
            if w.right_beyond() + w.left_beyond() > 0.0 {
                return Err(Error::invalid("small_jump", "small-jump law must have bounded support"));
            }
            small_left = (-w.j_min()).max(0);
            Some(WalkSampler::new(w)?)
        }
        None => None,
    };
    Ok(InfDivSampler {
        nu: WalkSampler::new(nu)?,
        mu,
        small,
        h: nu.h(),
        small_left,
    })
}

/// Simulated renewal scan of an infinitely divisible law.
#[derive(Debug, Clone, Serialize)]
pub struct InfDivRenewal {
    pub x: Vec<f64>,
    /// Mean renewal mass per lattice cell over `[x, x + width)`.
    pub u_hat: Vec<f64>,
    pub se: Vec<f64>,
    /// `x·μF̄_ν(x)·Û`.
    pub x_fbar_u: Vec<f64>,
    pub paths: u64,
    pub censored: u64,
}

impl InfDivSampler {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `S_n` as a lattice index.
    pub fn sample<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> i64 {
        let k = if n == 0 {
            0
        } else {
            Poisson::new(n as f64 * self.mu).map(|p| p.sample(rng) as u64).unwrap_or(0)
        };
        let mut s = (0..k).fold(0i64, |s, _| s.saturating_add(self.nu.draw(rng)));
        if let Some(w) = &self.small {
            s = (0..n).fold(s, |s, _| s.saturating_add(w.draw(rng)));
        }
        s
    }

    /// Renewal estimate on coarse cells `[x_i, x_i + width)` from walks with
    /// steps distributed as `S_1`.
    pub fn renewal_estimate(&self, x_grid: &[f64], width: f64, paths: u64, step_cap: u64, seed: u64) -> Result<InfDivRenewal> {
        let cw = (width / self.h).round() as i64;
        if cw < 1 || x_grid.is_empty() || paths < 2 {
            return Err(Error::invalid("renewal", "need width ≥ h, a grid and two paths"));
        }
        let mut starts: Vec<i64> = x_grid.iter().map(|&x| (x / self.h).ceil() as i64).collect();
        starts.sort_unstable();
        if starts.windows(2).any(|w| w[1] < w[0] + cw) {
            return Err(Error::invalid("x_grid", "cells overlap"));
        }
        let top = starts.last().unwrap() + cw;
        let stop = if self.small_left == 0 { top } else { 2 * top + 64 * self.small_left };
        let g = starts.len();
        let parts = chunked(seed, paths, CHUNK, |rng, _, count| {
            let mut mv = vec![MeanVar::default(); g];
            let mut local = vec![0u32; g];
            let mut cens = 0u64;
            for _ in 0..count {
                local.iter_mut().for_each(|c| *c = 0);
                let mut s = 0i64;
                let mut n = 0;
                while s < stop && n < step_cap {
                    s = s.saturating_add(self.sample(1, rng));
                    n += 1;
                    let i = starts.partition_point(|&a| a <= s);
                    if i > 0 && s < starts[i - 1] + cw {
                        local[i - 1] += 1;
                    }
                }
                cens += (s < stop) as u64;
                for (m, &c) in mv.iter_mut().zip(&local) {
                    m.push(c as f64 / cw as f64);
                }
            }
            (mv, cens)
        });
        let mut mv = vec![MeanVar::default(); g];
        let mut censored = 0;
        for (p, c) in &parts {
            for i in 0..g {
                mv[i].merge(&p[i]);
            }
            censored += c;
        }
        let x: Vec<f64> = starts.iter().map(|&j| j as f64 * self.h).collect();
        let u_hat: Vec<f64> = mv.iter().map(|m| m.mean).collect();
        let x_fbar_u = x
            .iter()
            .zip(&u_hat)
            .map(|(&x, &u)| x * self.mu * self.nu.base().tail(x) * u)
            .collect();
        Ok(InfDivRenewal {
            x,
            u_hat,
            se: mv.iter().map(|m| m.se()).collect(),
            x_fbar_u,
            paths,
            censored,
        })
    }
}
