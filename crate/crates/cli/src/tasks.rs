//! One function per task: decode parameters, run, write artifacts.

use serde::{Deserialize, Serialize};

use renewal_core::conv::{renewal_scan, small_n_limit_table, RenewalConfig, Window, DEFAULT_MARGIN};
use renewal_core::criteria::{evaluate, CriterionInputs};
use renewal_core::deviation::{event_partition, event_probe, kappa, lld_bound_check};
use renewal_core::fluctuation::{compound_poisson_build, ladder_srt_check, sample_ladder, wiener_hopf_residual, LadderConfig};
use renewal_core::io::Table;
use renewal_core::{LatticeDist, RegVarFn};

use crate::fail::{Fail, WithPath};
use crate::job::{decode, DistSpec, Grid, JobSpec};
use crate::output::Artifacts;

/// Bytes per window point held by the convolution engine (mass vector,
/// cached spectrum and transform scratch).
const BYTES_PER_CELL: f64 = 48.0;
const DEFAULT_BUDGET: f64 = 1e-9;

pub struct Context<'a> {
    pub job: &'a JobSpec,
    pub dist: LatticeDist,
    pub seed: Option<u64>,
    pub budget_mb: Option<f64>,
}

impl Context<'_> {
    fn seed(&self) -> Result<u64, Fail> {
        self.seed.ok_or_else(|| Fail::invalid("seed", "required for stochastic tasks (spec field or --seed)"))
    }

    fn budget(&self) -> Result<f64, Fail> {
        match self.job.budget {
            Some(b) if !(b > 0.0) => Err(Fail::invalid("budget", "must be positive")),
            Some(b) => Ok(b),
            None => Ok(DEFAULT_BUDGET),
        }
    }

    fn window(&self, explicit: Option<Window>, margin: Option<f64>, x_max: f64) -> Result<Window, Fail> {
        let w = match explicit {
            Some(w) => Window::new(w.lo, w.hi).at("params")?,
            None => {
                let m = margin.unwrap_or(DEFAULT_MARGIN);
                if !(m >= 0.0 && m.is_finite()) {
                    return Err(Fail::invalid("params.margin", "must be finite and >= 0"));
                }
                Window::covering(&self.dist, x_max, m)
            }
        };
        if let Some(mb) = self.budget_mb {
            let need = w.len() as f64 * BYTES_PER_CELL / 1048576.0;
            if need > mb {
                return Err(Fail::budget("budget_mb", &format!("window of {} cells needs about {need:.1} MB > {mb} MB", w.len())));
            }
        }
        Ok(w)
    }
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanParams {
    x_grid: Grid,
    #[serde(default)]
    n_max: Option<u64>,
    #[serde(default)]
    deltas: Option<Vec<f64>>,
    #[serde(default)]
    window: Option<Window>,
    #[serde(default)]
    margin: Option<f64>,
    #[serde(default)]
    stop_mass: Option<f64>,
    #[serde(default)]
    remainder: bool,
}

#[derive(Serialize)]
struct ScanSummary {
    n_used: u64,
    window: Window,
    exact: bool,
    max_lost: f64,
    ledger: f64,
    overflow: bool,
}

pub fn renewal(ctx: &Context, out: &mut Artifacts) -> Result<(), Fail> {
    let p: ScanParams = decode(&ctx.job.params, "params")?;
    let xs = p.x_grid.values("params.x_grid")?;
    let mut cfg = RenewalConfig::new(xs.clone());
    cfg.n_max = p.n_max;
    if let Some(d) = p.deltas {
        cfg.deltas = d;
    }
    cfg.window = Some(ctx.window(p.window, p.margin, max_of(&xs))?);
    cfg.stop_mass = p.stop_mass;
    cfg.remainder = p.remainder;
    cfg.budget = ctx.budget()?;
    let s = renewal_scan(&ctx.dist, &cfg).at("params")?;
    if s.overflow {
        return Err(Fail::budget("budget", &format!("lost mass {:e} exceeds the budget", s.max_lost)));
    }
    out.csv("renewal.csv", &s.table())?;
    out.json(
        "summary.json",
        &ScanSummary {
            n_used: s.n_used,
            window: s.window,
            exact: s.exact,
            max_lost: s.max_lost,
            ledger: s.ledger,
            overflow: s.overflow,
        },
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableParams {
    x_grid: Grid,
    deltas: Vec<f64>,
    #[serde(default)]
    window: Option<Window>,
    #[serde(default)]
    margin: Option<f64>,
}

#[derive(Serialize)]
struct TableSummary {
    deltas: Vec<f64>,
    top_decade_max: Vec<f64>,
    exact: bool,
    max_lost: f64,
    ledger: f64,
}

pub fn small_n(ctx: &Context, out: &mut Artifacts) -> Result<(), Fail> {
    let p: TableParams = decode(&ctx.job.params, "params")?;
    let xs = p.x_grid.values("params.x_grid")?;
    let w = ctx.window(p.window, p.margin, max_of(&xs))?;
    let t = small_n_limit_table(&ctx.dist, &p.deltas, &xs, Some(w)).at("params")?;
    if t.ledger > ctx.budget()? {
        return Err(Fail::budget("budget", &format!("clamp ledger {:e} exceeds the budget", t.ledger)));
    }
    out.csv("small_n.csv", &t.table())?;
    out.json(
        "summary.json",
        &TableSummary {
            deltas: t.deltas.clone(),
            top_decade_max: t.top_decade_max.clone(),
            exact: t.exact,
            max_lost: t.max_lost,
            ledger: t.ledger,
        },
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Majorant {
    m: RegVarFn,
    beta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Density {
    c: f64,
    s: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CriteriaParams {
    x_lo: f64,
    x_hi: f64,
    #[serde(default)]
    points_per_decade: Option<f64>,
    #[serde(default)]
    ell: Option<RegVarFn>,
    #[serde(default)]
    cutoff: Option<RegVarFn>,
    #[serde(default)]
    t: Option<f64>,
    #[serde(default)]
    eta: Option<f64>,
    #[serde(default)]
    theta: Option<f64>,
    #[serde(default)]
    majorant: Option<Majorant>,
    #[serde(default)]
    density: Option<Density>,
}

pub fn criteria(ctx: &Context, out: &mut Artifacts) -> Result<(), Fail> {
    let p: CriteriaParams = decode(&ctx.job.params, "params")?;
    if !(p.x_lo > 0.0 && p.x_hi > p.x_lo && p.x_hi.is_finite()) {
        return Err(Fail::invalid("params.x_hi", "need 0 < x_lo < x_hi < inf"));
    }
    let mut inp = CriterionInputs::new(&ctx.dist, p.x_lo, p.x_hi);
    if let Some(ppd) = p.points_per_decade {
        if !(ppd >= 1.0 && ppd <= 1e4) {
            return Err(Fail::invalid("params.points_per_decade", "must lie in [1, 1e4]"));
        }
        let pts = ((p.x_hi / p.x_lo).log10() * ppd).ceil().max(2.0) as usize;
        inp.x_grid = renewal_core::numerics::geom_grid(p.x_lo, p.x_hi, pts);
    }
    if let Some(ell) = p.ell {
        ell.validate().at("params.ell")?;
        inp.ell = ell;
    }
    if let Some(c) = p.cutoff {
        c.validate().at("params.cutoff")?;
        inp.cutoff = c;
    }
    if let Some(t) = p.t {
        inp.t = t;
    }
    if let Some(eta) = p.eta {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Fail::invalid("params.eta", &format!("{eta} not in (0, 1)")));
        }
        inp.eta = eta;
    }
    if let Some(theta) = p.theta {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Fail::invalid("params.theta", &format!("{theta} not in (0, 1)")));
        }
        inp.theta = theta;
    }
    inp.majorant = p.majorant.map(|m| (m.m, m.beta));
    inp.density = p.density.map(|d| (d.c, d.s));
    let r = evaluate(&inp).at("params")?;
    out.json("criteria.json", &r)?;
    out.text("criteria.txt", &r.render())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LldParams {
    ns: Vec<u64>,
    s_mult: Vec<f64>,
    x_mult: Vec<f64>,
}

pub fn lld(ctx: &Context, out: &mut Artifacts) -> Result<(), Fail> {
    let p: LldParams = decode(&ctx.job.params, "params")?;
    let c = lld_bound_check(&ctx.dist, &p.ns, &p.s_mult, &p.x_mult).at("params")?;
    if c.ledger > ctx.budget()? {
        return Err(Fail::budget("budget", &format!("clamp ledger {:e} exceeds the budget", c.ledger)));
    }
    out.csv("lld.csv", &c.table())?;
    #[derive(Serialize)]
    struct Summary<'a> {
        c: f64,
        sup_ratio: f64,
        sup_by_n: &'a [(u64, f64)],
        trend: &'a renewal_core::criteria::TrendResult,
        ledger: f64,
    }
    out.json(
        "summary.json",
        &Summary {
            c: c.c,
            sup_ratio: c.sup_ratio,
            sup_by_n: &c.sup_by_n,
            trend: &c.trend,
            ledger: c.ledger,
        },
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LadderParams {
    paths: u64,
    #[serde(default = "one_height")]
    heights: usize,
    step_cap: u64,
    #[serde(default)]
    cells: usize,
    #[serde(default)]
    height_cap: Option<i64>,
    #[serde(default)]
    t_grid: Option<Grid>,
    #[serde(default)]
    x_grid: Option<Grid>,
    #[serde(default)]
    alpha_varrho: Option<f64>,
    #[serde(default)]
    ell_plus: Option<RegVarFn>,
}

fn one_height() -> usize {
    1
}

pub fn ladder(ctx: &Context, out: &mut Artifacts) -> Result<(), Fail> {
    let p: LadderParams = decode(&ctx.job.params, "params")?;
    let mut cfg = LadderConfig::new(p.paths, p.heights, p.step_cap, ctx.seed()?);
    cfg.cells = p.cells;
    cfg.height_cap = p.height_cap;
    let l = sample_ladder(&ctx.dist, &cfg).at("params")?;
    out.csv("ladder.csv", &l.table())?;
    if let Some(g) = &p.t_grid {
        let t = g.values("params.t_grid")?;
        let wh = wiener_hopf_residual(&ctx.dist, &l, &t).at("params.t_grid")?;
        out.csv("wiener_hopf.csv", &wh.table())?;
    }
    if let Some(g) = &p.x_grid {
        let xs = g.values("params.x_grid")?;
        let av = p
            .alpha_varrho
            .ok_or_else(|| Fail::invalid("params.alpha_varrho", "required with x_grid"))?;
        let r = ladder_srt_check(&ctx.dist, &l, &xs, av, p.ell_plus.clone()).at("params")?;
        let mut t = Table::new(["x", "f_plus_tail", "v_plus", "product", "lo", "hi", "v_minus_bound"]);
        for w in &r.rows {
            t.push(vec![w.x, w.f_plus_tail, w.v_plus, w.product, w.lo, w.hi, w.v_minus_bound]);
        }
        out.csv("ladder_srt.csv", &t)?;
        out.json("ladder_srt.json", &r)?;
    }
    #[derive(Serialize)]
    struct Summary {
        paths: u64,
        completed: u64,
        censored: u64,
        censor_fraction: f64,
        truncated: u64,
        unreliable: bool,
    }
    out.json(
        "summary.json",
        &Summary {
            paths: p.paths,
            completed: l.completed,
            censored: l.censored,
            censor_fraction: l.censor_fraction,
            truncated: l.truncated,
            unreliable: l.unreliable,
        },
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InfDivParams {
    mu: f64,
    #[serde(default)]
    small_jump: Option<DistSpec>,
    x_grid: Grid,
    width: f64,
    paths: u64,
    step_cap: u64,
}

pub fn infdiv(ctx: &Context, out: &mut Artifacts) -> Result<(), Fail> {
    let p: InfDivParams = decode(&ctx.job.params, "params")?;
    let small = match &p.small_jump {
        Some(s) => Some(s.build("params.small_jump")?),
        None => None,
    };
    let sampler = compound_poisson_build(&ctx.dist, p.mu, small.as_ref()).at("params")?;
    let xs = p.x_grid.values("params.x_grid")?;
    let r = sampler
        .renewal_estimate(&xs, p.width, p.paths, p.step_cap, ctx.seed()?)
        .at("params")?;
    let mut t = Table::new(["x", "u_hat", "se", "xFbarU"]);
    for i in 0..r.x.len() {
        t.push(vec![r.x[i], r.u_hat[i], r.se[i], r.x_fbar_u[i]]);
    }
    out.csv("infdiv.csv", &t)?;
    #[derive(Serialize)]
    struct Summary {
        mu: f64,
        paths: u64,
        censored: u64,
    }
    out.json(
        "summary.json",
        &Summary {
            mu: p.mu,
            paths: r.paths,
            censored: r.censored,
        },
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeParams {
    n: u64,
    x: f64,
    gamma: f64,
    samples: u64,
    #[serde(default = "default_eps")]
    eps: f64,
}

fn default_eps() -> f64 {
    0.1
}

pub fn probe(ctx: &Context, out: &mut Artifacts) -> Result<(), Fail> {
    let p: ProbeParams = decode(&ctx.job.params, "params")?;
    let seed = ctx.seed()?;
    let part = event_partition(&ctx.dist, p.n, p.x, p.gamma, p.samples, seed).at("params")?;
    let top = (kappa(ctx.dist.alpha()) as u64 + 1).min(p.n);
    let probes = (0..=top)
        .map(|k| event_probe(&ctx.dist, p.n, k, p.x, p.eps, p.gamma, p.samples, seed).at("params"))
        .collect::<Result<Vec<_>, _>>()?;
    #[derive(Serialize)]
    struct Report<'a> {
        partition: &'a renewal_core::deviation::EventPartition,
        probes: &'a [renewal_core::deviation::EventProbe],
    }
    out.json(
        "probe.json",
        &Report {
            partition: &part,
            probes: &probes,
        },
    )
}
