//! Regularly varying functions of the form `C·x^α·∏_j (log^{(j)} x)^{e_j}`.
//!
//! Values below the domain floor `x₀` are clamped to the value at `x₀`, which
//! keeps every instance strictly positive and monotone on `(0, ∞)`.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, monotone_root, QuadOpts};

/// One factor `(log^{(order)} x)^{power}` of the slowly varying part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFactor {
    pub order: u32,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegVarFn {
    pub alpha: f64,
    pub scale: f64,
    #[serde(default)]
    pub log_factors: Vec<LogFactor>,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    1.0
}

/// `log^{(j)} x`, or `None` when an intermediate logarithm is not positive.
fn iter_log(x: f64, order: u32) -> Option<f64> {
    let mut v = x;
    for _ in 0..order {
        if v <= 0.0 {
            return None;
        }
        v = v.ln();
    }
    Some(v)
}

impl RegVarFn {
    /// Validated constructor; the exponent must lie in `[0, 2]`.
    pub fn new(alpha: f64, scale: f64, log_factors: Vec<LogFactor>, floor: f64) -> Result<Self> {
        let f = RegVarFn {
            alpha,
            scale,
            log_factors,
            floor,
        };
        f.validate()?;
        Ok(f)
    }

    /// `C·x^α` with floor 1.
    pub fn power(alpha: f64, scale: f64) -> Self {
        RegVarFn {
            alpha,
            scale,
            log_factors: Vec::new(),
            floor: 1.0,
        }
    }

    /// The constant function `c`.
    pub fn constant(c: f64) -> Self {
        RegVarFn::power(0.0, c)
    }

    pub fn with_log(mut self, order: u32, power: f64) -> Self {
        self.push_factor(order, power);
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    fn push_factor(&mut self, order: u32, power: f64) {
        if let Some(f) = self.log_factors.iter_mut().find(|f| f.order == order) {
            f.power += power;
        } else {
            self.log_factors.push(LogFactor { order, power });
            self.log_factors.sort_by_key(|f| f.order);
        }
        self.log_factors.retain(|f| f.power != 0.0);
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if !(0.0..=2.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha", format!("{} not in [0, 2]", self.alpha)));
        }
        if self.alpha > 0.0 && self.elasticity(self.floor) < 0.0 {
            return Err(Error::invalid(
                "floor",
                format!("function decreases at the floor {}; raise it", self.floor),
            ));
        }
        Ok(())
    }

    /// Checks shared by validated and derived instances.
    fn validate_shape(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", "not finite"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid("scale", format!("{} must be positive", self.scale)));
        }
        if !(self.floor >= 1.0 && self.floor.is_finite()) {
            return Err(Error::invalid("floor", format!("{} must be >= 1", self.floor)));
        }
        for (i, f) in self.log_factors.iter().enumerate() {
            if f.order == 0 {
                return Err(Error::invalid(format!("log_factors[{i}].order"), "must be >= 1"));
            }
            if !f.power.is_finite() {
                return Err(Error::invalid(format!("log_factors[{i}].power"), "not finite"));
            }
            match iter_log(self.floor, f.order) {
                Some(v) if v > 0.0 => {}
                _ => {
                    return Err(Error::invalid(
                        "floor",
                        format!("log^({}) is not positive at floor {}", f.order, self.floor),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Natural logarithm of the value at `x` (after clamping).
    pub fn ln_eval(&self, x: f64) -> f64 {
        let x = x.max(self.floor);
        let mut v = self.scale.ln() + self.alpha * x.ln();
        for f in &self.log_factors {
            let l = iter_log(x, f.order).unwrap_or(f64::MIN_POSITIVE);
            v += f.power * l.ln();
        }
        v
    }

    pub fn eval(&self, x: f64) -> f64 {
        let xc = x.max(self.floor);
        let mut v = self.scale * if self.alpha == 0.0 { 1.0 } else { xc.powf(self.alpha) };
        for f in &self.log_factors {
            let l = iter_log(xc, f.order).unwrap_or(f64::MIN_POSITIVE);
            v *= l.powf(f.power);
        }
        v
    }

    /// Checked evaluation that rejects non-finite or non-positive input.
    pub fn try_eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite { op: "eval", value: x });
        }
        if x <= 0.0 {
            return Err(Error::invalid("x", format!("{x} must be positive")));
        }
        Ok(self.eval(x))
    }

    /// Evaluation without the floor clamp; zero where an iterated logarithm
    /// is not positive.
    pub fn eval_unclamped(&self, x: f64) -> f64 {
        let mut v = self.scale * if self.alpha == 0.0 { 1.0 } else { x.powf(self.alpha) };
        for f in &self.log_factors {
            match iter_log(x, f.order) {
                Some(l) if l > 0.0 => v *= l.powf(f.power),
                _ => return 0.0,
            }
        }
        v
    }

    /// `x f'(x)/f(x)`; zero below the floor.
    pub fn elasticity(&self, x: f64) -> f64 {
        if x < self.floor {
            return 0.0;
        }
        let mut e = self.alpha;
        for f in &self.log_factors {
            let mut prod = 1.0;
            let mut v = x;
            for _ in 0..f.order {
                v = v.ln();
                prod *= v;
            }
            e += f.power / prod;
        }
        e
    }

    /// Derivative `f'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x) * self.elasticity(x) / x
    }

    /// `inf{t ≥ 1 : f(t) > y}` computed as the root of `f(t) = y`.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::NonFinite { op: "invert", value: y });
        }
        if self.alpha <= 0.0 {
            return Err(Error::NotInvertible(format!(
                "exponent {} is not positive",
                self.alpha
            )));
        }
        let f1 = self.eval(1.0);
        if y < f1 {
            return Ok(1.0);
        }
        let ln_y = y.ln();
        let lo = self.floor.ln();
        let mut hi = (2.0f64.max(y.powf(2.0 / self.alpha))).ln().max(lo + 1.0);
        while self.ln_eval(hi.exp()) < ln_y {
            hi = 2.0 * hi + 1.0;
            if hi > 700.0 {
                return Err(Error::NotInvertible(format!("no bracket for y = {y}")));
            }
        }
        let u = monotone_root(|u| self.ln_eval(u.exp()) - ln_y, lo, hi, 1e-13);
        Ok(u.exp())
    }

    /// Product `f·g`.
    pub fn mul(&self, other: &RegVarFn) -> RegVarFn {
        let mut out = RegVarFn {
            alpha: self.alpha + other.alpha,
            scale: self.scale * other.scale,
            log_factors: self.log_factors.clone(),
            floor: self.floor.max(other.floor),
        };
        for f in &other.log_factors {
            out.push_factor(f.order, f.power);
        }
        out
    }

    /// Power `f^p`.
    pub fn powf(&self, p: f64) -> RegVarFn {
        RegVarFn {
            alpha: self.alpha * p,
            scale: self.scale.powf(p),
            log_factors: self
                .log_factors
                .iter()
                .map(|f| LogFactor {
                    order: f.order,
                    power: f.power * p,
                })
                .collect(),
            floor: self.floor,
        }
    }

    /// Quotient `f/g`.
    pub fn div(&self, other: &RegVarFn) -> RegVarFn {
        self.mul(&other.powf(-1.0))
    }

    /// Rescale so that `f(x) = y`.
    pub fn matched_at(&self, x: f64, y: f64) -> RegVarFn {
        let mut out = self.clone();
        out.scale *= y / self.eval(x);
        out
    }

    /// Karamata integral `u(x) = ∫_1^x (f(s)/s)^2 ds`.
    pub fn karamata_u(&self, x: f64) -> f64 {
        if x <= 1.0 {
            return 0.0;
        }
        // s = e^v turns the integrand into f(e^v)^2 e^{-v}
        let top = x.ln();
        let g = |v: f64| {
            let f = self.eval(v.exp());
            f * f * (-v).exp()
        };
        let mut breaks = vec![0.0];
        let fl = self.floor.ln();
        if fl > 0.0 && fl < top {
            breaks.push(fl);
        }
        let mut v = breaks[breaks.len() - 1];
        while v + 1.0 < top {
            v += 1.0;
            breaks.push(v);
        }
        breaks.push(top);
        let opts = QuadOpts::rel(1e-11);
        breaks
            .windows(2)
            .map(|w| integrate(g, w[0], w[1], opts).value)
            .sum()
    }

    /// `k(x) = f(x)^2 / u(x)`.
    pub fn karamata_k(&self, x: f64) -> f64 {
        let f = self.eval(x);
        f * f / self.karamata_u(x)
    }

    /// Scan for Potter constants: returns `K` such that
    /// `(y/x)^{α-ε}/K ≤ f(y)/f(x) ≤ K (y/x)^{α+ε}` on a 200-point log grid of
    /// `x_start ≤ x ≤ y ≤ x_end`.
    pub fn potter_scan(&self, eps: f64, x_start: f64, x_end: f64) -> PotterScan {
        let n = 200;
        let grid = crate::numerics::geom_grid(x_start, x_end, n);
        let lf: Vec<f64> = grid.iter().map(|&x| self.ln_eval(x)).collect();
        let mut ln_k: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let lr = (grid[j] / grid[i]).ln();
                let d = lf[j] - lf[i];
                ln_k = ln_k.max(d - (self.alpha + eps) * lr);
                ln_k = ln_k.max((self.alpha - eps) * lr - d);
            }
        }
        PotterScan {
            eps,
            x_start,
            x_end,
            k: ln_k.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotterScan {
    pub eps: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub k: f64,
}

/// The norming sequence `a_n = f⁻(n)` with `a_0 = a_1 = 1`, memoized.
#[derive(Debug)]
pub struct NormingSeq {
    source: RegVarFn,
    memo: RwLock<HashMap<u64, f64>>,
}

impl Clone for NormingSeq {
    fn clone(&self) -> Self {
        NormingSeq {
            source: self.source.clone(),
            memo: RwLock::new(self.memo.read().expect("memo lock").clone()),
        }
    }
}

impl NormingSeq {
    pub fn new(source: RegVarFn) -> Result<Self> {
        if source.alpha <= 0.0 {
            return Err(Error::NotInvertible("norming sequence needs a positive exponent".into()));
        }
        Ok(NormingSeq {
            source,
            memo: RwLock::new(HashMap::new()),
        })
    }

    pub fn source(&self) -> &RegVarFn {
        &self.source
    }

    pub fn get(&self, n: u64) -> f64 {
        if n <= 1 {
            return 1.0;
        }
        if let Some(&v) = self.memo.read().expect("memo lock").get(&n) {
            return v;
        }
        let v = self
            .source
            .invert(n as f64)
            .expect("exponent checked positive at construction")
            .max(1.0);
        self.memo.write().expect("memo lock").insert(n, v);
        v
    }
}
