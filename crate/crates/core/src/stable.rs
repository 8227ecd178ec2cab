//! Stable limits of heavy-tailed walks.
//!
//! The limit `ζ` of `S_n/a_n` is normalized by its Lévy tail: `x^{-α}` on the
//! right and `ρ·x^{-α}` on the left, with no drift. For `α < 1` this gives
//!
//! ```text
//! log E e^{itζ} = −Γ(1−α)|t|^α [(1+ρ)cos(πα/2) − i sgn(t)(1−ρ) sin(πα/2)]
//! ```
//!
//! and writing the bracket as `K e^{−iφ}` yields `φ = arctan(c tan(πα/2))`
//! with `c = (1−ρ)/(1+ρ)`, so `P(ζ > 0) = 1/2 + φ/(πα)`.
//!
//! The density at `x > 0` is `(1/π) Re ∫_0^∞ e^{−itx − λt^α} dt` with
//! `λ = Γ(1−α) K e^{−iφ}`; the integral is taken along the ray
//! `t = r e^{−iθ}` where both exponents decay, and replaced by its convergent
//! power series in `x^{−α}` for large `x`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, RwLock};

use num_complex::Complex64;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::numerics::{integrate, QuadOpts};

/// `P(ζ > 0)` for tail ratio `ρ`, clamped to `[0, 1]`.
pub fn positivity(alpha: f64, rho_tail: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 2]")));
    }
    if !(rho_tail >= 0.0) {
        return Err(Error::invalid("rho_tail", format!("{rho_tail} must be >= 0")));
    }
    let c = if rho_tail.is_infinite() {
        -1.0
    } else {
        (1.0 - rho_tail) / (1.0 + rho_tail)
    };
    if alpha == 1.0 {
        if c != 0.0 {
            return Err(Error::invalid("alpha", "alpha = 1 needs symmetric tails"));
        }
        return Ok(0.5);
    }
    let v = 0.5 + (c * (PI * alpha / 2.0).tan()).atan() / (PI * alpha);
    Ok(v.clamp(0.0, 1.0))
}

/// `h·sin(παϱ)/π`, the ladder-height renewal constant.
pub fn ladder_srt_constant(alpha: f64, varrho: f64, h: f64) -> Result<f64> {
    let ar = alpha * varrho;
    if !(ar > 0.0 && ar <= 0.5) {
        return Err(Error::invalid("alpha*varrho", format!("{ar} not in (0, 1/2]")));
    }
    Ok(h * (PI * ar).sin() / PI)
}

#[derive(Debug)]
pub struct StableLimit {
    alpha: f64,
    rho_tail: f64,
    c_skew: f64,
    varrho: f64,
    lambda: Complex64,
    cache: RwLock<HashMap<u64, f64>>,
    clamped: Mutex<f64>,
}

impl Clone for StableLimit {
    fn clone(&self) -> Self {
        StableLimit {
            alpha: self.alpha,
            rho_tail: self.rho_tail,
            c_skew: self.c_skew,
            varrho: self.varrho,
            lambda: self.lambda,
            cache: RwLock::new(self.cache.read().expect("cache lock").clone()),
            clamped: Mutex::new(*self.clamped.lock().expect("ledger lock")),
        }
    }
}

impl StableLimit {
    pub fn new(alpha: f64, rho_tail: f64) -> Result<Self> {
        let varrho = positivity(alpha, rho_tail)?;
        let c_skew = (1.0 - rho_tail) / (1.0 + rho_tail);
        let lambda = if alpha < 1.0 {
            let a = (1.0 + rho_tail) * (PI * alpha / 2.0).cos();
            let b = (1.0 - rho_tail) * (PI * alpha / 2.0).sin();
            gamma(1.0 - alpha) * Complex64::new(a, -b)
        } else {
            Complex64::new(f64::NAN, f64::NAN)
        };
        Ok(StableLimit {
            alpha,
            rho_tail,
            c_skew,
            varrho,
            lambda,
            cache: RwLock::new(HashMap::new()),
            clamped: Mutex::new(0.0),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn rho_tail(&self) -> f64 {
        self.rho_tail
    }
    pub fn c_skew(&self) -> f64 {
        self.c_skew
    }
    pub fn varrho(&self) -> f64 {
        self.varrho
    }
    /// `λ` in `log E e^{itζ} = −λ t^α` for `t > 0`.
    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }
    /// Total negative roundoff clamped away so far.
    pub fn clamp_ledger(&self) -> f64 {
        *self.clamped.lock().expect("ledger lock")
    }

    fn require_density(&self) -> Result<()> {
        if self.alpha >= 1.0 {
            return Err(Error::invalid("alpha", "densities are available for alpha < 1 only"));
        }
        Ok(())
    }

    fn one_sided(&self) -> bool {
        self.rho_tail == 0.0
    }

    /// Exponent `λ` of the mirrored law `−ζ`.
    fn lambda_for(&self, negative: bool) -> Complex64 {
        if negative {
            self.lambda.conj()
        } else {
            self.lambda
        }
    }

    /// Threshold above which the power series is used.
    fn series_threshold(&self, lam: Complex64) -> f64 {
        (4.0 * lam.norm()).powf(1.0 / self.alpha).max(1e-300)
    }

    /// Series coefficients `c_k`, `k ≥ 1`, with `p(x) = (1/π) Re ∑ c_k x^{−kα−1}`.
    fn series_terms(&self, lam: Complex64, x: f64, extra_power: f64, divide: impl Fn(usize) -> f64) -> f64 {
        let a = self.alpha;
        let neg = -lam;
        let ln_abs = neg.norm().ln();
        let arg = neg.arg();
        let lx = x.ln();
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..400usize {
            let kf = k as f64;
            let ln_mag = kf * ln_abs + ln_gamma(kf * a + 1.0) - ln_gamma(kf + 1.0) - (kf * a + extra_power) * lx;
            let phase = kf * arg - PI * (kf * a + 1.0) / 2.0;
            let term = Complex64::from_polar(ln_mag.exp(), phase) / divide(k);
            sum += term;
            if k > 2 && term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        sum.re / PI
    }

    /// Density at `x > 0` of the law with exponent `lam`, by contour quadrature.
    fn contour_density(&self, lam: Complex64, x: f64) -> f64 {
        let a = self.alpha;
        let phi = -lam.arg();
        let theta = 0.5 * (PI / 2.0).min((PI / 2.0 - phi) / a);
        let rot = Complex64::from_polar(1.0, -theta);
        let lam_rot = lam * Complex64::from_polar(1.0, -a * theta);
        let kappa = lam_rot.re;
        let lin = x * theta.sin();
        let r_scale = (1.0 / lin).min(kappa.powf(-1.0 / a));
        let r_min = 1e-14 * r_scale;
        let r_max = (46.0 / lin).min((46.0 / kappa).powf(1.0 / a));
        let ix = Complex64::new(0.0, x);
        let f = |v: f64| {
            let r = v.exp();
            let z = -ix * rot * r - lam_rot * r.powf(a);
            (rot * z.exp()).re * r
        };
        let v0 = r_min.ln();
        let v1 = r_max.ln();
        let n = ((v1 - v0) / 0.5).ceil().max(1.0) as usize;
        let opts = QuadOpts {
            abs_tol: 1e-17 * r_scale,
            rel_tol: 1e-12,
            max_subdivisions: 200,
        };
        let mut acc = rot.re * r_min;
        for k in 0..n {
            let lo = v0 + (v1 - v0) * k as f64 / n as f64;
            let hi = v0 + (v1 - v0) * (k + 1) as f64 / n as f64;
            acc += integrate(f, lo, hi, opts).value;
        }
        acc / PI
    }

    fn raw_density(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.density_at_zero();
        }
        let negative = x < 0.0;
        if negative && self.one_sided() {
            return 0.0;
        }
        let lam = self.lambda_for(negative);
        let ax = x.abs();
        if ax >= self.series_threshold(lam) {
            self.series_terms(lam, ax, 1.0, |_| 1.0)
        } else {
            self.contour_density(lam, ax)
        }
    }

    fn density_at_zero(&self) -> f64 {
        if self.one_sided() {
            return 0.0;
        }
        let v = gamma(1.0 + 1.0 / self.alpha) * self.lambda.powf(-1.0 / self.alpha);
        v.re / PI
    }

    /// Density `p(x)`, cached.
    pub fn density(&self, x: f64) -> Result<f64> {
        self.require_density()?;
        if !x.is_finite() {
            return Err(Error::NonFinite { op: "density", value: x });
        }
        let key = x.to_bits();
        if let Some(&v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let mut v = self.raw_density(x);
        if v < 0.0 {
            let mut ledger = self.clamped.lock().expect("ledger lock");
            *ledger += -v;
            v = 0.0;
        }
        self.cache.write().expect("cache lock").insert(key, v);
        Ok(v)
    }

    /// `∫_0^X y^{β} p(±y) dy` for `β > −1` by quadrature in `ln y`.
    fn moment_to(&self, negative: bool, beta: f64, big_x: f64) -> f64 {
        let eps = 1e-10 * big_x;
        let sign = if negative { -1.0 } else { 1.0 };
        let f = |v: f64| {
            let y = v.exp();
            y.powf(beta + 1.0) * self.density(sign * y).unwrap_or(0.0)
        };
        let v0 = eps.ln();
        let v1 = big_x.ln();
        let n = ((v1 - v0) / 0.5).ceil() as usize;
        let opts = QuadOpts::rel(1e-11).with_abs(1e-16);
        let mut acc = self.density_at_zero() * eps.powf(beta + 1.0) / (beta + 1.0);
        for k in 0..n {
            let lo = v0 + (v1 - v0) * k as f64 / n as f64;
            let hi = v0 + (v1 - v0) * (k + 1) as f64 / n as f64;
            acc += integrate(f, lo, hi, opts).value;
        }
        acc
    }

    /// `∫_X^∞ y^{−β} p(±y) dy` from the series, `X` above the threshold.
    fn series_tail(&self, negative: bool, beta: f64, big_x: f64) -> f64 {
        let lam = self.lambda_for(negative);
        let a = self.alpha;
        self.series_terms(lam, big_x, beta, |k| k as f64 * a + beta)
    }

    /// `P(ζ > x)` for `x ≥ 0`.
    pub fn tail_prob(&self, x: f64) -> Result<f64> {
        self.require_density()?;
        let lam = self.lambda;
        let xs = self.series_threshold(lam);
        if x >= xs {
            return Ok(self.series_tail(false, 0.0, x));
        }
        let total = self.moment_to(false, 0.0, xs) + self.series_tail(false, 0.0, xs);
        let below = if x > 0.0 { self.moment_to(false, 0.0, x) } else { 0.0 };
        Ok(total - below)
    }

    /// `∫ p`, which should equal 1.
    pub fn total_mass(&self) -> Result<f64> {
        self.require_density()?;
        let mut t = 0.0;
        for negative in [false, true] {
            if negative && self.one_sided() {
                continue;
            }
            let xs = self.series_threshold(self.lambda_for(negative));
            t += self.moment_to(negative, 0.0, xs) + self.series_tail(negative, 0.0, xs);
        }
        Ok(t)
    }

    /// `E[ζ^{−α}; ζ > 0] = ∫_0^∞ x^{−α} p(x) dx`.
    pub fn negative_moment(&self) -> Result<f64> {
        self.require_density()?;
        let xs = self.series_threshold(self.lambda);
        Ok(self.moment_to(false, -self.alpha, xs) + self.series_tail(false, self.alpha, xs))
    }

    /// `αh ∫_0^∞ x^{−α} p(x) dx`.
    pub fn srt_constant(&self, h: f64) -> Result<f64> {
        Ok(self.alpha * h * self.negative_moment()?)
    }
}
