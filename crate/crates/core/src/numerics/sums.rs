//! Tail sums and tail integrals of slowly decaying functions.

use super::quad::{integrate, QuadOpts};

const DIRECT_TERMS: i64 = 64;

/// `∑_{m ≥ n0} f(m)` for a smooth, eventually monotone, integrable `f`.
///
/// The first 64 terms are summed directly; the remainder uses the
/// Euler–Maclaurin formula through the `B_4` term with finite-difference
/// derivatives.
pub fn tail_sum<F: Fn(f64) -> f64>(f: F, n0: i64) -> f64 {
    let mut direct = 0.0;
    for m in n0..n0 + DIRECT_TERMS {
        direct += f(m as f64);
    }
    let n = (n0 + DIRECT_TERMS) as f64;
    let integral = integrate_log_tail(&f, n, 1e-14);
    let diff = |d: f64| (f(n + d) - f(n - d)) / (2.0 * d);
    let d = 2e-3 * n;
    let d1 = (4.0 * diff(0.5 * d) - diff(d)) / 3.0;
    let third = |e: f64| (f(n + 2.0 * e) - 2.0 * f(n + e) + 2.0 * f(n - e) - f(n - 2.0 * e)) / (2.0 * e * e * e);
    let e = 0.05 * n;
    let d3 = (4.0 * third(0.5 * e) - third(e)) / 3.0;
    let remainder = integral + 0.5 * f(n) - d1 / 12.0 + d3 / 720.0;
    let mut sum = 0.0;
    // add small terms first
    sum += remainder;
    sum + direct
}

/// `∫_a^∞ f(x) dx` for `a > 0` and `f` decaying at least like a power.
///
/// Substitutes `x = a·e^v` and integrates over doubling panels in `v`
/// until the contribution of a panel is negligible.
pub fn integrate_log_tail<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> f64 {
    assert!(a > 0.0);
    let g = |v: f64| {
        let x = a * v.exp();
        let y = f(x) * x;
        if y.is_finite() {
            y
        } else {
            0.0
        }
    };
    let opts = QuadOpts::rel(rel_tol.max(1e-15));
    let mut total = 0.0;
    let mut lo: f64 = 0.0;
    let mut width: f64 = 0.5;
    let mut small_panels = 0;
    while lo < 700.0 {
        let hi = (lo + width).min(700.0);
        let r = integrate(g, lo, hi, opts);
        total += r.value;
        if r.value.abs() <= 1e-3 * rel_tol * total.abs() {
            small_panels += 1;
            if small_panels >= 2 {
                break;
            }
        } else {
            small_panels = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    total
}
