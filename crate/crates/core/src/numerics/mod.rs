//! Numerical building blocks shared by every module.

pub mod quad;
pub mod roots;
pub mod sums;

pub use quad::{integrate, integrate_panels, integrate_to_inf, QuadOpts, QuadResult};
pub use roots::monotone_root;
pub use sums::{integrate_log_tail, tail_sum};

/// `z·e^z − expm1(z)` without cancellation for small `z`.
pub fn z_exp_minus_expm1(z: f64) -> f64 {
    if z.abs() < 0.1 {
        // sum_{k>=2} z^k (k-1)/k!
        let mut term = z * z / 2.0;
        let mut sum = term;
        for k in 3..30 {
            term *= z / k as f64;
            let add = term * (k - 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        z * z.exp() - z.exp_m1()
    }
}

/// Geometric grid of `n` points from `lo` to `hi` inclusive.
pub fn geom_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo * (r * i as f64).exp() })
        .collect()
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}
