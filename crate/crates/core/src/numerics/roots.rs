//! Bracketed root finding for monotone functions.

/// Find `t` in `[lo, hi]` with `g(t) = 0` for a nondecreasing `g` with
/// `g(lo) <= 0 <= g(hi)`. Uses Illinois-modified regula falsi with a
/// bisection step whenever the secant stalls. Stops when `|g| <= tol` or the
/// bracket collapses to adjacent floats.
pub fn monotone_root<G: FnMut(f64) -> f64>(mut g: G, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut glo = g(lo);
    let mut ghi = g(hi);
    if glo >= 0.0 {
        return lo;
    }
    if ghi <= 0.0 {
        return hi;
    }
    let mut side = 0i8;
    for iter in 0..400 {
        let width = hi - lo;
        let mut t = if iter % 3 == 2 {
            0.5 * (lo + hi)
        } else {
            hi - ghi * width / (ghi - glo)
        };
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        if t <= lo || t >= hi {
            break;
        }
        let gt = g(t);
        if gt.abs() <= tol {
            return t;
        }
        if gt < 0.0 {
            lo = t;
            glo = gt;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            ghi = gt;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    if -glo < ghi {
        lo
    } else {
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let t = monotone_root(|x| x * x * x - 10.0, 0.0, 10.0, 1e-13);
        assert!((t - 10f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoints_are_returned_when_already_roots() {
        assert_eq!(monotone_root(|x| x, 0.0, 1.0, 1e-12), 0.0);
        assert_eq!(monotone_root(|x| x - 1.0, 0.0, 1.0, 1e-12), 1.0);
    }
}
