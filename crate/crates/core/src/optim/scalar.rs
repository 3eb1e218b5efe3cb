//! One-dimensional root finding and minimization.

/// Root of a nondecreasing `f` on `[lo, hi]` with `f(lo) ≤ 0 ≤ f(hi)`, by safeguarded
/// bisection/secant steps. Returns the bracket midpoint once it is narrower than `xtol`.
pub fn monotone_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo >= 0.0 {
        return lo;
    }
    if fhi <= 0.0 {
        return hi;
    }
    for it in 0..300 {
        if hi - lo <= xtol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        // alternate regula falsi with bisection so the bracket always shrinks
        let mid = if it % 2 == 0 && fhi.is_finite() && flo.is_finite() {
            let s = lo - flo * (hi - lo) / (fhi - flo);
            if s > lo && s < hi {
                s
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Expands `hi` geometrically from `start` until `f(hi) ≥ 0`; `None` if that never happens
/// below `limit`.
pub fn bracket_up(f: impl Fn(f64) -> f64, start: f64, limit: f64) -> Option<f64> {
    let mut hi = start.max(1e-12);
    while hi <= limit {
        if f(hi) >= 0.0 {
            return Some(hi);
        }
        hi *= 2.0;
    }
    None
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // endpoints matter for line searches that end at a vertex
    [a, mid, b]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root() {
        let r = monotone_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15);
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn golden_parabola() {
        let x = golden_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        let edge = golden_min(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(edge, 0.0);
    }

    #[test]
    fn bracket_finds_sign_change() {
        assert!(bracket_up(|x| x - 100.0, 1.0, 1e6).unwrap() >= 100.0);
        assert!(bracket_up(|_| -1.0, 1.0, 1e3).is_none());
    }
}
