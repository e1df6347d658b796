//! One-dimensional search helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Maximizes a unimodal function on `[lo, hi]` by golden-section search.
///
/// Stops once the bracket is narrower than `rel_tol * max(|x|, tiny)` around
/// the current midpoint. Returns the best point seen together with its value;
/// the endpoints are included in that comparison so a monotone function
/// returns the better endpoint.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    assert!(lo <= hi, "golden_section_max: empty bracket [{lo}, {hi}]");
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);

    for _ in 0..500 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }

    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// `n` logarithmically spaced points from `lo` to `hi`, both inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (ll + (lh - ll) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi`, both inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi > lo && n >= 2);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 1.3) * (x - 1.3), 0.0, 5.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn monotone_function_returns_endpoint() {
        let (x, _) = golden_section_max(|x| x, 0.5, 2.0, 1e-8);
        assert_eq!(x, 2.0);
        let (x, _) = golden_section_max(|x| -x, 0.5, 2.0, 1e-8);
        assert_eq!(x, 0.5);
    }

    #[test]
    fn spaces_hit_endpoints() {
        let g = log_space(1e-4, 10.0, 256);
        assert_eq!(g.len(), 256);
        assert_eq!(g[255], 10.0);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let l = lin_space(0.0, 1.0, 11);
        assert_eq!(l[10], 1.0);
        assert!((l[3] - 0.3).abs() < 1e-15);
    }
}
