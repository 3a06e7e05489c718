//! Exact line search on `[0, 1]`: a 64-point grid scan followed by
//! golden-section refinement around the best grid point.

const GRID: usize = 64;

/// Approximate minimizer of `f` over `[0, 1]`; both endpoints are candidates.
pub fn line_search(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let tol = tol.max(1e-15);
    let step = 1.0 / (GRID - 1) as f64;
    let mut best_t = 0.0;
    let mut best_v = f(0.0);
    let mut best_i = 0;
    for i in 1..GRID {
        let t = i as f64 * step;
        let v = f(t);
        if v < best_v {
            best_t = t;
            best_v = v;
            best_i = i;
        }
    }
    let lo = if best_i == 0 { 0.0 } else { (best_i - 1) as f64 * step };
    let hi = if best_i == GRID - 1 { 1.0 } else { (best_i + 1) as f64 * step };
    let (t, v) = golden(&f, lo, hi, tol);
    if v < best_v {
        t
    } else {
        best_t
    }
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let ratio = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
