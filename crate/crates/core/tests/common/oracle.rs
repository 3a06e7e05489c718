//! Independent reference computations used by the integration tests.

use ftn_slp_core::linalg::{CMatrix, CVector, RMatrix};
use ftn_slp_core::num_complex::Complex64;
use ftn_slp_core::{CommChannel, Dimensions};

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn adapt(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, whole: f64, m: f64, fm: f64, tol: f64, depth: u32) -> f64 {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1) + adapt(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`, split into `pieces`
/// panels so oscillatory integrands are resolved.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (flo, fhi) = (f(lo), f(hi));
            let (whole, m, fm) = simpson(&f, lo, flo, hi, fhi);
            adapt(&f, lo, flo, hi, fhi, whole, m, fm, tol / pieces as f64, 40)
        })
        .sum()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &RMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Received whitened symbols computed directly in the time domain: matched
/// filter `x_n = Ω_φ s_n`, tap convolution `z_i = Σ_p H_p x_{i-p}` over
/// `1 ≤ i - p ≤ L0` (1-based), keep samples `P+Q+1 ..= P+Q+L`, rotate by `Uᵀ`.
pub fn received_by_convolution(
    comm: &CommChannel,
    omega_auto: &RMatrix,
    dims: &Dimensions,
    basis: &RMatrix,
    s: &CMatrix,
) -> CVector {
    let (l, l0, p_taps, q, n_tx) = (dims.block_len, dims.l0(), dims.taps, dims.half_width, dims.n_tx);
    let omega = omega_auto.map(|v| Complex64::new(v, 0.0));
    let x: Vec<CVector> = (0..n_tx).map(|n| &omega * s.row(n).transpose()).collect();
    let mut out = CVector::zeros(dims.n_users * l);
    for k in 0..dims.n_users {
        let mut window = CVector::zeros(l);
        for j in 0..l {
            let i = p_taps + q + 1 + j;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 1..=p_taps {
                if i < p + 1 || i - p > l0 {
                    continue;
                }
                for (n, xn) in x.iter().enumerate() {
                    acc += comm.taps[(k, (p - 1) * n_tx + n)] * xn[i - p - 1];
                }
            }
            window[j] = acc;
        }
        let rotated = basis.map(|v| Complex64::new(v, 0.0)).transpose() * window;
        out.rows_mut(k * l, l).copy_from(&rotated);
    }
    out
}

/// Central difference of `f` at `x` along `dir`.
pub fn directional_derivative(f: impl Fn(&CMatrix) -> f64, x: &CMatrix, dir: &CMatrix, h: f64) -> f64 {
    let step = Complex64::new(h, 0.0);
    (f(&(x + dir * step)) - f(&(x - dir * step))) / (2.0 * h)
}

/// Best value of `f` on a uniform grid over the box `[lo, hi]^n`.
pub fn grid_minimum(f: impl Fn(&[f64]) -> Option<f64>, n: usize, lo: f64, hi: f64, per_axis: usize) -> Option<(f64, Vec<f64>)> {
    let mut idx = vec![0usize; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let h = (hi - lo) / (per_axis - 1) as f64;
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| lo + i as f64 * h).collect();
        if let Some(v) = f(&x) {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x));
            }
        }
        let mut d = 0;
        loop {
            if d == n {
                return best;
            }
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}
