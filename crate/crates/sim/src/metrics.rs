//! Link metrics computed from a designed block: throughput and the
//! received constellation.

use ftn_slp_core::ci::{ci_margins, CISystem};
use ftn_slp_core::linalg::{vec_rows, CVector, RVector};
use ftn_slp_core::num_complex::Complex64;
use ftn_slp_core::EffectiveChannel;
use ftn_slp_core::linalg::CMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Gaussian tail `Q(x) = ½ erfc(x / √2)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Components of `y` measured toward its nominal symbol `d`: positive when
/// the corresponding sign is detected correctly.
fn aligned(y: Complex64, d: Complex64) -> (f64, f64) {
    (y.re * d.re.signum(), y.im * d.im.signum())
}

/// Average correctly received bits per nominal period `T0` per symbol slot.
///
/// `noise_vars[i]` is the complex noise variance on symbol `i`; each real
/// dimension carries half of it.
pub fn throughput(y: &[Complex64], d: &[Complex64], noise_vars: &[f64], tau: f64) -> f64 {
    assert_eq!(y.len(), d.len());
    assert_eq!(y.len(), noise_vars.len());
    if y.is_empty() {
        return 0.0;
    }
    let total: f64 = y
        .iter()
        .zip(d)
        .zip(noise_vars)
        .map(|((&y, &d), &v)| {
            let (a, b) = aligned(y, d);
            let s = (v / 2.0).sqrt();
            let p1 = q_function(a / s);
            let p2 = q_function(b / s);
            2.0 * (1.0 - p1) * (1.0 - p2) + (1.0 - p1) * p2 + p1 * (1.0 - p2)
        })
        .sum();
    total / (y.len() as f64 * tau)
}

/// Monte Carlo counterpart of [`throughput`]: add noise, detect signs and
/// count correct bits.
pub fn simulated_throughput<R: Rng + ?Sized>(
    rng: &mut R,
    y: &[Complex64],
    d: &[Complex64],
    noise_vars: &[f64],
    tau: f64,
    draws: usize,
) -> f64 {
    let mut correct = 0u64;
    for _ in 0..draws {
        for ((&y, &d), &v) in y.iter().zip(d).zip(noise_vars) {
            let s = (v / 2.0).sqrt();
            let n_re: f64 = StandardNormal.sample(rng);
            let n_im: f64 = StandardNormal.sample(rng);
            let r = y + Complex64::new(n_re * s, n_im * s);
            correct += u64::from(r.re.signum() == d.re.signum());
            correct += u64::from(r.im.signum() == d.im.signum());
        }
    }
    correct as f64 / (draws as f64 * y.len() as f64 * tau)
}

/// One noiseless received symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstellationPoint {
    pub user: usize,
    pub slot: usize,
    pub re: f64,
    pub im: f64,
    /// Smaller of the two CI margins of this symbol.
    pub margin: f64,
    pub noise_std: f64,
}

/// Noiseless received symbols `H̄_C vec(Sᵀ)`, user-major, with their CI margins.
pub fn constellation(eff: &EffectiveChannel, ci: &CISystem, s: &CMatrix, s_hat: &RVector) -> Vec<ConstellationPoint> {
    let y = eff.received(s);
    let l = eff.noise_eigs.len();
    let kl = y.len();
    let margins = ci_margins(s_hat, ci);
    (0..kl)
        .map(|i| ConstellationPoint {
            user: i / l,
            slot: i % l,
            re: y[i].re,
            im: y[i].im,
            margin: margins[i].min(margins[i + kl]),
            noise_std: ci.sigma_vec[i],
        })
        .collect()
}

/// Throughput of a designed block, with per-symbol noise `σ_C² λ_i`.
pub fn block_throughput(y: &CVector, data: &CMatrix, noise_vars: &[f64], tau: f64) -> f64 {
    let d = vec_rows(data);
    throughput(y.as_slice(), d.as_slice(), noise_vars, tau)
}
