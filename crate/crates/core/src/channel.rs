//! Communication and sensing channels, the receive window, noise whitening
//! and the effective linear map from transmit symbols to received symbols.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::dims::Dimensions;
use crate::error::{check_shape, invalid, Error, Result};
use crate::linalg::{
    asymmetry, clamp_eigenvalues, complex_gaussian, complex_gaussian_matrix, psd_sqrt,
    sym_eigen_desc, CMatrix, CVector, RMatrix, RVector,
};
use crate::pulse::PulseTables;

/// Sampled multipath communication channel `H_C = [H_1, ..., H_P]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommChannel {
    /// `K x (N_t P)`, tap-major: columns `p N_t .. (p + 1) N_t` hold tap `p`.
    pub taps: CMatrix,
    /// Receiver noise power `σ_C²` (linear).
    pub noise_power: f64,
}

impl CommChannel {
    pub fn new(taps: CMatrix, noise_power: f64, dims: &Dimensions) -> Result<Self> {
        check_shape(
            "communication channel",
            (dims.n_users, dims.n_tx * dims.taps),
            taps.shape(),
        )?;
        if taps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("taps", "channel entries must be finite"));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(invalid("noise_power", "must be positive"));
        }
        Ok(Self { taps, noise_power })
    }

    /// Coefficient of tap `p` (0-based) from antenna `n` to user `k`.
    pub fn coeff(&self, k: usize, p: usize, n: usize, n_tx: usize) -> Complex64 {
        self.taps[(k, p * n_tx + n)]
    }
}

/// Draw a channel whose entries are i.i.d. `CN(0, tap_variance)`.
pub fn sample_comm_channel<R: Rng + ?Sized>(
    rng: &mut R,
    dims: &Dimensions,
    tap_variance: f64,
    noise_power: f64,
) -> Result<CommChannel> {
    dims.validate_sizes()?;
    if !(tap_variance > 0.0) {
        return Err(invalid("tap_variance", "must be positive"));
    }
    let taps = complex_gaussian_matrix(rng, dims.n_users, dims.n_tx * dims.taps, tap_variance);
    CommChannel::new(taps, noise_power, dims)
}

/// Gaussian prior of the target response matrix and the radar noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingPrior {
    /// Per-entry TRM variance `σ_H²`.
    pub trm_power: f64,
    /// Radar receiver noise power `σ_R²`.
    pub noise_power: f64,
    /// Prior mean of `h = vec(H_Rᵀ)`, length `N_r N_t P`.
    pub mean: CVector,
}

impl SensingPrior {
    pub fn new(trm_power: f64, noise_power: f64, dims: &Dimensions) -> Result<Self> {
        if !(trm_power > 0.0 && trm_power.is_finite()) {
            return Err(invalid("trm_power", "must be positive"));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(invalid("noise_power", "must be positive"));
        }
        let len = dims.n_rx * dims.sensing_width();
        Ok(Self {
            trm_power,
            noise_power,
            mean: CVector::zeros(len),
        })
    }

    /// `σ_R² / σ_H²`, the regularizer of the MMSE objective.
    pub fn ratio(&self) -> f64 {
        self.noise_power / self.trm_power
    }
}

/// Draw `H_R` (`N_r x N_t P`) around the prior mean.
pub fn sample_trm<R: Rng + ?Sized>(rng: &mut R, dims: &Dimensions, prior: &SensingPrior) -> CMatrix {
    let cols = dims.sensing_width();
    CMatrix::from_fn(dims.n_rx, cols, |r, c| {
        prior.mean[r * cols + c] + complex_gaussian(rng, prior.trm_power)
    })
}

/// How the `L1` matched-filter samples are reduced to `L` symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowMode {
    /// Keep `L` consecutive samples and discard the rest.
    #[default]
    Truncate,
    /// Add the trailing `L1 - L` samples onto the preceding ones.
    Fold,
}

/// Receive window `G` (`L1 x L`).
///
/// In truncate mode the identity block starts after `P + Q - 1` zero rows,
/// which places the peak of symbol `j` carried by the last tap on output `j`
/// under the `z_i = Σ_p H_p x_{i-p+1}` indexing used by the selection matrices.
pub fn build_window(dims: &Dimensions, mode: WindowMode) -> Result<RMatrix> {
    dims.validate_sizes()?;
    let (l, l1) = (dims.block_len, dims.l1());
    let mut g = RMatrix::zeros(l1, l);
    match mode {
        WindowMode::Truncate => {
            let offset = dims.taps + dims.half_width - 1;
            for j in 0..l {
                g[(offset + j, j)] = 1.0;
            }
        }
        WindowMode::Fold => {
            if l1 > 2 * l {
                return Err(Error::WindowUnavailable {
                    reason: format!("fold needs L1 <= 2L, got L1 = {l1}, L = {l}"),
                });
            }
            let head = 2 * l - l1;
            let tail = l1 - l;
            for j in 0..head {
                g[(j, j)] = 1.0;
            }
            for j in 0..tail {
                g[(head + j, head + j)] = 1.0;
                g[(head + tail + j, head + j)] = 1.0;
            }
        }
    }
    Ok(g)
}

/// Selection matrix `E_p` (`L1 x L0`) placing the identity at rows
/// `p..p + L0`, for the 0-based tap index `p`.
pub fn selection_matrix(dims: &Dimensions, p: usize) -> RMatrix {
    let (l0, l1) = (dims.l0(), dims.l1());
    let mut e = RMatrix::zeros(l1, l0);
    for i in 0..l0 {
        e[(p + i, i)] = 1.0;
    }
    e
}

/// `E_p Ω` without forming `E_p`: `Ω` shifted down by `p` rows inside `L1`.
pub fn shifted(omega: &RMatrix, p: usize, l1: usize) -> RMatrix {
    let (rows, cols) = omega.shape();
    let mut out = RMatrix::zeros(l1, cols);
    out.view_mut((p, 0), (rows, cols)).copy_from(omega);
    out
}

/// Eigendecomposition `GᵀΦ1G = U Λ Uᵀ` used to decorrelate matched-filter
/// noise. `Φ1` and `G` are real, so `U` is real orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    /// Orthogonal `L x L` eigenvector matrix `U_φ`.
    pub basis: RMatrix,
    /// Descending, floored eigenvalues (diagonal of `Λ_φ`).
    pub eigs: RVector,
}

pub fn whiten(window: &RMatrix, gram_ext: &RMatrix) -> Result<Whitening> {
    check_shape(
        "window against Φ1",
        (gram_ext.nrows(), window.ncols()),
        (window.nrows(), window.ncols()),
    )?;
    let cov = window.transpose() * gram_ext * window;
    let asym = asymmetry(&cov);
    if asym > 1e-10 * cov.amax().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let cov = (&cov + cov.transpose()) * 0.5;
    let (mut eigs, basis) = sym_eigen_desc(&cov);
    clamp_eigenvalues(&mut eigs);
    Ok(Whitening { basis, eigs })
}

/// Everything needed to map `vec(Sᵀ)` to the noiseless whitened received
/// symbols `vec(Y_Cᵀ)` (user-major, symbol-minor).
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    /// `G`, `L1 x L`.
    pub window: RMatrix,
    /// `U_φ`, `L x L`.
    pub whitener: RMatrix,
    /// Diagonal of `Λ_φ`.
    pub noise_eigs: RVector,
    /// `H̄_C`, `(K L) x (N_t L)`.
    pub effective: CMatrix,
    /// `(G U_φ)ᵀ E_p Ω_φ` for each tap, `L x L`.
    pub tap_responses: Vec<RMatrix>,
}

impl EffectiveChannel {
    /// Noiseless received symbols for a transmit block `S` (`N_t x L`).
    pub fn received(&self, s: &CMatrix) -> CVector {
        &self.effective * crate::linalg::vec_rows(s)
    }
}

pub fn assemble_effective(
    comm: &CommChannel,
    tables: &PulseTables,
    dims: &Dimensions,
    window: &RMatrix,
    whitening: &Whitening,
) -> Result<EffectiveChannel> {
    dims.validate_sizes()?;
    let (l, l1) = (dims.block_len, dims.l1());
    check_shape("communication channel", (dims.n_users, dims.n_tx * dims.taps), comm.taps.shape())?;
    check_shape("pulse matrix Ω_φ", (dims.l0(), l), tables.omega_auto.shape())?;
    check_shape("window", (l1, l), window.shape())?;
    check_shape("whitener", (l, l), whitening.basis.shape())?;

    let gu_t = (window * &whitening.basis).transpose();
    let tap_responses: Vec<RMatrix> = (0..dims.taps)
        .map(|p| &gu_t * shifted(&tables.omega_auto, p, l1))
        .collect();

    let (k_users, n_tx) = (dims.n_users, dims.n_tx);
    let mut effective = CMatrix::zeros(k_users * l, n_tx * l);
    for k in 0..k_users {
        for n in 0..n_tx {
            let mut block = effective.view_mut((k * l, n * l), (l, l));
            for (p, m) in tap_responses.iter().enumerate() {
                let h = comm.coeff(k, p, n, n_tx);
                for c in 0..l {
                    for r in 0..l {
                        block[(r, c)] += h * m[(r, c)];
                    }
                }
            }
        }
    }
    Ok(EffectiveChannel {
        window: window.clone(),
        whitener: whitening.basis.clone(),
        noise_eigs: whitening.eigs.clone(),
        effective,
        tap_responses,
    })
}

/// Symmetric square root of `Φ1`, used to draw noise with covariance
/// `σ² Φ1`.
pub fn noise_factor(gram_ext: &RMatrix) -> Result<RMatrix> {
    psd_sqrt(gram_ext)
}

/// One matched-filter noise vector with covariance `variance · F Fᵀ`.
pub fn sample_correlated_noise<R: Rng + ?Sized>(rng: &mut R, factor: &RMatrix, variance: f64) -> CVector {
    let white = CVector::from_fn(factor.ncols(), |_, _| complex_gaussian(rng, variance));
    factor.map(|x| Complex64::new(x, 0.0)) * white
}
