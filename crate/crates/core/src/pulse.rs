//! Root-raised-cosine shaping pulse, its autocorrelation, and the banded and
//! Gram matrices built from their samples.
//!
//! The pulse has unit energy, so its autocorrelation is the raised-cosine
//! pulse with `φ(0) = 1`. Samples are taken at the compressed symbol interval
//! `T = τ T0`, and the pulse is truncated to `[-Q T, Q T]` when the banded
//! convolution matrices are formed.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::linalg::{symmetric_toeplitz, RMatrix};

/// Half-width of the band around a removable singularity inside which the
/// closed forms are replaced by their limits, as a fraction of `T0`.
const GUARD_BAND: f64 = 1e-4;

/// Parameters of the FTN shaping pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Roll-off factor α in (0, 1].
    pub rolloff: f64,
    /// Nyquist symbol period T0 in seconds.
    pub nominal_period: f64,
    /// Compression factor τ in (0, 1].
    pub compression: f64,
    /// Truncation half-width Q in symbol intervals.
    pub half_width: usize,
}

impl PulseSpec {
    pub fn new(rolloff: f64, nominal_period: f64, compression: f64, half_width: usize) -> Result<Self> {
        let spec = Self {
            rolloff,
            nominal_period,
            compression,
            half_width,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(invalid("rolloff", "must lie in (0, 1]"));
        }
        if !(self.nominal_period > 0.0 && self.nominal_period.is_finite()) {
            return Err(invalid("nominal_period", "must be positive and finite"));
        }
        if !(self.compression > 0.0 && self.compression <= 1.0) {
            return Err(invalid("compression", "must lie in (0, 1]"));
        }
        if self.half_width == 0 {
            return Err(invalid("half_width", "must be at least 1"));
        }
        Ok(())
    }

    /// `T = τ T0`.
    pub fn effective_period(&self) -> f64 {
        self.compression * self.nominal_period
    }
}

fn rrc_closed_form(u: f64, a: f64) -> f64 {
    let num = libm::sin(PI * u * (1.0 - a)) + 4.0 * a * u * libm::cos(PI * u * (1.0 + a));
    let den = PI * u * (1.0 - (4.0 * a * u) * (4.0 * a * u));
    num / den
}

fn rrc_at_quarter(a: f64) -> f64 {
    let x = PI / (4.0 * a);
    a / libm::sqrt(2.0) * ((1.0 + 2.0 / PI) * libm::sin(x) + (1.0 - 2.0 / PI) * libm::cos(x))
}

/// Unit-energy root-raised-cosine pulse `ϕ(t)`.
pub fn rrc_shape(t: f64, spec: &PulseSpec) -> f64 {
    let a = spec.rolloff;
    let scale = 1.0 / libm::sqrt(spec.nominal_period);
    let u = (t / spec.nominal_period).abs();
    if u < 1e-12 {
        return scale * (1.0 - a + 4.0 * a / PI);
    }
    let singular = 1.0 / (4.0 * a);
    let offset = u - singular;
    if offset.abs() < GUARD_BAND {
        let limit = rrc_at_quarter(a);
        if offset == 0.0 {
            return scale * limit;
        }
        let edge_u = singular + GUARD_BAND * offset.signum();
        let edge = rrc_closed_form(edge_u, a);
        return scale * (limit + (edge - limit) * offset.abs() / GUARD_BAND);
    }
    scale * rrc_closed_form(u, a)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        libm::sin(PI * x) / (PI * x)
    }
}

fn rc_closed_form(u: f64, a: f64) -> f64 {
    sinc(u) * libm::cos(PI * a * u) / (1.0 - (2.0 * a * u) * (2.0 * a * u))
}

/// Autocorrelation `φ(t) = ∫ ϕ(ζ) ϕ(ζ - t) dζ` of the unit-energy pulse: the
/// raised-cosine pulse with `φ(0) = 1`.
pub fn autocorr(t: f64, spec: &PulseSpec) -> f64 {
    let a = spec.rolloff;
    let u = (t / spec.nominal_period).abs();
    let singular = 1.0 / (2.0 * a);
    let offset = u - singular;
    if offset.abs() < GUARD_BAND {
        let limit = PI / 4.0 * sinc(singular);
        if offset == 0.0 {
            return limit;
        }
        let edge = rc_closed_form(singular + GUARD_BAND * offset.signum(), a);
        return limit + (edge - limit) * offset.abs() / GUARD_BAND;
    }
    rc_closed_form(u, a)
}

/// Banded Toeplitz matrix of size `(L + 2Q) x L` whose `j`-th column holds the
/// `2Q + 1` samples (ordered from lag `-Q` to `Q`) in rows `j..=j + 2Q`.
pub fn build_omega(samples: &[f64], block_len: usize) -> Result<RMatrix> {
    if samples.is_empty() || samples.len() % 2 == 0 {
        return Err(invalid("samples", "need an odd, nonzero number of pulse samples"));
    }
    if block_len == 0 {
        return Err(invalid("block_len", "must be positive"));
    }
    let width = samples.len();
    let mut omega = RMatrix::zeros(block_len + width - 1, block_len);
    for j in 0..block_len {
        for (k, &v) in samples.iter().enumerate() {
            omega[(j + k, j)] = v;
        }
    }
    Ok(omega)
}

/// Pulse energy Gram matrices: `Φ` (`L x L`) and `Φ1` (`L1 x L1`), both with
/// entry `(i, j) = φ((i - j) T)`.
pub fn build_grams(spec: &PulseSpec, block_len: usize, ext_len: usize) -> (RMatrix, RMatrix) {
    let lags = autocorr_lags(spec, block_len.max(ext_len));
    (
        symmetric_toeplitz(&lags[..block_len]),
        symmetric_toeplitz(&lags[..ext_len]),
    )
}

fn autocorr_lags(spec: &PulseSpec, count: usize) -> Vec<f64> {
    let t = spec.effective_period();
    (0..count).map(|k| autocorr(k as f64 * t, spec)).collect()
}

fn centered_samples(spec: &PulseSpec, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let q = spec.half_width as i64;
    let t = spec.effective_period();
    (-q..=q).map(|k| f(k as f64 * t)).collect()
}

/// Sampled pulse, autocorrelation and every matrix derived from them for one
/// block length and channel length.
#[derive(Debug, Clone)]
pub struct PulseTables {
    pub spec: PulseSpec,
    /// `ϕ(kT)` for `k = -Q..=Q`.
    pub phi_shape: Vec<f64>,
    /// `φ(kT)` for `k = 0..L1`; negative lags follow by symmetry.
    pub phi_auto: Vec<f64>,
    /// `Ω_ϕ`, `(L + 2Q) x L`.
    pub omega_shape: RMatrix,
    /// `Ω_φ`, `(L + 2Q) x L`.
    pub omega_auto: RMatrix,
    /// `Φ`, `L x L`.
    pub gram: RMatrix,
    /// `Φ1`, `L1 x L1`.
    pub gram_ext: RMatrix,
    /// Fraction of pulse energy outside `[-QT, QT]`, dropped by truncation.
    pub tail_mass: f64,
}

impl PulseTables {
    pub fn new(spec: PulseSpec, block_len: usize, taps: usize) -> Result<Self> {
        spec.validate()?;
        if block_len == 0 || taps == 0 {
            return Err(invalid("block_len", "block length and taps must be positive"));
        }
        let ext_len = block_len + 2 * spec.half_width + taps - 1;
        let phi_shape = centered_samples(&spec, |t| rrc_shape(t, &spec));
        let auto_centered = centered_samples(&spec, |t| autocorr(t, &spec));
        let omega_shape = build_omega(&phi_shape, block_len)?;
        let omega_auto = build_omega(&auto_centered, block_len)?;
        let phi_auto = autocorr_lags(&spec, ext_len);
        let gram = symmetric_toeplitz(&phi_auto[..block_len]);
        let gram_ext = symmetric_toeplitz(&phi_auto);
        let tail_mass = truncation_tail_mass(&spec);
        Ok(Self {
            spec,
            phi_shape,
            phi_auto,
            omega_shape,
            omega_auto,
            gram,
            gram_ext,
            tail_mass,
        })
    }

    pub fn block_len(&self) -> usize {
        self.gram.nrows()
    }
}

/// `1 - ∫_{-QT}^{QT} ϕ(t)² dt` by composite Simpson.
fn truncation_tail_mass(spec: &PulseSpec) -> f64 {
    let half = spec.half_width as f64 * spec.effective_period();
    let n = 400 * spec.half_width.max(1) * 2;
    let h = 2.0 * half / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let t = -half + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = rrc_shape(t, spec);
        acc += w * v * v;
    }
    (1.0 - acc * h / 3.0).max(0.0)
}
