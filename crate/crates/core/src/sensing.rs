//! Radar-side quantities: the lifted waveform `X̄_R`, the MMSE objective and
//! estimator, the minorization surrogate and the SCA gradient.

use alloc::vec::Vec;

use nalgebra::Cholesky;
use num_complex::Complex64;

use crate::channel::{shifted, SensingPrior};
use crate::dims::Dimensions;
use crate::error::{check_shape, Error, Result};
use crate::linalg::{to_complex, vec_rows, CMatrix, CVector, RMatrix, RVector};
use crate::pulse::PulseTables;

/// Linear map from `vec(Sᵀ)` to `vec(X̄_R)`.
#[derive(Debug, Clone)]
pub struct SensingLift {
    /// `W_p = E_p Ω_ϕ`, `L1 x L`, one per tap.
    pub blocks: Vec<RMatrix>,
    pub dims: Dimensions,
}

impl SensingLift {
    pub fn new(tables: &PulseTables, dims: &Dimensions) -> Result<Self> {
        dims.validate_sizes()?;
        check_shape("Ω_ϕ", (dims.l0(), dims.block_len), tables.omega_shape.shape())?;
        let blocks = (0..dims.taps)
            .map(|p| shifted(&tables.omega_shape, p, dims.l1()))
            .collect();
        Ok(Self { blocks, dims: *dims })
    }

    /// Dense `E_R`, `(P N_t L1) x (N_t L)`.
    pub fn e_r(&self) -> RMatrix {
        let d = &self.dims;
        let (l, l1, n_tx) = (d.block_len, d.l1(), d.n_tx);
        let mut e = RMatrix::zeros(d.taps * n_tx * l1, n_tx * l);
        for (p, w) in self.blocks.iter().enumerate() {
            for n in 0..n_tx {
                e.view_mut(((p * n_tx + n) * l1, n * l), (l1, l)).copy_from(w);
            }
        }
        e
    }

    /// `X̄_R = [E_1 X_Rᵀ, ..., E_P X_Rᵀ]` for `S` (`N_t x L`); column
    /// `p N_t + n` is `W_p s_n`.
    pub fn lift(&self, s: &CMatrix) -> Result<CMatrix> {
        let d = &self.dims;
        check_shape("transmit block", (d.n_tx, d.block_len), s.shape())?;
        let mut x = CMatrix::zeros(d.l1(), d.sensing_width());
        for (p, w) in self.blocks.iter().enumerate() {
            let wc = to_complex(w);
            for n in 0..d.n_tx {
                let col = &wc * s.row(n).transpose();
                x.set_column(p * d.n_tx + n, &col);
            }
        }
        Ok(x)
    }

    /// `E_Rᵀ v` for `v = vec(Z)`, `Z` of the shape of `X̄_R`.
    pub fn adjoint(&self, z: &CMatrix) -> CVector {
        let d = &self.dims;
        let l = d.block_len;
        let mut out = CVector::zeros(d.n_tx * l);
        for (p, w) in self.blocks.iter().enumerate() {
            let wt = to_complex(&w.transpose());
            for n in 0..d.n_tx {
                let v = &wt * z.column(p * d.n_tx + n);
                let mut seg = out.rows_mut(n * l, l);
                seg += v;
            }
        }
        out
    }
}

/// Optimization objective `f` and the physical MMSE `σ_R² N_r f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseValue {
    pub f: f64,
    pub mmse: f64,
}

fn hermitian_inverse(m: &CMatrix, context: &'static str) -> Result<CMatrix> {
    let herm = (m + m.adjoint()).scale(0.5);
    Cholesky::new(herm)
        .map(|c| c.inverse())
        .ok_or_else(|| Error::IllConditioned {
            context,
            detail: alloc::string::String::from("Cholesky factorization failed"),
        })
}

/// `R = (σ_R²/σ_H²) I + X̄ᴴ X̄`.
fn regularized_gram(xbar: &CMatrix, ratio: f64) -> CMatrix {
    let n = xbar.ncols();
    xbar.adjoint() * xbar + CMatrix::identity(n, n).scale(ratio)
}

/// `f = tr((σ_R²/σ_H² I + X̄ᴴX̄)⁻¹)` and `mmse = σ_R² N_r f`.
pub fn mmse_objective(xbar: &CMatrix, sigma_r2: f64, sigma_h2: f64, n_rx: usize) -> MmseValue {
    let r = regularized_gram(xbar, sigma_r2 / sigma_h2);
    let f = hermitian_inverse(&r, "MMSE objective")
        .map(|inv| inv.trace().re)
        .unwrap_or(f64::INFINITY);
    MmseValue {
        f,
        mmse: sigma_r2 * n_rx as f64 * f,
    }
}

/// `M = σ_H² X̄X̄ᴴ + σ_R² I`.
fn data_covariance(xbar: &CMatrix, sigma_r2: f64, sigma_h2: f64) -> CMatrix {
    let l1 = xbar.nrows();
    (xbar * xbar.adjoint()).scale(sigma_h2) + CMatrix::identity(l1, l1).scale(sigma_r2)
}

/// `f_m = tr(X̄ᴴ (σ_H² X̄X̄ᴴ + σ_R² I)⁻¹ X̄)`; maximizing it minimizes `f`
/// since `f = (σ_H²/σ_R²)(N_t P - σ_H² f_m)`.
pub fn f_m(xbar: &CMatrix, sigma_r2: f64, sigma_h2: f64) -> f64 {
    let m = data_covariance(xbar, sigma_r2, sigma_h2);
    match Cholesky::new(m) {
        Some(c) => {
            let sol = c.solve(xbar);
            xbar.iter().zip(sol.iter()).map(|(a, b)| (a.conj() * b).re).sum()
        }
        None => f64::NAN,
    }
}

/// Linear MMSE estimate of `h = vec(H_Rᵀ)` from `Y_Rᵀ` (`L1 x N_r`),
/// evaluated one receive antenna at a time.
pub fn mmse_estimate(y_t: &CMatrix, xbar: &CMatrix, prior: &SensingPrior) -> Result<CVector> {
    let (l1, width) = xbar.shape();
    check_shape("radar observation", (l1, y_t.ncols()), y_t.shape())?;
    let n_rx = y_t.ncols();
    check_shape("prior mean", (n_rx * width, 1), (prior.mean.len(), 1))?;
    let m = data_covariance(xbar, prior.noise_power, prior.trm_power);
    let chol = Cholesky::new(m).ok_or_else(|| Error::IllConditioned {
        context: "MMSE estimator",
        detail: alloc::string::String::from("data covariance not positive definite"),
    })?;
    let mut h = CVector::zeros(n_rx * width);
    for r in 0..n_rx {
        let mu = prior.mean.rows(r * width, width).into_owned();
        let resid = y_t.column(r) - xbar * &mu;
        let gain = xbar.adjoint() * chol.solve(&resid);
        h.rows_mut(r * width, width)
            .copy_from(&(mu + gain.scale(prior.trm_power)));
    }
    Ok(h)
}

/// Quadratic minorizer `g_m(S) = c - 2 Re{vᴴ b} - vᴴ B v` of `f_m` at the
/// current point, with `v = vec(Sᵀ)`.
#[derive(Debug, Clone)]
pub struct MinorizerParams {
    pub b: CVector,
    /// Hermitian PSD, `(N_t L) x (N_t L)`; equal to `I_{N_t} ⊗ block`.
    pub big_b: CMatrix,
    /// The repeated `L x L` diagonal block of `B`.
    pub block: CMatrix,
    pub c: f64,
}

impl MinorizerParams {
    pub fn value(&self, s: &CMatrix) -> f64 {
        let v = vec_rows(s);
        let lin: Complex64 = v.iter().zip(self.b.iter()).map(|(x, y)| x.conj() * y).sum();
        let quad: Complex64 = v.iter().zip((&self.big_b * &v).iter()).map(|(x, y)| x.conj() * y).sum();
        self.c - 2.0 * lin.re - quad.re
    }

    /// Real form `(Â, â)` of `min vᴴBv + 2 Re{vᴴb}` in `ŝ = [Re v; Im v]`:
    /// `Â = [[Re B, -Im B], [Im B, Re B]]`, `â = [Re b; Im b]`.
    pub fn real_form(&self) -> (RMatrix, RVector) {
        let hess = crate::linalg::real_representation(&self.big_b);
        let hess = (&hess + hess.transpose()) * 0.5;
        (hess, crate::linalg::real_stack(&self.b))
    }
}

/// Surrogate built from `Q = M⁻¹X̄` and `T = QQᴴ`, with
/// `M = σ_H² X̄X̄ᴴ + σ_R² I`; it touches `f_m` at `X̄`.
pub fn minorizer(xbar: &CMatrix, lift: &SensingLift, sigma_r2: f64, sigma_h2: f64) -> Result<MinorizerParams> {
    let m = data_covariance(xbar, sigma_r2, sigma_h2);
    let chol = Cholesky::new(m).ok_or_else(|| Error::IllConditioned {
        context: "minorizer",
        detail: alloc::string::String::from("data covariance not positive definite"),
    })?;
    let q = chol.solve(xbar);
    let t = &q * q.adjoint();
    let b = -lift.adjoint(&q);
    let l = lift.dims.block_len;
    let mut block = CMatrix::zeros(l, l);
    for w in &lift.blocks {
        let wc = to_complex(w);
        block += wc.transpose() * &t * &wc;
    }
    block = (&block + block.adjoint()).scale(0.5 * sigma_h2);
    let n_tx = lift.dims.n_tx;
    let mut big_b = CMatrix::zeros(n_tx * l, n_tx * l);
    for n in 0..n_tx {
        big_b.view_mut((n * l, n * l), (l, l)).copy_from(&block);
    }
    let c = -sigma_r2 * t.trace().re;
    Ok(MinorizerParams { b, big_b, block, c })
}

/// Which expression is used for `∂f/∂X̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientForm {
    /// `-2 X̄ R⁻²` with `R = (σ_R²/σ_H²) I + X̄ᴴX̄`, the exact gradient of `f`.
    #[default]
    Regularized,
    /// `-2 X̄ (X̄ᴴX̄)⁻²`, the unregularized limit.
    Literal,
}

/// First-order data of `f` at the current point.
#[derive(Debug, Clone)]
pub struct ScaGradient {
    /// `t_R = E_Rᵀ vec(∂f/∂X̄)`; `df = Re{t_Rᴴ vec(ΔSᵀ)}`.
    pub t_r: CVector,
    pub value_at_point: f64,
}

impl ScaGradient {
    /// `â` such that `Re{t_Rᴴ v} = 2 ŝᵀ â`.
    pub fn real_linear(&self) -> RVector {
        crate::linalg::real_stack(&self.t_r) * 0.5
    }
}

pub fn sca_gradient(
    xbar: &CMatrix,
    lift: &SensingLift,
    sigma_r2: f64,
    sigma_h2: f64,
    form: GradientForm,
) -> Result<ScaGradient> {
    let ratio = sigma_r2 / sigma_h2;
    let r = match form {
        GradientForm::Regularized => regularized_gram(xbar, ratio),
        GradientForm::Literal => xbar.adjoint() * xbar,
    };
    let inv = hermitian_inverse(&r, "SCA gradient")?;
    let grad = (xbar * &inv * &inv).scale(-2.0);
    let value = mmse_objective(xbar, sigma_r2, sigma_h2, 1).f;
    Ok(ScaGradient {
        t_r: lift.adjoint(&grad),
        value_at_point: value,
    })
}

/// Objective `f` of a transmit block.
pub fn objective_of(s: &CMatrix, lift: &SensingLift, sigma_r2: f64, sigma_h2: f64, n_rx: usize) -> Result<MmseValue> {
    let x = lift.lift(s)?;
    Ok(mmse_objective(&x, sigma_r2, sigma_h2, n_rx))
}
