//! Constructive-interference constraints and transmit-energy forms.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use rand::Rng;

use crate::channel::EffectiveChannel;
use crate::dims::Dimensions;
use crate::error::{check_shape, invalid, Error, Result};
use crate::linalg::{block_diag_repeat, vec_rows, CMatrix, RMatrix, RVector};
use crate::pulse::PulseTables;

/// `10^(x/10)`, used for every dB and dBm quantity.
pub fn db_to_linear(x: f64) -> f64 {
    libm::pow(10.0, x / 10.0)
}

/// `10 log10(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

/// Unit-energy QPSK point for the two bits `(b_re, b_im)`, with `true`
/// mapping to the positive half-axis.
pub fn qpsk_symbol(b_re: bool, b_im: bool) -> Complex64 {
    let sign = |b: bool| if b { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(sign(b_re), sign(b_im))
}

/// Data symbols of one block, one row per user.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    /// `D`, `K x L`, unit-modulus entries.
    pub data: CMatrix,
    /// Half-angle of the decision region, `π/4` for QPSK.
    pub theta: f64,
}

impl SymbolBlock {
    pub fn new(data: CMatrix, theta: f64) -> Result<Self> {
        for (i, z) in vec_rows(&data).iter().enumerate() {
            let modulus = z.norm();
            if (modulus - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidSymbol { index: i, modulus });
            }
        }
        if !(theta > 0.0 && theta < core::f64::consts::FRAC_PI_2) {
            return Err(invalid("theta", "must lie in (0, π/2)"));
        }
        Ok(Self { data, theta })
    }

    /// Uniform QPSK symbols, drawn row by row.
    pub fn random_qpsk<R: Rng + ?Sized>(rng: &mut R, users: usize, block_len: usize) -> Self {
        let mut data = CMatrix::zeros(users, block_len);
        for k in 0..users {
            for i in 0..block_len {
                data[(k, i)] = qpsk_symbol(rng.random(), rng.random());
            }
        }
        Self {
            data,
            theta: FRAC_PI_4,
        }
    }
}

/// Real inequality system `Ψ ŝ ≤ γ` with `ŝ = [Re vec(Sᵀ); Im vec(Sᵀ)]`.
#[derive(Debug, Clone)]
pub struct CISystem {
    /// `Ψ`, `(2KL) x (2 N_t L)`.
    pub psi: RMatrix,
    /// `γ`, length `2KL`.
    pub gamma: RVector,
    /// Per-symbol noise deviations `ς`, length `KL`, user-major.
    pub sigma_vec: RVector,
    /// Linear QoS thresholds `Γ_k`.
    pub qos: Vec<f64>,
    /// `D̄* H̄_C`: received symbols rotated onto their nominal points.
    pub rotated: CMatrix,
    pub theta: f64,
}

impl CISystem {
    /// A system with no rows, for sensing-only designs.
    pub fn empty(n_vars: usize) -> Self {
        Self {
            psi: RMatrix::zeros(0, n_vars),
            gamma: RVector::zeros(0),
            sigma_vec: RVector::zeros(0),
            qos: Vec::new(),
            rotated: CMatrix::zeros(0, n_vars / 2),
            theta: FRAC_PI_4,
        }
    }

    pub fn rows(&self) -> usize {
        self.psi.nrows()
    }
}

pub fn build_ci_system(
    eff: &EffectiveChannel,
    block: &SymbolBlock,
    qos_db: &[f64],
    noise_power: f64,
) -> Result<CISystem> {
    let (users, l) = block.data.shape();
    let lambda = &eff.noise_eigs;
    check_shape("noise eigenvalues", (l, 1), (lambda.len(), 1))?;
    check_shape("effective channel rows", (users * l, eff.effective.ncols()), eff.effective.shape())?;
    if qos_db.len() != users {
        return Err(invalid("qos_db", "need one QoS value per user"));
    }
    if qos_db.iter().any(|q| !q.is_finite()) {
        return Err(invalid("qos_db", "must be finite"));
    }
    if !(noise_power > 0.0) {
        return Err(invalid("noise_power", "must be positive"));
    }
    SymbolBlock::new(block.data.clone(), block.theta)?;

    let d = vec_rows(&block.data);
    let n = eff.effective.ncols();
    let mut rotated = eff.effective.clone();
    for (i, mut row) in rotated.row_iter_mut().enumerate() {
        let c = d[i].conj();
        for z in row.iter_mut() {
            *z *= c;
        }
    }
    let tan = libm::tan(block.theta);
    let kl = users * l;
    let mut psi = RMatrix::zeros(2 * kl, 2 * n);
    for i in 0..kl {
        for j in 0..n {
            let (pr, pi) = (rotated[(i, j)].re, rotated[(i, j)].im);
            psi[(i, j)] = pi - pr * tan;
            psi[(i, j + n)] = pr + pi * tan;
            psi[(i + kl, j)] = -pi - pr * tan;
            psi[(i + kl, j + n)] = -pr + pi * tan;
        }
    }
    let qos: Vec<f64> = qos_db.iter().map(|&q| db_to_linear(q)).collect();
    let sigma_vec = RVector::from_fn(kl, |i, _| libm::sqrt(noise_power * lambda[i % l]));
    let mut gamma = RVector::zeros(2 * kl);
    for i in 0..kl {
        let g = -libm::sqrt(qos[i / l]) * tan * sigma_vec[i];
        gamma[i] = g;
        gamma[i + kl] = g;
    }
    Ok(CISystem {
        psi,
        gamma,
        sigma_vec,
        qos,
        rotated,
        theta: block.theta,
    })
}

/// `γ - Ψ ŝ`; every entry is nonnegative exactly when `ŝ` meets the CI
/// constraints.
pub fn ci_margins(s_hat: &RVector, sys: &CISystem) -> RVector {
    &sys.gamma - &sys.psi * s_hat
}

/// Smallest CI margin, `+∞` for a system without rows.
pub fn min_margin(s_hat: &RVector, sys: &CISystem) -> f64 {
    ci_margins(s_hat, sys).iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyMode {
    #[default]
    Total,
    PerAntenna,
}

/// Quadratic transmit-energy constraints in the real `[Re; Im]` variables.
#[derive(Debug, Clone)]
pub struct EnergyForm {
    /// `Υ = I_2 ⊗ I_{N_t} ⊗ Φ`.
    pub total: RMatrix,
    /// Total budget `E` (linear).
    pub budget: f64,
    /// Per-antenna budgets `E_n`; present in per-antenna mode.
    pub per_antenna_budgets: Option<Vec<f64>>,
    pub mode: EnergyMode,
    /// `Φ`, `L x L`.
    pub gram: RMatrix,
    pub n_tx: usize,
}

impl EnergyForm {
    pub fn block_len(&self) -> usize {
        self.gram.nrows()
    }

    /// `ŝᵀ Υ ŝ`.
    pub fn energy(&self, s_hat: &RVector) -> f64 {
        self.antenna_energies(s_hat).iter().sum()
    }

    /// `s_nᴴ Φ s_n` for every antenna.
    pub fn antenna_energies(&self, s_hat: &RVector) -> Vec<f64> {
        let l = self.block_len();
        let half = self.n_tx * l;
        (0..self.n_tx)
            .map(|n| {
                let re = s_hat.rows(n * l, l);
                let im = s_hat.rows(half + n * l, l);
                (re.transpose() * &self.gram * re)[(0, 0)] + (im.transpose() * &self.gram * im)[(0, 0)]
            })
            .collect()
    }

    /// `Υ_n`, the part of `Υ` acting on antenna `n`.
    pub fn antenna_matrix(&self, n: usize) -> RMatrix {
        let l = self.block_len();
        let half = self.n_tx * l;
        let mut m = RMatrix::zeros(2 * half, 2 * half);
        m.view_mut((n * l, n * l), (l, l)).copy_from(&self.gram);
        m.view_mut((half + n * l, half + n * l), (l, l)).copy_from(&self.gram);
        m
    }

    /// Quadratic constraints `ŝᵀ M_j ŝ ≤ e_j` of the active mode.
    pub fn constraints(&self) -> Vec<(RMatrix, f64)> {
        match (&self.mode, &self.per_antenna_budgets) {
            (EnergyMode::PerAntenna, Some(budgets)) => (0..self.n_tx)
                .map(|n| (self.antenna_matrix(n), budgets[n]))
                .collect(),
            _ => alloc::vec![(self.total.clone(), self.budget)],
        }
    }

    /// Whether `ŝ` meets the active energy constraints up to `rel_tol`.
    pub fn satisfied(&self, s_hat: &RVector, rel_tol: f64) -> bool {
        match (&self.mode, &self.per_antenna_budgets) {
            (EnergyMode::PerAntenna, Some(budgets)) => self
                .antenna_energies(s_hat)
                .iter()
                .zip(budgets)
                .all(|(e, b)| *e <= b * (1.0 + rel_tol)),
            _ => self.energy(s_hat) <= self.budget * (1.0 + rel_tol),
        }
    }
}

/// Energy form for a budget given in dBm; per-antenna budgets default to
/// `E / N_t`.
pub fn build_energy_form(tables: &PulseTables, dims: &Dimensions, budget_dbm: f64, mode: EnergyMode) -> Result<EnergyForm> {
    if !budget_dbm.is_finite() {
        return Err(invalid("energy_dbm", "must be finite"));
    }
    check_shape("Φ", (dims.block_len, dims.block_len), tables.gram.shape())?;
    let budget = db_to_linear(budget_dbm);
    let total = block_diag_repeat(&tables.gram, 2 * dims.n_tx);
    let per_antenna_budgets = match mode {
        EnergyMode::Total => None,
        EnergyMode::PerAntenna => Some(alloc::vec![budget / dims.n_tx as f64; dims.n_tx]),
    };
    Ok(EnergyForm {
        total,
        budget,
        per_antenna_budgets,
        mode,
        gram: tables.gram.clone(),
        n_tx: dims.n_tx,
    })
}
