//! Quadratic-program engines and the outer design loops.

mod bps;
mod design;
mod ipm;
mod line_search;
mod qp;

pub use bps::{bps, min_energy, BpsOptions};
pub use design::{
    minorization_solve, random_initial, sca_solve, Algorithm, DesignOptions, DesignProblem,
    IterationRecord, Solution, Subsolver,
};
pub use ipm::{solve_ipm, IpmOptions};
pub use line_search::line_search;
pub use qp::solve_qp;

use alloc::vec::Vec;

use crate::error::{check_shape, invalid, Result};
use crate::linalg::{asymmetry, RMatrix, RVector};

/// `min xᵀAx + 2xᵀa s.t. Ψx ≤ γ`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: RMatrix,
    pub linear: RVector,
    pub ineq_mat: RMatrix,
    pub ineq_rhs: RVector,
}

impl QpProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.linear.len();
        check_shape("QP Hessian", (n, n), self.hessian.shape())?;
        check_shape("QP inequality matrix", (self.ineq_rhs.len(), n), self.ineq_mat.shape())?;
        let asym = asymmetry(&self.hessian);
        if asym > 1e-12 * self.hessian.amax().max(1.0) {
            return Err(crate::error::Error::NotSymmetric { asymmetry: asym });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// `xᵀAx + 2xᵀa`.
    pub fn objective(&self, x: &RVector) -> f64 {
        (x.transpose() * &self.hessian * x)[(0, 0)] + 2.0 * x.dot(&self.linear)
    }

    /// Largest inequality violation `max(Ψx - γ)`, or `-∞` without rows.
    pub fn max_violation(&self, x: &RVector) -> f64 {
        (&self.ineq_mat * x - &self.ineq_rhs)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Scaled stationarity residual `‖2(A + ridge I)x + 2a + Ψᵀλ‖∞`.
    pub fn kkt_residual(&self, x: &RVector, multipliers: &RVector, ridge: f64) -> f64 {
        let grad = (&self.hessian * x + x * ridge + &self.linear) * 2.0 + self.ineq_mat.transpose() * multipliers;
        let scale = 1.0 + 2.0 * self.linear.amax() + 2.0 * (&self.hessian * x).amax();
        grad.amax() / scale
    }
}

/// `min xᵀAx + 2xᵀa s.t. Ψx ≤ γ, xᵀΥx ≤ E`.
#[derive(Debug, Clone)]
pub struct QcqpProblem {
    pub base: QpProblem,
    pub quad_mat: RMatrix,
    pub quad_budget: f64,
}

impl QcqpProblem {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let n = self.base.dim();
        check_shape("energy matrix", (n, n), self.quad_mat.shape())?;
        if !(self.quad_budget > 0.0) {
            return Err(invalid("quad_budget", "must be positive"));
        }
        Ok(())
    }

    pub fn energy(&self, x: &RVector) -> f64 {
        (x.transpose() * &self.quad_mat * x)[(0, 0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    IterationLimit,
}

/// One penalty subproblem solved by the binary penalty search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyProbe {
    pub rho: f64,
    /// Original objective `xᵀAx + 2xᵀa` at the subproblem solution.
    pub objective: f64,
    /// Energy `xᵀΥx` at the subproblem solution.
    pub penalty: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: RVector,
    pub objective: f64,
    /// Indices of inequality rows active at the solution, ascending.
    pub active_set: Vec<usize>,
    /// Multipliers of `Ψx ≤ γ` for the `xᵀAx + 2xᵀa` objective.
    pub multipliers: RVector,
    pub iterations: usize,
    pub wall_time: f64,
    /// Final penalty weight, for the binary penalty search.
    pub penalty: Option<f64>,
    pub status: Status,
    pub kkt_residual: f64,
    /// Every penalty subproblem in the order it was solved.
    pub probes: Vec<PenaltyProbe>,
}
