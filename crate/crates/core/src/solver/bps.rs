//! Binary penalty search: bisection on the weight `ρ` of the penalty
//! `ρ xᵀΥx`, each step solving a linearly constrained QP.

use alloc::vec::Vec;

use super::qp::solve_qp;
use super::{PenaltyProbe, QcqpProblem, QpProblem, SolveReport, Status};
use crate::error::{Error, Result};
use crate::linalg::{RMatrix, RVector};
use crate::Stopwatch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpsOptions {
    /// Bisection stops once `ρ_r - ρ_l ≤ rho_tol · ρ_r`.
    pub rho_tol: f64,
    /// First right end of the bracket.
    pub initial_rho: f64,
    /// Doublings (and halvings) allowed while bracketing.
    pub max_doublings: u32,
    /// Ridge added to every penalty Hessian.
    pub ridge: f64,
}

impl Default for BpsOptions {
    fn default() -> Self {
        Self {
            rho_tol: 1e-10,
            initial_rho: 1.0,
            max_doublings: 60,
            ridge: 0.0,
        }
    }
}

/// Smallest energy `xᵀΥx` over the polytope `Ψx ≤ γ`, with its minimizer.
pub fn min_energy(quad_mat: &RMatrix, ineq_mat: &RMatrix, ineq_rhs: &RVector) -> Result<(f64, RVector)> {
    let n = quad_mat.nrows();
    let p = QpProblem {
        hessian: quad_mat.clone(),
        linear: RVector::zeros(n),
        ineq_mat: ineq_mat.clone(),
        ineq_rhs: ineq_rhs.clone(),
    };
    let r = solve_qp(&p, 0.0)?;
    match r.status {
        Status::Optimal => Ok((r.objective, r.solution)),
        _ => Err(Error::Infeasible {
            min_energy: None,
            budget: None,
        }),
    }
}

struct Search<'a> {
    q: &'a QcqpProblem,
    ridge: f64,
    probes: Vec<PenaltyProbe>,
    iterations: usize,
}

impl Search<'_> {
    fn solve_at(&mut self, rho: f64) -> Result<SolveReport> {
        let base = &self.q.base;
        let p = QpProblem {
            hessian: &base.hessian + &self.q.quad_mat * rho,
            linear: base.linear.clone(),
            ineq_mat: base.ineq_mat.clone(),
            ineq_rhs: base.ineq_rhs.clone(),
        };
        let mut r = solve_qp(&p, self.ridge)?;
        self.iterations += r.iterations;
        if r.status == Status::Optimal {
            let objective = base.objective(&r.solution);
            let penalty = self.q.energy(&r.solution);
            self.probes.push(PenaltyProbe {
                rho,
                objective,
                penalty,
            });
            r.objective = objective;
        }
        Ok(r)
    }

    fn meets_budget(&self, r: &SolveReport) -> bool {
        self.q.energy(&r.solution) <= self.q.quad_budget
    }

    fn finish(self, mut r: SolveReport, rho: f64, wall_time: f64) -> SolveReport {
        r.penalty = Some(rho);
        r.probes = self.probes;
        r.iterations = self.iterations;
        r.wall_time = wall_time;
        r
    }
}

/// Solve `min xᵀAx + 2xᵀa s.t. Ψx ≤ γ, xᵀΥx ≤ E` through the penalty
/// problems `min xᵀ(A + ρΥ)x + 2xᵀa s.t. Ψx ≤ γ`.
pub fn bps(q: &QcqpProblem, opts: &BpsOptions) -> Result<SolveReport> {
    q.validate()?;
    let clock = Stopwatch::start();
    let mut s = Search {
        q,
        ridge: opts.ridge,
        probes: Vec::new(),
        iterations: 0,
    };
    let budget = q.quad_budget;

    if q.base.hessian.trace() > 0.0 {
        match s.solve_at(0.0) {
            Ok(r) if r.status != Status::Optimal => return Ok(s.finish(r, 0.0, clock.elapsed())),
            Ok(r) if s.meets_budget(&r) => return Ok(s.finish(r, 0.0, clock.elapsed())),
            Ok(_) | Err(Error::IllConditioned { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    let mut rho_r = opts.initial_rho.max(f64::MIN_POSITIVE);
    let mut best = s.solve_at(rho_r)?;
    if best.status != Status::Optimal {
        return Ok(s.finish(best, rho_r, clock.elapsed()));
    }
    let mut rho_l;
    if s.meets_budget(&best) {
        rho_l = 0.0;
        for _ in 0..opts.max_doublings {
            let trial_rho = 0.5 * rho_r;
            let trial = s.solve_at(trial_rho)?;
            if s.meets_budget(&trial) {
                rho_r = trial_rho;
                best = trial;
            } else {
                rho_l = trial_rho;
                break;
            }
        }
    } else {
        rho_l = rho_r;
        let mut found = false;
        for _ in 0..opts.max_doublings {
            rho_r *= 2.0;
            let trial = s.solve_at(rho_r)?;
            if s.meets_budget(&trial) {
                best = trial;
                found = true;
                break;
            }
            rho_l = rho_r;
            best = trial;
        }
        if !found {
            let (e_min, _) = min_energy(&q.quad_mat, &q.base.ineq_mat, &q.base.ineq_rhs).map_err(|_| {
                Error::Infeasible {
                    min_energy: None,
                    budget: Some(budget),
                }
            })?;
            if e_min > budget {
                return Err(Error::Infeasible {
                    min_energy: Some(e_min),
                    budget: Some(budget),
                });
            }
            best.status = Status::IterationLimit;
            return Ok(s.finish(best, rho_r, clock.elapsed()));
        }
    }

    let mut steps = 0;
    while rho_r - rho_l > opts.rho_tol * rho_r && steps < 400 {
        steps += 1;
        let mid = 0.5 * (rho_l + rho_r);
        if mid <= rho_l || mid >= rho_r {
            break;
        }
        let trial = s.solve_at(mid)?;
        if s.meets_budget(&trial) {
            rho_r = mid;
            best = trial;
        } else {
            rho_l = mid;
        }
    }
    Ok(s.finish(best, rho_r, clock.elapsed()))
}
