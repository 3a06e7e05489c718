//! Outer design loops: the minorization method and successive convex
//! approximation, each solving a convex QCQP per iteration.

use alloc::vec::Vec;

use rand::Rng;

use super::bps::{bps, min_energy, BpsOptions};
use super::ipm::{solve_ipm, IpmOptions};
use super::line_search::line_search;
use super::{QcqpProblem, QpProblem, SolveReport, Status};
use crate::ci::{min_margin, CISystem, EnergyForm, EnergyMode};
use crate::error::{check_shape, invalid, Error, Result};
use crate::linalg::{complex_gaussian_matrix, complex_unstack, frob2, real_stack, unvec_rows, vec_rows, CMatrix, RVector};
use crate::sensing::{minorizer, objective_of, sca_gradient, GradientForm, MmseValue, SensingLift};
use crate::Stopwatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    Minorization,
    Sca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Subsolver {
    #[default]
    Bps,
    Ipm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    pub algorithm: Algorithm,
    pub subsolver: Subsolver,
    /// Stop once `‖S_k - S_{k-1}‖² ≤ tol · ‖S_0‖²`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative objective increase tolerated before a step is rejected.
    pub monotone_tol: f64,
    pub line_search_tol: f64,
    pub gradient: GradientForm,
    pub bps: BpsOptions,
    pub ipm: IpmOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Minorization,
            subsolver: Subsolver::Bps,
            tol: 1e-6,
            max_iter: 100,
            monotone_tol: 1e-9,
            line_search_tol: 1e-8,
            gradient: GradientForm::Regularized,
            bps: BpsOptions::default(),
            ipm: IpmOptions::default(),
        }
    }
}

/// Everything a design run needs besides the starting point.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub lift: SensingLift,
    pub ci: CISystem,
    pub energy: EnergyForm,
    /// Radar receiver noise power `σ_R²`.
    pub sigma_r2: f64,
    /// Target response power `σ_H²`.
    pub sigma_h2: f64,
}

/// State after one outer iteration; iteration 0 is the initial feasible point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub f: f64,
    pub mmse: f64,
    pub energy: f64,
    pub min_margin: f64,
    /// Bracket of the penalty weight at the end of the BPS run.
    pub rho_lo: Option<f64>,
    pub rho_hi: Option<f64>,
    /// Step size of the SCA update.
    pub step: Option<f64>,
    /// Seconds since the start of the solve.
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Transmit block `S`, `N_t x L`.
    pub s: CMatrix,
    /// `[Re vec(Sᵀ); Im vec(Sᵀ)]`.
    pub s_hat: RVector,
    pub f: f64,
    pub mmse: f64,
    pub energy: f64,
    pub min_margin: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
    pub wall_time: f64,
    /// Smallest total energy meeting the CI constraints; the budget is
    /// strictly feasible when this is below `E`.
    pub min_energy: Option<f64>,
}

impl Solution {
    pub fn slater_holds(&self, budget: f64) -> Option<bool> {
        self.min_energy.map(|e| e < budget)
    }
}

impl DesignProblem {
    pub fn validate(&self) -> Result<()> {
        let d = &self.lift.dims;
        let n = 2 * d.n_tx * d.block_len;
        check_shape("CI matrix", (self.ci.rows(), n), self.ci.psi.shape())?;
        check_shape("energy matrix", (n, n), self.energy.total.shape())?;
        if !(self.sigma_r2 > 0.0) {
            return Err(invalid("sigma_r2", "must be positive"));
        }
        if !(self.sigma_h2 > 0.0) {
            return Err(invalid("sigma_h2", "must be positive"));
        }
        Ok(())
    }

    pub fn n_vars(&self) -> usize {
        2 * self.lift.dims.n_tx * self.lift.dims.block_len
    }

    pub fn to_real(&self, s: &CMatrix) -> RVector {
        real_stack(&vec_rows(s))
    }

    pub fn to_block(&self, s_hat: &RVector) -> CMatrix {
        let d = &self.lift.dims;
        unvec_rows(&complex_unstack(s_hat), d.n_tx, d.block_len)
    }

    pub fn objective(&self, s: &CMatrix) -> Result<MmseValue> {
        objective_of(s, &self.lift, self.sigma_r2, self.sigma_h2, self.lift.dims.n_rx)
    }

    pub fn solve(&self, init: &CMatrix, opts: &DesignOptions) -> Result<Solution> {
        match opts.algorithm {
            Algorithm::Minorization => minorization_solve(self, init, opts),
            Algorithm::Sca => sca_solve(self, init, opts),
        }
    }

    fn record(&self, iteration: usize, s: &CMatrix, report: Option<&SolveReport>, step: Option<f64>, t: f64) -> Result<IterationRecord> {
        let v = self.objective(s)?;
        let s_hat = self.to_real(s);
        let (rho_lo, rho_hi) = report.map_or((None, None), rho_bracket);
        Ok(IterationRecord {
            iteration,
            f: v.f,
            mmse: v.mmse,
            energy: self.energy.energy(&s_hat),
            min_margin: min_margin(&s_hat, &self.ci),
            rho_lo,
            rho_hi,
            step,
            wall_time: t,
        })
    }

    /// Minimize `ŝᵀAŝ + 2ŝᵀa` over the CI polytope and the energy set.
    fn subproblem(&self, base: QpProblem, opts: &DesignOptions) -> Result<SolveReport> {
        let per_antenna = self.energy.mode == EnergyMode::PerAntenna;
        let report = if opts.subsolver == Subsolver::Ipm || per_antenna {
            solve_ipm(&base, &self.energy.constraints(), &opts.ipm)?
        } else {
            let q = QcqpProblem {
                base,
                quad_mat: self.energy.total.clone(),
                quad_budget: self.energy.budget,
            };
            bps(&q, &opts.bps)?
        };
        if report.status == Status::Infeasible {
            return Err(Error::Infeasible {
                min_energy: None,
                budget: Some(self.energy.budget),
            });
        }
        Ok(report)
    }

    fn minorizer_step(&self, s: &CMatrix, opts: &DesignOptions) -> Result<SolveReport> {
        let xbar = self.lift.lift(s)?;
        let params = minorizer(&xbar, &self.lift, self.sigma_r2, self.sigma_h2)?;
        let (hessian, linear) = params.real_form();
        self.subproblem(self.base(hessian, linear), opts)
    }

    fn sca_step(&self, s: &CMatrix, opts: &DesignOptions) -> Result<SolveReport> {
        let xbar = self.lift.lift(s)?;
        let g = sca_gradient(&xbar, &self.lift, self.sigma_r2, self.sigma_h2, opts.gradient)?;
        let n = self.n_vars();
        self.subproblem(self.base(crate::linalg::RMatrix::zeros(n, n), g.real_linear()), opts)
    }

    fn base(&self, hessian: crate::linalg::RMatrix, linear: RVector) -> QpProblem {
        QpProblem {
            hessian,
            linear,
            ineq_mat: self.ci.psi.clone(),
            ineq_rhs: self.ci.gamma.clone(),
        }
    }

    fn min_total_energy(&self) -> Option<f64> {
        min_energy(&self.energy.total, &self.ci.psi, &self.ci.gamma).ok().map(|(e, _)| e)
    }

    fn infeasible(&self, e: Error) -> Error {
        match e {
            Error::Infeasible { min_energy: None, .. } => Error::Infeasible {
                min_energy: self.min_total_energy(),
                budget: Some(self.energy.budget),
            },
            other => other,
        }
    }
}

fn rho_bracket(r: &SolveReport) -> (Option<f64>, Option<f64>) {
    let Some(hi) = r.penalty else { return (None, None) };
    if r.probes.is_empty() {
        return (None, Some(hi));
    }
    let lo = r
        .probes
        .iter()
        .map(|p| p.rho)
        .filter(|&rho| rho < hi)
        .fold(0.0, f64::max);
    (Some(lo), Some(hi))
}

/// Random `S_{-1}` with i.i.d. `CN(0, 1)` entries, scaled so every active
/// energy constraint is met with equality.
pub fn random_initial<R: Rng + ?Sized>(rng: &mut R, problem: &DesignProblem) -> CMatrix {
    let d = &problem.lift.dims;
    let mut s = complex_gaussian_matrix(rng, d.n_tx, d.block_len, 1.0);
    let e = &problem.energy;
    match (&e.mode, &e.per_antenna_budgets) {
        (EnergyMode::PerAntenna, Some(budgets)) => {
            let energies = e.antenna_energies(&problem.to_real(&s));
            for (n, (&en, &b)) in energies.iter().zip(budgets).enumerate() {
                if en > 0.0 {
                    let k = libm::sqrt(b / en);
                    for z in s.row_mut(n).iter_mut() {
                        *z *= k;
                    }
                }
            }
        }
        _ => {
            let en = e.energy(&problem.to_real(&s));
            if en > 0.0 {
                s *= num_complex::Complex64::new(libm::sqrt(e.budget / en), 0.0);
            }
        }
    }
    s
}

struct Loop<'a> {
    problem: &'a DesignProblem,
    clock: Stopwatch,
    trace: Vec<IterationRecord>,
    min_energy: Option<f64>,
}

impl<'a> Loop<'a> {
    fn new(problem: &'a DesignProblem, init: &CMatrix) -> Result<Self> {
        problem.validate()?;
        let d = &problem.lift.dims;
        check_shape("initial block", (d.n_tx, d.block_len), init.shape())?;
        Ok(Self {
            problem,
            clock: Stopwatch::start(),
            trace: Vec::new(),
            min_energy: problem.min_total_energy(),
        })
    }

    fn push(&mut self, s: &CMatrix, report: Option<&SolveReport>, step: Option<f64>) -> Result<()> {
        let it = self.trace.len();
        let rec = self.problem.record(it, s, report, step, self.clock.elapsed())?;
        self.trace.push(rec);
        Ok(())
    }

    fn finish(self, s: CMatrix, converged: bool) -> Result<Solution> {
        let v = self.problem.objective(&s)?;
        let s_hat = self.problem.to_real(&s);
        Ok(Solution {
            energy: self.problem.energy.energy(&s_hat),
            min_margin: min_margin(&s_hat, &self.problem.ci),
            f: v.f,
            mmse: v.mmse,
            iterations: self.trace.len().saturating_sub(1),
            converged,
            wall_time: self.clock.elapsed(),
            min_energy: self.min_energy,
            trace: self.trace,
            s,
            s_hat,
        })
    }
}

/// Minorization method: maximize the quadratic minorizer of `f_m` at the
/// current point until the iterates settle.
pub fn minorization_solve(problem: &DesignProblem, init: &CMatrix, opts: &DesignOptions) -> Result<Solution> {
    let mut lp = Loop::new(problem, init)?;
    let first = problem.minorizer_step(init, opts).map_err(|e| problem.infeasible(e))?;
    let mut s = problem.to_block(&first.solution);
    lp.push(&s, Some(&first), None)?;
    let scale = frob2(&s).max(f64::MIN_POSITIVE);
    let mut f_prev = lp.trace[0].f;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let report = problem.minorizer_step(&s, opts).map_err(|e| problem.infeasible(e))?;
        let next = problem.to_block(&report.solution);
        let f_next = problem.objective(&next)?.f;
        if f_next > f_prev * (1.0 + opts.monotone_tol) {
            return Err(Error::NonMonotone {
                iteration: lp.trace.len(),
                previous: f_prev,
                current: f_next,
            });
        }
        if f_next > f_prev {
            converged = true;
            break;
        }
        let moved = frob2(&(&next - &s));
        s = next;
        f_prev = f_next;
        lp.push(&s, Some(&report), None)?;
        if moved <= opts.tol * scale {
            converged = true;
            break;
        }
    }
    lp.finish(s, converged)
}

/// Successive convex approximation: minimize the linearized objective over
/// the feasible set, then move toward that point by exact line search.
pub fn sca_solve(problem: &DesignProblem, init: &CMatrix, opts: &DesignOptions) -> Result<Solution> {
    let mut lp = Loop::new(problem, init)?;
    let first = problem.sca_step(init, opts).map_err(|e| problem.infeasible(e))?;
    let mut s = problem.to_block(&first.solution);
    lp.push(&s, Some(&first), Some(1.0))?;
    let scale = frob2(&s).max(f64::MIN_POSITIVE);
    let mut f_prev = lp.trace[0].f;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let report = problem.sca_step(&s, opts).map_err(|e| problem.infeasible(e))?;
        let target = problem.to_block(&report.solution);
        let dir = &target - &s;
        let along = |t: f64| {
            let x = &s + &dir * num_complex::Complex64::new(t, 0.0);
            problem.objective(&x).map_or(f64::INFINITY, |v| v.f)
        };
        let t = line_search(along, opts.line_search_tol);
        let next = &s + &dir * num_complex::Complex64::new(t, 0.0);
        let f_next = problem.objective(&next)?.f;
        if f_next > f_prev * (1.0 + opts.monotone_tol) {
            return Err(Error::NonMonotone {
                iteration: lp.trace.len(),
                previous: f_prev,
                current: f_next,
            });
        }
        let moved = frob2(&(&next - &s));
        if f_next > f_prev {
            converged = true;
            break;
        }
        s = next;
        f_prev = f_next;
        lp.push(&s, Some(&report), Some(t))?;
        if moved <= opts.tol * scale {
            converged = true;
            break;
        }
    }
    lp.finish(s, converged)
}
