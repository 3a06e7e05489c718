//! Log-barrier interior-point method for convex QCQPs, used as a reference
//! solver and as the engine for per-antenna energy constraints.

use alloc::vec::Vec;

use super::bps::min_energy;
use super::qp::factor;
use super::{QpProblem, SolveReport, Status};
use crate::error::{invalid, Error, Result};
use crate::linalg::{RMatrix, RVector};
use crate::Stopwatch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions {
    /// Stop once the barrier gap `m / t` is below `tol · max(1, |f|)`.
    pub tol: f64,
    /// Factor by which the barrier weight grows between centering steps.
    pub mu: f64,
    /// Total Newton steps allowed.
    pub max_newton: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            mu: 20.0,
            max_newton: 2000,
        }
    }
}

/// `zᵀUz + 2vᵀz ≤ w`.
struct Quad {
    u: RMatrix,
    v: RVector,
    w: f64,
}

impl Quad {
    fn slack(&self, z: &RVector) -> f64 {
        self.w - (z.transpose() * &self.u * z)[(0, 0)] - 2.0 * self.v.dot(z)
    }
    fn grad(&self, z: &RVector) -> RVector {
        (&self.u * z + &self.v) * 2.0
    }
}

/// `min zᵀPz + 2qᵀz s.t. Cz ≤ d` plus quadratic constraints.
struct Barrier<'a> {
    p: &'a RMatrix,
    q: &'a RVector,
    c: &'a RMatrix,
    d: &'a RVector,
    quads: Vec<Quad>,
}

struct Centered {
    z: RVector,
    t: f64,
    newton: usize,
}

impl Barrier<'_> {
    fn n_cons(&self) -> usize {
        self.c.nrows() + self.quads.len()
    }

    fn f0(&self, z: &RVector) -> f64 {
        (z.transpose() * self.p * z)[(0, 0)] + 2.0 * self.q.dot(z)
    }

    fn slacks(&self, z: &RVector) -> Option<(RVector, Vec<f64>)> {
        let lin = self.d - self.c * z;
        if lin.iter().any(|&s| !(s > 0.0)) {
            return None;
        }
        let quad: Vec<f64> = self.quads.iter().map(|q| q.slack(z)).collect();
        if quad.iter().any(|&s| !(s > 0.0)) {
            return None;
        }
        Some((lin, quad))
    }

    fn phi(&self, z: &RVector, t: f64) -> Option<f64> {
        let (lin, quad) = self.slacks(z)?;
        let logs: f64 = lin.iter().map(|s| libm::log(*s)).sum::<f64>() + quad.iter().map(|s| libm::log(*s)).sum::<f64>();
        Some(t * self.f0(z) - logs)
    }

    /// Newton centering from `z` for barrier weight `t`. `stop` is checked
    /// after every step and ends the centering early when it returns true.
    fn center(&self, mut z: RVector, t: f64, budget: &mut usize, stop: &dyn Fn(&RVector) -> bool) -> Result<RVector> {
        loop {
            if *budget == 0 {
                return Ok(z);
            }
            *budget -= 1;
            let (lin, quad) = self.slacks(&z).ok_or_else(|| invalid("ipm", "iterate left the interior"))?;
            let inv: RVector = lin.map(|s| 1.0 / s);
            let mut grad = (self.p * &z + self.q) * (2.0 * t) + self.c.transpose() * &inv;
            let scaled = RMatrix::from_fn(self.c.nrows(), self.c.ncols(), |i, j| self.c[(i, j)] * inv[i]);
            let mut hess = self.p * (2.0 * t) + scaled.transpose() * &scaled;
            for (qc, &s) in self.quads.iter().zip(&quad) {
                let g = qc.grad(&z);
                grad += &g / s;
                hess += &qc.u * (2.0 / s) + &g * g.transpose() / (s * s);
            }
            let hess = (&hess + hess.transpose()) * 0.5;
            let step = match nalgebra::Cholesky::new(hess.clone()) {
                Some(chol) => -chol.solve(&grad),
                None => -factor(&hess, 0.0)?.chol.solve(&grad),
            };
            let decrement = -grad.dot(&step);
            if decrement <= 1e-12 * (1.0 + t.abs()) || !decrement.is_finite() {
                return Ok(z);
            }
            let here = self.phi(&z, t).unwrap_or(f64::INFINITY);
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let cand = &z + &step * alpha;
                if let Some(v) = self.phi(&cand, t) {
                    if v <= here - 0.25 * alpha * decrement {
                        z = cand;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved || stop(&z) || decrement < 1e-10 {
                return Ok(z);
            }
        }
    }

    fn solve(&self, z0: RVector, opts: &IpmOptions, stop: &dyn Fn(&RVector) -> bool) -> Result<Centered> {
        let m = self.n_cons().max(1) as f64;
        let mut t = (m / self.f0(&z0).abs().max(1.0)).max(1e-6);
        let mut z = z0;
        let mut budget = opts.max_newton;
        loop {
            z = self.center(z, t, &mut budget, stop)?;
            if stop(&z) || budget == 0 {
                break;
            }
            if m / t <= opts.tol * self.f0(&z).abs().max(1.0) {
                break;
            }
            t *= opts.mu;
        }
        Ok(Centered {
            z,
            t,
            newton: opts.max_newton - budget,
        })
    }
}

/// Strictly feasible start for `Ψx ≤ γ, xᵀM_jx ≤ e_j`.
fn strict_start(base: &QpProblem, energy: &[(RMatrix, f64)], opts: &IpmOptions) -> Result<RVector> {
    let n = base.dim();
    let total: RMatrix = energy
        .iter()
        .fold(RMatrix::zeros(n, n), |acc, (m, _)| acc + m);
    let budget: f64 = energy.iter().map(|(_, e)| e).sum();
    if energy.iter().any(|(_, e)| !(*e > 0.0)) {
        return Err(invalid("energy budget", "must be positive"));
    }
    let gmax = base.ineq_rhs.amax();
    let all_negative = base.ineq_rhs.iter().all(|&g| g < 0.0);
    let strict_rhs = if all_negative {
        base.ineq_rhs.clone()
    } else {
        base.ineq_rhs.map(|g| g - 1e-6 * (1.0 + gmax))
    };
    let (e_min, x_e) = if base.ineq_mat.nrows() == 0 {
        (0.0, RVector::zeros(n))
    } else {
        min_energy(&total, &base.ineq_mat, &strict_rhs).map_err(|_| Error::Infeasible {
            min_energy: None,
            budget: Some(budget),
        })?
    };
    if e_min >= budget {
        return Err(Error::Infeasible {
            min_energy: Some(e_min),
            budget: Some(budget),
        });
    }
    let scale = if base.ineq_mat.nrows() == 0 || !all_negative {
        1.0
    } else if e_min > 0.0 {
        libm::pow(budget / e_min, 0.25).min(1.05)
    } else {
        1.05
    };
    let x0 = x_e * scale;
    let ratios: Vec<f64> = energy
        .iter()
        .map(|(m, e)| (x0.transpose() * m * &x0)[(0, 0)] / e)
        .collect();
    if ratios.iter().all(|&r| r < 1.0) && base.max_violation(&x0) < 0.0 {
        return Ok(x0);
    }

    // Epigraph phase one: minimize s with xᵀ(M_j/e_j)x - s ≤ 1, s ≥ -1.
    let mut c = RMatrix::zeros(base.ineq_mat.nrows() + 1, n + 1);
    c.view_mut((0, 0), (base.ineq_mat.nrows(), n)).copy_from(&base.ineq_mat);
    c[(base.ineq_mat.nrows(), n)] = -1.0;
    let mut d = RVector::zeros(base.ineq_rhs.len() + 1);
    d.rows_mut(0, base.ineq_rhs.len()).copy_from(&base.ineq_rhs);
    d[base.ineq_rhs.len()] = 1.0;
    let quads = energy
        .iter()
        .map(|(m, e)| {
            let mut u = RMatrix::zeros(n + 1, n + 1);
            u.view_mut((0, 0), (n, n)).copy_from(&(m / *e));
            let mut v = RVector::zeros(n + 1);
            v[n] = -0.5;
            Quad { u, v, w: 1.0 }
        })
        .collect();
    let p = RMatrix::zeros(n + 1, n + 1);
    let mut q = RVector::zeros(n + 1);
    q[n] = 0.5;
    let phase = Barrier {
        p: &p,
        q: &q,
        c: &c,
        d: &d,
        quads,
    };
    let s0 = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z0 = RVector::zeros(n + 1);
    z0.rows_mut(0, n).copy_from(&x0);
    z0[n] = s0.max(0.0) + 1.0;
    let done = |z: &RVector| z[n] < -1e-3;
    let out = phase.solve(z0, opts, &done)?;
    if out.z[n] < 0.0 {
        Ok(out.z.rows(0, n).into_owned())
    } else {
        Err(Error::Infeasible {
            min_energy: Some(e_min),
            budget: Some(budget),
        })
    }
}

/// Solve `min xᵀAx + 2xᵀa s.t. Ψx ≤ γ, xᵀM_jx ≤ e_j` for every `(M_j, e_j)`
/// in `energy`.
pub fn solve_ipm(base: &QpProblem, energy: &[(RMatrix, f64)], opts: &IpmOptions) -> Result<SolveReport> {
    base.validate()?;
    let clock = Stopwatch::start();
    let n = base.dim();
    let x0 = strict_start(base, energy, opts)?;
    let barrier = Barrier {
        p: &base.hessian,
        q: &base.linear,
        c: &base.ineq_mat,
        d: &base.ineq_rhs,
        quads: energy
            .iter()
            .map(|(m, e)| Quad {
                u: m.clone(),
                v: RVector::zeros(n),
                w: *e,
            })
            .collect(),
    };
    let out = barrier.solve(x0, opts, &|_| false)?;
    let (lin, quad) = barrier
        .slacks(&out.z)
        .ok_or_else(|| invalid("ipm", "final iterate is not interior"))?;
    let multipliers = lin.map(|s| 1.0 / (out.t * s));
    let energy_mult: Vec<f64> = quad.iter().map(|s| 1.0 / (out.t * s)).collect();
    let mut stationarity = (&base.hessian * &out.z + &base.linear) * 2.0 + base.ineq_mat.transpose() * &multipliers;
    for ((m, _), mu) in energy.iter().zip(&energy_mult) {
        stationarity += m * &out.z * (2.0 * mu);
    }
    let scale = 1.0 + 2.0 * base.linear.amax() + 2.0 * (&base.hessian * &out.z).amax();
    let mut active_set: Vec<usize> = (0..lin.len())
        .filter(|&i| lin[i] <= 1e-7 * (1.0 + base.ineq_rhs[i].abs()))
        .collect();
    active_set.sort_unstable();
    let status = if out.newton >= opts.max_newton {
        Status::IterationLimit
    } else {
        Status::Optimal
    };
    Ok(SolveReport {
        objective: base.objective(&out.z),
        solution: out.z,
        active_set,
        multipliers,
        iterations: out.newton,
        wall_time: clock.elapsed(),
        penalty: energy_mult.first().copied(),
        status,
        kkt_residual: stationarity.amax() / scale,
        probes: Vec::new(),
    })
}
