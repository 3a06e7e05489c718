//! Dual active-set solver for strictly convex QPs with linear inequalities
//! (Goldfarb-Idnani), working on `min ½xᵀGx + gᵀx s.t. Ψx ≤ γ`.

use alloc::vec::Vec;

use nalgebra::Cholesky;

use super::{QpProblem, SolveReport, Status};
use crate::error::{Error, Result};
use crate::linalg::{RMatrix, RVector};
use crate::Stopwatch;

/// Relative size of the ridge tried when the Hessian is singular.
const RIDGE_START: f64 = 1e-10;
const RIDGE_MAX: f64 = 1e-4;

pub(crate) struct Factored {
    pub chol: Cholesky<f64, nalgebra::Dyn>,
    /// Total ridge that was added to the Hessian.
    pub ridge: f64,
}

fn pivots_ok(chol: &Cholesky<f64, nalgebra::Dyn>) -> bool {
    let l = chol.l_dirty();
    let n = l.nrows();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..n {
        let v = l[(i, i)] * l[(i, i)];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    n == 0 || (lo.is_finite() && hi > 0.0 && lo > 1e-13 * hi)
}

/// Cholesky factor of `hessian + ridge I`, adding a growing ridge relative to
/// `tr / n` until the pivots are acceptable.
pub(crate) fn factor(hessian: &RMatrix, ridge: f64) -> Result<Factored> {
    let n = hessian.nrows();
    let scale = if n == 0 { 1.0 } else { (hessian.trace() / n as f64).abs() };
    let mut extra = 0.0;
    let mut rel = RIDGE_START;
    loop {
        let mut h = hessian.clone();
        for i in 0..n {
            h[(i, i)] += ridge + extra;
        }
        if let Some(chol) = Cholesky::new(h) {
            if pivots_ok(&chol) {
                return Ok(Factored {
                    chol,
                    ridge: ridge + extra,
                });
            }
        }
        if scale == 0.0 || rel > RIDGE_MAX {
            return Err(Error::IllConditioned {
                context: "active-set QP",
                detail: alloc::format!(
                    "Hessian not positive definite after a ridge of {:.3e}",
                    extra
                ),
            });
        }
        extra = rel * scale;
        rel *= 100.0;
    }
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        return (1.0, 0.0, a);
    }
    let h = libm::hypot(a, b);
    (a / h, b / h, h)
}

/// Rotate columns `i` and `j` of `m`: `(ci, cj) <- (c ci + s cj, -s ci + c cj)`.
fn rotate_cols(m: &mut RMatrix, i: usize, j: usize, c: f64, s: f64) {
    let n = m.nrows();
    for r in 0..n {
        let (a, b) = (m[(r, i)], m[(r, j)]);
        m[(r, i)] = c * a + s * b;
        m[(r, j)] = -s * a + c * b;
    }
}

struct Workspace<'a> {
    psi: &'a RMatrix,
    gamma: &'a RVector,
    j: RMatrix,
    r: RMatrix,
    active: Vec<usize>,
    u: Vec<f64>,
}

impl Workspace<'_> {
    /// `n_p = -Ψ_pᵀ`, the constraint normal in `n_pᵀx ≥ -γ_p` form.
    fn normal(&self, p: usize) -> RVector {
        -self.psi.row(p).transpose()
    }

    fn add(&mut self, mut d: RVector) {
        let q = self.active.len();
        let n = d.len();
        let mut jj = n;
        while jj > q + 1 {
            jj -= 1;
            let (c, s, h) = givens(d[jj - 1], d[jj]);
            if d[jj] != 0.0 {
                d[jj - 1] = h;
                d[jj] = 0.0;
                rotate_cols(&mut self.j, jj - 1, jj, c, s);
            }
        }
        for i in 0..=q {
            self.r[(i, q)] = d[i];
        }
    }

    fn drop(&mut self, k: usize) {
        let q = self.active.len();
        for c in k..q - 1 {
            for i in 0..q {
                self.r[(i, c)] = self.r[(i, c + 1)];
            }
        }
        for i in 0..q {
            self.r[(i, q - 1)] = 0.0;
        }
        for c in k..q - 1 {
            let (cs, sn, h) = givens(self.r[(c, c)], self.r[(c + 1, c)]);
            if self.r[(c + 1, c)] != 0.0 {
                self.r[(c, c)] = h;
                self.r[(c + 1, c)] = 0.0;
                for col in c + 1..q - 1 {
                    let (a, b) = (self.r[(c, col)], self.r[(c + 1, col)]);
                    self.r[(c, col)] = cs * a + sn * b;
                    self.r[(c + 1, col)] = -sn * a + cs * b;
                }
                rotate_cols(&mut self.j, c, c + 1, cs, sn);
            }
        }
        self.active.remove(k);
        self.u.remove(k);
    }

    /// `R⁻¹ d[..q]` by back substitution.
    fn back_solve(&self, d: &RVector) -> Vec<f64> {
        let q = self.active.len();
        let mut r = alloc::vec![0.0; q];
        for i in (0..q).rev() {
            let mut acc = d[i];
            for c in i + 1..q {
                acc -= self.r[(i, c)] * r[c];
            }
            r[i] = acc / self.r[(i, i)];
        }
        r
    }
}

/// Solve `min xᵀAx + 2aᵀx s.t. Ψx ≤ γ` with `ridge I` added to `A`.
pub fn solve_qp(p: &QpProblem, ridge: f64) -> Result<SolveReport> {
    p.validate()?;
    let factored = factor(&p.hessian, ridge)?;
    solve_factored(p, &factored)
}

pub(crate) fn solve_factored(p: &QpProblem, factored: &Factored) -> Result<SolveReport> {
    let clock = Stopwatch::start();
    let n = p.hessian.nrows();
    let m = p.ineq_mat.nrows();
    let chol = &factored.chol;

    let mut x = -chol.solve(&p.linear);
    let l_t = chol.l().transpose();
    let j = l_t
        .solve_upper_triangular(&RMatrix::identity(n, n))
        .ok_or_else(|| Error::IllConditioned {
            context: "active-set QP",
            detail: alloc::string::String::from("singular Cholesky factor"),
        })?;
    let mut ws = Workspace {
        psi: &p.ineq_mat,
        gamma: &p.ineq_rhs,
        j,
        r: RMatrix::zeros(n, n),
        active: Vec::new(),
        u: Vec::new(),
    };
    let norms: Vec<f64> = (0..m).map(|i| p.ineq_mat.row(i).norm().max(f64::MIN_POSITIVE)).collect();
    let cap = 10 * (n + m) + 100;
    let mut iterations = 0usize;
    let mut status = Status::Optimal;

    'outer: loop {
        let viol = &p.ineq_mat * &x - &p.ineq_rhs;
        let xmax = x.amax();
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..m {
            let tol = 1e-12 * (1.0 + p.ineq_rhs[i].abs() + norms[i] * xmax);
            if viol[i] > tol && !ws.active.contains(&i) {
                let score = viol[i] / norms[i];
                if pick.is_none_or(|(_, best)| score > best) {
                    pick = Some((i, score));
                }
            }
        }
        let Some((cp, _)) = pick else { break };
        let np = ws.normal(cp);
        let mut u_new = 0.0;
        loop {
            iterations += 1;
            if iterations > cap {
                status = Status::IterationLimit;
                break 'outer;
            }
            let q = ws.active.len();
            let d = ws.j.transpose() * &np;
            let mut z = RVector::zeros(n);
            for c in q..n {
                z.axpy(d[c], &ws.j.column(c), 1.0);
            }
            let r = ws.back_solve(&d);
            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for (idx, &rv) in r.iter().enumerate() {
                if rv > 0.0 {
                    let ratio = ws.u[idx] / rv;
                    if ratio < t1 {
                        t1 = ratio;
                        drop_at = Some(idx);
                    }
                }
            }
            let d2 = d.rows(q, n - q).norm();
            let zn = z.dot(&np);
            let slack = np.dot(&x) + ws.gamma[cp];
            let t2 = if d2 <= 1e-12 * d.norm().max(f64::MIN_POSITIVE) || zn <= 0.0 {
                f64::INFINITY
            } else {
                -slack / zn
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                status = Status::Infeasible;
                break 'outer;
            }
            if !t2.is_finite() {
                for (uv, rv) in ws.u.iter_mut().zip(&r) {
                    *uv -= t * rv;
                }
                u_new += t;
                ws.drop(drop_at.expect("finite partial step has a blocking constraint"));
                continue;
            }
            x.axpy(t, &z, 1.0);
            for (uv, rv) in ws.u.iter_mut().zip(&r) {
                *uv -= t * rv;
            }
            u_new += t;
            if t2 <= t1 {
                ws.add(d);
                ws.active.push(cp);
                ws.u.push(u_new);
                continue 'outer;
            }
            ws.drop(drop_at.expect("partial step has a blocking constraint"));
        }
    }

    let mut multipliers = RVector::zeros(m);
    for (&i, &uv) in ws.active.iter().zip(&ws.u) {
        multipliers[i] = 2.0 * uv;
    }
    let objective = p.objective(&x);
    let kkt_residual = p.kkt_residual(&x, &multipliers, factored.ridge);
    let mut active_set = ws.active.clone();
    active_set.sort_unstable();
    Ok(SolveReport {
        solution: x,
        objective,
        active_set,
        multipliers,
        iterations,
        wall_time: clock.elapsed(),
        penalty: None,
        status,
        kkt_residual,
        probes: Vec::new(),
    })
}
