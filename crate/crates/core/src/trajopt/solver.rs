//! Dense convex QP solver.
//!
//! Equalities are eliminated with a null-space basis from a Householder QR
//! of `Aᵀ`. The remaining inequality-only problem is solved with the
//! Goldfarb–Idnani dual active-set method, which needs no feasible starting
//! point and reports infeasibility when a violated constraint cannot be
//! added. Problem sizes here are a few dozen variables, so the active-set
//! factorization is recomputed from scratch at every step instead of being
//! updated.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::trajopt::qp::QuadraticProgram;

/// Primal/dual solution with its KKT residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers `ν` of `A x = b`.
    pub eq_multipliers: DVector<f64>,
    /// Net multipliers `μ` of the box rows: positive when the lower bound is
    /// active, negative when the upper bound is active.
    pub ineq_multipliers: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub residuals: KktResiduals,
}

/// Infinity-norm KKT violations of a candidate solution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KktResiduals {
    /// `‖Hx + g − Aᵀν − Cᵀμ‖∞`
    pub stationarity: f64,
    /// Largest equality or bound violation.
    pub primal: f64,
    /// Largest `|μ_i| · slack_i` on the side the multiplier acts on.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

/// Evaluates the KKT residuals of `(x, ν, μ)` for `qp`.
pub fn kkt_residuals(
    qp: &QuadraticProgram,
    x: &DVector<f64>,
    nu: &DVector<f64>,
    mu: &DVector<f64>,
) -> KktResiduals {
    let grad = &qp.cost * x + &qp.linear;
    let mut stat = grad;
    if qp.n_eq() > 0 {
        stat -= qp.eq_matrix.transpose() * nu;
    }
    if qp.n_ineq() > 0 {
        stat -= qp.ineq_matrix.transpose() * mu;
    }
    let mut primal: f64 = 0.0;
    if qp.n_eq() > 0 {
        primal = (&qp.eq_matrix * x - &qp.eq_rhs).amax();
    }
    let mut comp: f64 = 0.0;
    if qp.n_ineq() > 0 {
        let cx = &qp.ineq_matrix * x;
        for i in 0..qp.n_ineq() {
            let (l, u) = (qp.ineq_lower[i], qp.ineq_upper[i]);
            primal = primal.max(l - cx[i]).max(cx[i] - u);
            let slack = if mu[i] > 0.0 {
                cx[i] - l
            } else {
                u - cx[i]
            };
            comp = comp.max((mu[i] * slack).abs());
        }
    }
    KktResiduals {
        stationarity: stat.amax(),
        primal: primal.max(0.0),
        complementarity: comp,
    }
}

/// Householder QR returning the full orthogonal factor `Q` (rows×rows) and
/// the upper-triangular `R` (min(rows, cols)×cols).
fn full_qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let rows = m.nrows();
    let qr = m.clone().qr();
    let mut qt = DMatrix::identity(rows, rows);
    qr.q_tr_mul(&mut qt);
    (qt.transpose(), qr.r())
}

/// One half of a two-sided row: `sign · c_row · y ≥ bound`.
#[derive(Clone, Copy, Debug)]
struct Half {
    row: usize,
    sign: f64,
    bound: f64,
}

struct DualActiveSet<'a> {
    hess_chol: Cholesky<f64, nalgebra::Dyn>,
    /// `L⁻ᵀ` with `H = L Lᵀ`.
    j0: DMatrix<f64>,
    c: &'a DMatrix<f64>,
    halves: Vec<Half>,
}

impl DualActiveSet<'_> {
    fn normal(&self, h: &Half) -> DVector<f64> {
        self.c.row(h.row).transpose() * h.sign
    }

    fn slack(&self, h: &Half, y: &DVector<f64>) -> f64 {
        h.sign * self.c.row(h.row).dot(&y.transpose()) - h.bound
    }

    /// `J = J0 Q` and `R` from the QR of `J0ᵀ N_A`.
    fn factor(&self, active: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
        let p = self.j0.nrows();
        if active.is_empty() {
            return (self.j0.clone(), DMatrix::zeros(0, 0));
        }
        let mut n_a = DMatrix::zeros(p, active.len());
        for (col, &i) in active.iter().enumerate() {
            n_a.set_column(col, &self.normal(&self.halves[i]));
        }
        let (q, r) = full_qr(&(self.j0.transpose() * n_a));
        let q_act = active.len();
        (&self.j0 * q, r.view((0, 0), (q_act, q_act)).into_owned())
    }

    fn solve(&self, g: &DVector<f64>, max_iter: usize) -> Result<(DVector<f64>, Vec<(usize, f64)>, usize)> {
        let p = g.len();
        let mut y = -self.hess_chol.solve(g);
        let mut active: Vec<usize> = Vec::new();
        let mut u: Vec<f64> = Vec::new();
        let scale = |h: &Half| self.c.row(h.row).norm().max(1e-300);
        let tol = 1e-11;
        let mut iterations = 0;

        loop {
            // most violated half-constraint (normalized)
            let mut worst: Option<(usize, f64)> = None;
            for (i, h) in self.halves.iter().enumerate() {
                if active.contains(&i) {
                    continue;
                }
                let s = self.slack(h, &y) / scale(h);
                if s < -tol * (1.0 + h.bound.abs() / scale(h)) && worst.map_or(true, |(_, w)| s < w) {
                    worst = Some((i, s));
                }
            }
            let Some((pidx, _)) = worst else {
                let mult = active.iter().copied().zip(u.iter().copied()).collect();
                return Ok((y, mult, iterations));
            };
            let n_p = self.normal(&self.halves[pidx]);
            let mut u_plus = u.clone();
            u_plus.push(0.0);

            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::QpIterationLimit {
                        iterations,
                        primal: -self.slack(&self.halves[pidx], &y),
                        stationarity: f64::NAN,
                    });
                }
                let q = active.len();
                let (j, r) = self.factor(&active);
                let d = j.transpose() * &n_p;
                let z: DVector<f64> = if q < p {
                    j.columns(q, p - q) * d.rows(q, p - q)
                } else {
                    DVector::zeros(p)
                };
                let rvec: DVector<f64> = if q > 0 {
                    r.solve_upper_triangular(&d.rows(0, q).into_owned())
                        .ok_or(Error::QpDegenerateEqualities)?
                } else {
                    DVector::zeros(0)
                };

                // partial (dual) step
                let mut t1 = f64::INFINITY;
                let mut drop_at = None;
                for k in 0..q {
                    if rvec[k] > 1e-14 {
                        let t = u_plus[k] / rvec[k];
                        if t < t1 {
                            t1 = t;
                            drop_at = Some(k);
                        }
                    }
                }
                // full (primal) step
                let zn = z.dot(&n_p);
                let t2 = if z.amax() > 1e-13 * n_p.amax().max(1.0) && zn > 1e-14 {
                    -self.slack(&self.halves[pidx], &y) / zn
                } else {
                    f64::INFINITY
                };

                if t1.is_infinite() && t2.is_infinite() {
                    return Err(Error::QpInfeasible);
                }
                if t2.is_infinite() {
                    for k in 0..q {
                        u_plus[k] -= t1 * rvec[k];
                    }
                    u_plus[q] += t1;
                    let k = drop_at.expect("finite t1 has an index");
                    active.remove(k);
                    u_plus.remove(k);
                    continue;
                }
                let t = t1.min(t2);
                y += &z * t;
                for k in 0..q {
                    u_plus[k] -= t * rvec[k];
                }
                u_plus[q] += t;
                if t2 <= t1 {
                    active.push(pidx);
                    u = u_plus;
                    break;
                }
                let k = drop_at.expect("finite t1 has an index");
                active.remove(k);
                u_plus.remove(k);
            }
        }
    }
}

/// Solves a convex QP. The cost must be positive definite on the null space
/// of the equality constraints.
pub fn solve_qp(qp: &QuadraticProgram) -> Result<QpSolution> {
    qp.check_dimensions()?;
    let n = qp.dim();
    let m = qp.n_eq();

    // null-space reduction  x = x0 + Z y
    let (x0, z, q_eq, r_eq) = if m > 0 {
        if m > n {
            return Err(Error::QpDegenerateEqualities);
        }
        let (q, r) = full_qr(&qp.eq_matrix.transpose());
        let r = r.view((0, 0), (m, m)).into_owned();
        let rmax = r.diagonal().amax();
        if r.diagonal().iter().any(|d| d.abs() <= 1e-12 * rmax.max(1.0)) {
            return Err(Error::QpDegenerateEqualities);
        }
        let w = r
            .transpose()
            .solve_lower_triangular(&qp.eq_rhs)
            .ok_or(Error::QpDegenerateEqualities)?;
        let x0 = q.columns(0, m) * w;
        let z = q.columns(m, n - m).into_owned();
        (x0, z, Some(q), Some(r))
    } else {
        (DVector::zeros(n), DMatrix::identity(n, n), None, None)
    };

    let reduced_dim = n - m;
    let (y, mult, iterations) = if reduced_dim == 0 {
        (DVector::zeros(0), Vec::new(), 0)
    } else {
        let zt = z.transpose();
        let mut hr = &zt * &qp.cost * &z;
        hr = (&hr + hr.transpose()) * 0.5;
        let gr = &zt * (&qp.cost * &x0 + &qp.linear);
        let cr = &qp.ineq_matrix * &z;
        let cx0 = &qp.ineq_matrix * &x0;
        let mut halves = Vec::with_capacity(2 * qp.n_ineq());
        for i in 0..qp.n_ineq() {
            let (l, u) = (qp.ineq_lower[i], qp.ineq_upper[i]);
            if l > u {
                return Err(Error::QpInfeasible);
            }
            if l.is_finite() {
                halves.push(Half { row: i, sign: 1.0, bound: l - cx0[i] });
            }
            if u.is_finite() {
                halves.push(Half { row: i, sign: -1.0, bound: -(u - cx0[i]) });
            }
        }
        let chol = Cholesky::new(hr.clone()).ok_or(Error::QpNotConvex)?;
        let linv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(reduced_dim, reduced_dim))
            .ok_or(Error::QpNotConvex)?;
        let solver = DualActiveSet {
            hess_chol: chol,
            j0: linv.transpose(),
            c: &cr,
            halves,
        };
        let max_iter = 50 * (qp.n_ineq() + reduced_dim) + 100;
        let (y, active, it) = solver.solve(&gr, max_iter)?;
        let mult: Vec<(usize, f64, f64)> = active
            .into_iter()
            .map(|(i, u)| (solver.halves[i].row, solver.halves[i].sign, u))
            .collect();
        (y, mult.into_iter().map(|(r, s, u)| (r, s * u)).collect::<Vec<_>>(), it)
    };

    let x = if reduced_dim == 0 { x0.clone() } else { &x0 + &z * &y };
    if reduced_dim == 0 && qp.n_ineq() > 0 {
        let cx = &qp.ineq_matrix * &x;
        for i in 0..qp.n_ineq() {
            let slack_tol = 1e-9 * (1.0 + cx[i].abs());
            if cx[i] < qp.ineq_lower[i] - slack_tol || cx[i] > qp.ineq_upper[i] + slack_tol {
                return Err(Error::QpInfeasible);
            }
        }
    }

    let mut mu = DVector::zeros(qp.n_ineq());
    for (row, value) in mult {
        mu[row] += value;
    }

    // equality multipliers: Aᵀν = Hx + g − Cᵀμ in the least-squares sense
    let nu = match (q_eq, r_eq) {
        (Some(q), Some(r)) => {
            let mut resid = &qp.cost * &x + &qp.linear;
            if qp.n_ineq() > 0 {
                resid -= qp.ineq_matrix.transpose() * &mu;
            }
            let rhs = q.columns(0, m).transpose() * resid;
            r.solve_upper_triangular(&rhs).ok_or(Error::QpDegenerateEqualities)?
        }
        _ => DVector::zeros(0),
    };

    let residuals = kkt_residuals(qp, &x, &nu, &mu);
    let objective = 0.5 * x.dot(&(&qp.cost * &x)) + qp.linear.dot(&x);
    Ok(QpSolution {
        x,
        eq_multipliers: nu,
        ineq_multipliers: mu,
        objective,
        iterations,
        residuals,
    })
}
