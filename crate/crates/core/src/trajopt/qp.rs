//! Minimum-jerk QP over piecewise polynomials in local segment time.
//!
//! Decision vector layout: `axis * N * (K + 1) + segment * (K + 1) + k`,
//! where coefficient `k` multiplies `(τ - t_{n-1})^k`. Constraint rows are
//! grouped by axis in the same order, so the three axis blocks are
//! independent.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::corridor::CorridorSequence;
use crate::error::{Error, Result};
use crate::preplan::WaypointPlan;
use crate::trajopt::ChaserState;

/// Tikhonov term added to the cost matrix.
pub const REGULARIZATION: f64 = 1e-10;

/// `min ½ xᵀHx + gᵀx  s.t.  A x = b,  l ≤ C x ≤ u`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticProgram {
    pub cost: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_lower: DVector<f64>,
    pub ineq_upper: DVector<f64>,
    /// Number of identical, decoupled diagonal blocks (3 for an assembled
    /// trajectory problem, 1 otherwise).
    pub blocks: usize,
}

impl QuadraticProgram {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn n_eq(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.ineq_lower.len()
    }

    /// Problem without equality or inequality rows.
    pub fn unconstrained(cost: DMatrix<f64>, linear: DVector<f64>) -> Self {
        let n = linear.len();
        QuadraticProgram {
            cost,
            linear,
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_lower: DVector::zeros(0),
            ineq_upper: DVector::zeros(0),
            blocks: 1,
        }
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let n = self.dim();
        let ok = self.cost.nrows() == n
            && self.cost.ncols() == n
            && self.eq_matrix.ncols() == n
            && self.eq_matrix.nrows() == self.eq_rhs.len()
            && self.ineq_matrix.ncols() == n
            && self.ineq_matrix.nrows() == self.ineq_lower.len()
            && self.ineq_lower.len() == self.ineq_upper.len();
        if !ok {
            return Err(Error::Dimension(format!(
                "n={n}, H {}x{}, A {}x{} / b {}, C {}x{} / l {} / u {}",
                self.cost.nrows(),
                self.cost.ncols(),
                self.eq_matrix.nrows(),
                self.eq_matrix.ncols(),
                self.eq_rhs.len(),
                self.ineq_matrix.nrows(),
                self.ineq_matrix.ncols(),
                self.ineq_lower.len(),
                self.ineq_upper.len()
            )));
        }
        let asym = (&self.cost - self.cost.transpose()).amax();
        if asym > 1e-12 * self.cost.amax().max(1.0) {
            return Err(Error::Dimension(format!("cost matrix asymmetric by {asym}")));
        }
        Ok(())
    }

    /// Splits a block-structured problem into its independent blocks.
    pub fn split_blocks(&self) -> Vec<QuadraticProgram> {
        let b = self.blocks.max(1);
        let (nv, ne, ni) = (self.dim() / b, self.n_eq() / b, self.n_ineq() / b);
        (0..b)
            .map(|i| QuadraticProgram {
                cost: self.cost.view((i * nv, i * nv), (nv, nv)).into_owned(),
                linear: self.linear.rows(i * nv, nv).into_owned(),
                eq_matrix: self.eq_matrix.view((i * ne, i * nv), (ne, nv)).into_owned(),
                eq_rhs: self.eq_rhs.rows(i * ne, ne).into_owned(),
                ineq_matrix: self.ineq_matrix.view((i * ni, i * nv), (ni, nv)).into_owned(),
                ineq_lower: self.ineq_lower.rows(i * ni, ni).into_owned(),
                ineq_upper: self.ineq_upper.rows(i * ni, ni).into_owned(),
                blocks: 1,
            })
            .collect()
    }
}

/// Gram matrix of the third derivatives of the monomials `s^0 … s^K` over
/// `[0, duration]`: entry `(i, j) = ∫ (s^i)''' (s^j)''' ds`.
pub fn jerk_gram(duration: f64, order: usize) -> DMatrix<f64> {
    let n = order + 1;
    let mut g = DMatrix::zeros(n, n);
    let c = |i: usize| (i * (i - 1) * (i - 2)) as f64;
    for i in 3..n {
        for j in 3..n {
            let p = (i + j - 5) as i32;
            g[(i, j)] = c(i) * c(j) * crate::math::powi(duration, p) / p as f64;
        }
    }
    g
}

/// Per-segment jerk Gram blocks for the given knot times.
pub fn jerk_cost(knots: &[f64], order: usize) -> Vec<DMatrix<f64>> {
    knots.windows(2).map(|w| jerk_gram(w[1] - w[0], order)).collect()
}

/// Row vector of `d^r/ds^r s^k` at local time `s`, for `k = 0..=K`.
pub fn basis_row(s: f64, order: usize, derivative: usize) -> Vec<f64> {
    (0..=order)
        .map(|k| {
            if k < derivative {
                0.0
            } else {
                let mut f = 1.0;
                for m in 0..derivative {
                    f *= (k - m) as f64;
                }
                f * crate::math::powi(s, (k - derivative) as i32)
            }
        })
        .collect()
}

/// Builds the trajectory QP: jerk integral plus `λ Σ ‖x_c(t_n) − x_n‖²`,
/// initial position/velocity/acceleration, C² continuity at interior knots,
/// and a two-sided box row per corridor entry.
pub fn assemble_qp(
    state: &ChaserState,
    plan: &WaypointPlan,
    corridors: &CorridorSequence,
    lambda: f64,
    order: usize,
) -> Result<QuadraticProgram> {
    let knots = &plan.times;
    let n_seg = knots.len().saturating_sub(1);
    if n_seg == 0 {
        return Err(Error::InconsistentTimestamps("plan has fewer than two knots".into()));
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InconsistentTimestamps("plan times not increasing".into()));
    }
    let t0 = knots[0];
    let t_end = knots[n_seg];
    if (state.stamp - t0).abs() > 1e-9 * t0.abs().max(1.0) {
        return Err(Error::InconsistentTimestamps(format!(
            "state stamp {} differs from plan start {t0}",
            state.stamp
        )));
    }
    let mut segs_of_entries = Vec::with_capacity(corridors.entries.len());
    for e in &corridors.entries {
        if !(e.tau >= t0 && e.tau <= t_end) {
            return Err(Error::InconsistentTimestamps(format!(
                "corridor time {} outside [{t0}, {t_end}]",
                e.tau
            )));
        }
        let seg = knots.partition_point(|&t| t <= e.tau).clamp(1, n_seg) - 1;
        segs_of_entries.push(seg);
    }

    let nc = order + 1;
    let nv = n_seg * nc;
    let ne = 3 + 3 * (n_seg - 1);
    let ni = corridors.entries.len();

    let mut cost = DMatrix::zeros(3 * nv, 3 * nv);
    let mut linear = DVector::zeros(3 * nv);
    let mut eq = DMatrix::zeros(3 * ne, 3 * nv);
    let mut rhs = DVector::zeros(3 * ne);
    let mut ineq = DMatrix::zeros(3 * ni, 3 * nv);
    let mut lower = DVector::zeros(3 * ni);
    let mut upper = DVector::zeros(3 * ni);

    let grams = jerk_cost(knots, order);
    let ends: Vec<Vec<f64>> = knots
        .windows(2)
        .map(|w| basis_row(w[1] - w[0], order, 0))
        .collect();

    for axis in 0..3 {
        let vo = axis * nv;
        for seg in 0..n_seg {
            let so = vo + seg * nc;
            let e = &ends[seg];
            let target = plan.waypoints[seg + 1][axis];
            for i in 0..nc {
                for j in 0..nc {
                    cost[(so + i, so + j)] += 2.0 * (grams[seg][(i, j)] + lambda * e[i] * e[j]);
                }
                linear[so + i] -= 2.0 * lambda * target * e[i];
            }
        }

        let eo = axis * ne;
        let init = [state.position[axis], state.velocity[axis], state.acceleration[axis]];
        for (r, value) in init.iter().enumerate() {
            let row = basis_row(0.0, order, r);
            for k in 0..nc {
                eq[(eo + r, vo + k)] = row[k];
            }
            rhs[eo + r] = *value;
        }
        for seg in 0..n_seg - 1 {
            let dur = knots[seg + 1] - knots[seg];
            for r in 0..3 {
                let row_idx = eo + 3 + 3 * seg + r;
                let left = basis_row(dur, order, r);
                let right = basis_row(0.0, order, r);
                for k in 0..nc {
                    eq[(row_idx, vo + seg * nc + k)] = left[k];
                    eq[(row_idx, vo + (seg + 1) * nc + k)] = -right[k];
                }
            }
        }

        let io = axis * ni;
        for (i, (entry, &seg)) in corridors.entries.iter().zip(&segs_of_entries).enumerate() {
            let row = basis_row(entry.tau - knots[seg], order, 0);
            for k in 0..nc {
                ineq[(io + i, vo + seg * nc + k)] = row[k];
            }
            lower[io + i] = entry.center[axis] - entry.half_extent[axis];
            upper[io + i] = entry.center[axis] + entry.half_extent[axis];
        }
    }
    for i in 0..3 * nv {
        cost[(i, i)] += REGULARIZATION;
    }

    Ok(QuadraticProgram {
        cost,
        linear,
        eq_matrix: eq,
        eq_rhs: rhs,
        ineq_matrix: ineq,
        ineq_lower: lower,
        ineq_upper: upper,
        blocks: 3,
    })
}
