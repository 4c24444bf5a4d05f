//! Smooth chasing trajectory: minimum-jerk piecewise polynomials that start
//! at the chaser state, pass near the preplanned waypoints and stay inside
//! the chasing corridors at their subsample times.

mod qp;
mod solver;

use alloc::vec::Vec;

pub use qp::{assemble_qp, basis_row, jerk_cost, jerk_gram, QuadraticProgram, REGULARIZATION};
pub use solver::{kkt_residuals, solve_qp, KktResiduals, QpSolution};

use crate::config::PlannerConfig;
use crate::corridor::{build_corridors, CorridorLimits, CorridorSequence};
use crate::error::{Error, Result};
use crate::fields::DistanceField;
use crate::math::{atan2, sqrt, Vec3};
use crate::preplan::WaypointPlan;
use crate::world::TargetPath;

/// Kinematic state of the chaser at time `stamp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChaserState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub stamp: f64,
}

impl ChaserState {
    pub fn at_rest(position: Vec3, stamp: f64) -> Self {
        ChaserState {
            position,
            velocity: Vec3::ZERO,
            acceleration: Vec3::ZERO,
            stamp,
        }
    }
}

/// Piecewise polynomial `x_c(τ)`; segment `n` is `Σ_k p_{n,k} (τ − t_{n−1})^k`
/// on `[t_{n−1}, t_n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePolynomial {
    knots: Vec<f64>,
    order: usize,
    /// `segment * 3 * (K+1) + axis * (K+1) + k`
    coeffs: Vec<f64>,
}

impl PiecewisePolynomial {
    pub fn new(knots: Vec<f64>, order: usize, coeffs: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InconsistentTimestamps("trajectory knots must increase".into()));
        }
        if coeffs.len() != (knots.len() - 1) * 3 * (order + 1) {
            return Err(Error::Dimension("coefficient count does not match knots".into()));
        }
        Ok(PiecewisePolynomial { knots, order, coeffs })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn start_time(&self) -> f64 {
        self.knots[0]
    }

    pub fn end_time(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Coefficients of one segment and axis, lowest power first.
    pub fn coefficients(&self, segment: usize, axis: usize) -> &[f64] {
        let nc = self.order + 1;
        let o = segment * 3 * nc + axis * nc;
        &self.coeffs[o..o + nc]
    }

    fn segment_of(&self, t: f64) -> usize {
        let n = self.segments();
        self.knots.partition_point(|&k| k <= t).clamp(1, n) - 1
    }

    /// Evaluates derivative `derivative` of segment `segment` at `t`
    /// (no domain check; used for one-sided knot checks).
    pub fn eval_segment(&self, segment: usize, t: f64, derivative: usize) -> Vec3 {
        let s = t - self.knots[segment];
        let mut out = Vec3::ZERO;
        for axis in 0..3 {
            let c = self.coefficients(segment, axis);
            // Horner on the differentiated polynomial
            let mut acc = 0.0;
            for k in (derivative..=self.order).rev() {
                let mut f = 1.0;
                for m in 0..derivative {
                    f *= (k - m) as f64;
                }
                acc = acc * s + f * c[k];
            }
            out[axis] = acc;
        }
        out
    }

    /// Position (0), velocity (1), acceleration (2) or jerk (3) at `t`.
    pub fn eval(&self, t: f64, derivative: usize) -> Result<Vec3> {
        let (a, b) = (self.start_time(), self.end_time());
        let tol = 1e-9 * (b - a).max(1.0);
        if !(t >= a - tol && t <= b + tol) || derivative > 3 {
            return Err(Error::OutOfDomain { t, start: a, end: b });
        }
        let t = t.clamp(a, b);
        Ok(self.eval_segment(self.segment_of(t), t, derivative))
    }

    /// State (position, velocity, acceleration) at `t`.
    pub fn state_at(&self, t: f64) -> Result<ChaserState> {
        Ok(ChaserState {
            position: self.eval(t, 0)?,
            velocity: self.eval(t, 1)?,
            acceleration: self.eval(t, 2)?,
            stamp: t,
        })
    }

    /// `∫ ‖x_c'''‖² dτ` over the whole domain, from the Gram blocks.
    pub fn jerk_integral(&self) -> f64 {
        let nc = self.order + 1;
        let mut total = 0.0;
        for seg in 0..self.segments() {
            let g = jerk_gram(self.knots[seg + 1] - self.knots[seg], self.order);
            for axis in 0..3 {
                let c = self.coefficients(seg, axis);
                for i in 0..nc {
                    for j in 0..nc {
                        total += c[i] * g[(i, j)] * c[j];
                    }
                }
            }
        }
        total
    }
}

/// Heading that points the body x-axis at the target (x east, y north).
/// Holds `previous` when the horizontal offset is shorter than 1 µm.
pub fn yaw_reference(
    trajectory: &PiecewisePolynomial,
    target: &TargetPath,
    t: f64,
    previous: f64,
) -> Result<f64> {
    let c = trajectory.eval(t, 0)?;
    Ok(yaw_towards(c, target.position(t), previous))
}

/// Planar bearing from `from` to `to`, or `previous` if they are vertically aligned.
pub fn yaw_towards(from: Vec3, to: Vec3, previous: f64) -> f64 {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    if sqrt(dx * dx + dy * dy) < 1e-6 {
        previous
    } else {
        atan2(dy, dx)
    }
}

fn solve_trajectory(
    state: &ChaserState,
    plan: &WaypointPlan,
    corridors: &CorridorSequence,
    config: &PlannerConfig,
) -> Result<PiecewisePolynomial> {
    let qp = assemble_qp(state, plan, corridors, config.lambda, config.poly_order)?;
    let nc = config.poly_order + 1;
    let n_seg = plan.times.len() - 1;
    let mut coeffs = alloc::vec![0.0; n_seg * 3 * nc];
    for (axis, block) in qp.split_blocks().iter().enumerate() {
        let sol = solve_qp(block)?;
        for seg in 0..n_seg {
            for k in 0..nc {
                coeffs[seg * 3 * nc + axis * nc + k] = sol.x[seg * nc + k];
            }
        }
    }
    PiecewisePolynomial::new(plan.times.clone(), config.poly_order, coeffs)
}

/// Solves the corridor QP per axis. If it is infeasible, the corridors are
/// rebuilt at full size (`shrink = 1`) and the solve is retried once.
pub fn generate_trajectory(
    field: &DistanceField,
    state: &ChaserState,
    plan: &WaypointPlan,
    corridors: &CorridorSequence,
    config: &PlannerConfig,
) -> Result<PiecewisePolynomial> {
    match solve_trajectory(state, plan, corridors, config) {
        Err(Error::QpInfeasible) if corridors.shrink < 1.0 => {
            let limits = CorridorLimits::new(field.resolution(), config);
            let relaxed = build_corridors(field, plan, config.corridors_per_segment, 1.0, &limits)?;
            solve_trajectory(state, plan, &relaxed, config)
        }
        other => other,
    }
}
