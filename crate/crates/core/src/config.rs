use alloc::format;
use alloc::string::ToString;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Planner parameters. `Default` yields the reference simulation setup
/// (0.4 m map, 0.8 m viewpoint lattice, `w_d = 3.4`, `λ = 2`, `d_max = 2 m`,
/// `K = 6`, `H = 5 s`, `M = 2`, `d_des = 2.5 m` in `[1, 4] m`,
/// `r_safe = 0.3 m`, elevation in `[20°, 70°]`).
#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Planning horizon `H` in seconds.
    pub horizon: f64,
    /// Number of polynomial segments / waypoint steps `N`.
    pub segments: usize,
    /// Visibility weight `w_v`.
    pub w_v: f64,
    /// Tracking-distance weight `w_d`.
    pub w_d: f64,
    /// Waypoint pull weight `λ` in the trajectory QP.
    pub lambda: f64,
    pub d_des: f64,
    pub d_lower: f64,
    pub d_upper: f64,
    /// Maximum spacing between consecutive waypoints.
    pub d_max: f64,
    /// Required clearance along preplanned segments.
    pub r_safe: f64,
    /// Elevation bounds of `x_c - x_p` in radians.
    pub theta_min: f64,
    pub theta_max: f64,
    /// Polynomial order `K`.
    pub poly_order: usize,
    /// Corridor subsamples per segment `M`.
    pub corridors_per_segment: usize,
    /// Viewpoint lattice spacing in meters.
    pub candidate_spacing: f64,
    /// Replan slack `ε`: a plan is executed for `H - ε` seconds.
    pub replan_slack: f64,
    /// Corridor half-extent scale applied to `φ/√3`.
    pub corridor_shrink: f64,
    /// Mission log sample rate in Hz.
    pub log_rate: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            horizon: 5.0,
            segments: 4,
            w_v: 1.0,
            w_d: 3.4,
            lambda: 2.0,
            d_des: 2.5,
            d_lower: 1.0,
            d_upper: 4.0,
            d_max: 2.0,
            r_safe: 0.3,
            theta_min: 20f64.to_radians(),
            theta_max: 70f64.to_radians(),
            poly_order: 6,
            corridors_per_segment: 2,
            candidate_spacing: 0.8,
            replan_slack: 4.0,
            corridor_shrink: 0.9,
            log_rate: 50.0,
        }
    }
}

fn bad(field: &'static str, reason: impl ToString) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.to_string(),
    }
}

impl PlannerConfig {
    /// Waypoint time step `Δt = H / N`.
    pub fn dt(&self) -> f64 {
        self.horizon / self.segments as f64
    }

    /// Time a plan is executed before the next replan.
    pub fn execution_window(&self) -> f64 {
        self.horizon - self.replan_slack
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(field, format!("must be positive and finite, got {v}")))
            }
        };
        let nonneg = |field, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(bad(field, format!("must be nonnegative and finite, got {v}")))
            }
        };
        positive("H", self.horizon)?;
        if self.segments == 0 {
            return Err(bad("N", "must be at least 1"));
        }
        nonneg("w_v", self.w_v)?;
        nonneg("w_d", self.w_d)?;
        nonneg("lambda", self.lambda)?;
        positive("d_lower", self.d_lower)?;
        positive("d_des", self.d_des)?;
        positive("d_upper", self.d_upper)?;
        if !(self.d_lower <= self.d_des && self.d_des <= self.d_upper) {
            return Err(bad("d_des", "require d_lower <= d_des <= d_upper"));
        }
        positive("d_max", self.d_max)?;
        positive("r_safe", self.r_safe)?;
        if !(self.theta_min > 0.0 && self.theta_min < self.theta_max && self.theta_max < FRAC_PI_2) {
            return Err(bad(
                "theta_min_deg",
                "require 0 < theta_min < theta_max < 90 degrees",
            ));
        }
        if self.poly_order < 5 {
            return Err(bad("K", format!("must be at least 5, got {}", self.poly_order)));
        }
        if self.corridors_per_segment == 0 {
            return Err(bad("M", "must be at least 1"));
        }
        positive("omega_res", self.candidate_spacing)?;
        if !(self.replan_slack > 0.0 && self.replan_slack < self.horizon) {
            return Err(bad("replan_slack", "require 0 < replan_slack < H"));
        }
        if !(self.corridor_shrink > 0.0 && self.corridor_shrink <= 1.0) {
            return Err(bad("corridor_shrink", "must lie in (0, 1]"));
        }
        positive("log_rate", self.log_rate)?;
        Ok(())
    }
}
