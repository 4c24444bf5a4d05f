//! Chasing corridors: axis-aligned boxes around the piecewise-linear
//! interpolation of the waypoint plan, sized so each box fits inside the
//! clearance ball of its center (`l ≤ φ(center)/√3` per axis).

use alloc::vec::Vec;

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::fields::DistanceField;
use crate::math::{sqrt, Vec3};
use crate::preplan::WaypointPlan;

/// Corridor box at subsample time `tau` of plan segment `segment` (0-based).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorridorEntry {
    pub tau: f64,
    pub center: Vec3,
    pub half_extent: Vec3,
    pub segment: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorridorSequence {
    pub entries: Vec<CorridorEntry>,
    /// Fraction of `φ/√3` used for the half-extents.
    pub shrink: f64,
}

/// Bounds on corridor half-extents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorridorLimits {
    pub min_half_extent: f64,
    pub max_half_extent: f64,
}

impl CorridorLimits {
    /// `min = min(res/2, r_safe/(2√3))`, `max = d_max/2`.
    pub fn new(resolution: f64, config: &PlannerConfig) -> Self {
        CorridorLimits {
            min_half_extent: (0.5 * resolution).min(config.r_safe / (2.0 * sqrt(3.0))),
            max_half_extent: 0.5 * config.d_max,
        }
    }
}

/// Piecewise-linear interpolation of the plan at `tau`.
pub fn gamma(plan: &WaypointPlan, tau: f64) -> Result<Vec3> {
    let t = &plan.times;
    let (start, end) = (t[0], t[t.len() - 1]);
    if !(tau >= start && tau <= end) {
        return Err(Error::OutOfDomain { t: tau, start, end });
    }
    let n = t.partition_point(|&k| k <= tau).clamp(1, t.len() - 1);
    let (t0, t1) = (t[n - 1], t[n]);
    let (x0, x1) = (plan.waypoints[n - 1], plan.waypoints[n]);
    if tau == t1 {
        return Ok(x1);
    }
    let w1 = (tau - t0) / (t1 - t0);
    let w0 = (t1 - tau) / (t1 - t0);
    Ok(x0 * w0 + x1 * w1)
}

/// Corridor at `tau`: center `γ(tau)` and half-extent `shrink·φ(γ)/√3`
/// clamped to `limits`. Fails if even the minimum half-extent would leave
/// the clearance ball.
pub fn corridor_at(
    field: &DistanceField,
    plan: &WaypointPlan,
    tau: f64,
    shrink: f64,
    limits: &CorridorLimits,
) -> Result<(Vec3, Vec3)> {
    let center = gamma(plan, tau)?;
    let phi = field.phi(center)?;
    let bound = phi / sqrt(3.0);
    if bound <= limits.min_half_extent {
        return Err(Error::CorridorCollapsed { tau, segment: 0 });
    }
    let l = (shrink * bound)
        .max(limits.min_half_extent)
        .min(limits.max_half_extent);
    Ok((center, Vec3::splat(l)))
}

/// `M` equispaced interior corridors per segment, `τ_{n,i} = t_{n−1} + i·Δt/(M+1)`.
pub fn build_corridors(
    field: &DistanceField,
    plan: &WaypointPlan,
    per_segment: usize,
    shrink: f64,
    limits: &CorridorLimits,
) -> Result<CorridorSequence> {
    let mut entries = Vec::with_capacity((plan.times.len() - 1) * per_segment);
    for (seg, w) in plan.times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        for i in 1..=per_segment {
            let tau = w[0] + i as f64 * dt / (per_segment + 1) as f64;
            let (center, half_extent) = corridor_at(field, plan, tau, shrink, limits).map_err(|e| match e {
                Error::CorridorCollapsed { tau, .. } => Error::CorridorCollapsed { tau, segment: seg },
                other => other,
            })?;
            entries.push(CorridorEntry {
                tau,
                center,
                half_extent,
                segment: seg,
            });
        }
    }
    Ok(CorridorSequence { entries, shrink })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::compute_edf;
    use crate::world::{Aabb, VoxelGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plan() -> WaypointPlan {
        WaypointPlan {
            times: alloc::vec![0.0, 1.25, 2.5, 3.75, 5.0],
            waypoints: alloc::vec![
                Vec3::new(1.0, 1.0, 1.0),
                Vec3::new(2.0, 1.5, 1.2),
                Vec3::new(3.0, 2.5, 1.2),
                Vec3::new(3.5, 3.5, 1.5),
                Vec3::new(3.0, 4.5, 1.5),
            ],
            cost: 0.0,
            edges: alloc::vec::Vec::new(),
        }
    }

    fn limits() -> CorridorLimits {
        CorridorLimits::new(0.4, &PlannerConfig::default())
    }

    #[test]
    fn gamma_knots_midpoints_and_domain() {
        let p = plan();
        for (t, x) in p.times.iter().zip(&p.waypoints) {
            assert_eq!(gamma(&p, *t).unwrap(), *x);
        }
        let mid = gamma(&p, 0.625).unwrap();
        assert!((mid - Vec3::new(1.5, 1.25, 1.1)).norm() < 1e-15);
        assert!(gamma(&p, 5.01).is_err());
        assert!(gamma(&p, -0.01).is_err());
    }

    #[test]
    fn gamma_matches_two_point_oracle() {
        let p = plan();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let tau: f64 = rng.gen_range(0.0..5.0);
            let n = ((tau / 1.25).floor() as usize).min(3);
            let s = (tau - 1.25 * n as f64) / 1.25;
            let a = p.waypoints[n];
            let b = p.waypoints[n + 1];
            let oracle = Vec3::new(
                a.x + s * (b.x - a.x),
                a.y + s * (b.y - a.y),
                a.z + s * (b.z - a.z),
            );
            assert!((gamma(&p, tau).unwrap() - oracle).max_elem().abs() <= 1e-12);
            assert!((gamma(&p, tau).unwrap() - oracle).min_elem().abs() <= 1e-12);
        }
    }

    #[test]
    fn sizes_follow_clearance() {
        let mut g = VoxelGrid::new(Vec3::ZERO, 0.4, [20, 20, 10]).unwrap();
        g.fill_box(&Aabb::from_min_max(Vec3::new(0.0, 0.0, 0.0), Vec3::new(8.0, 8.0, 0.3)));
        let f = compute_edf(&g);
        // floor centers at z=0.2; a point at z = 0.2 + √3 sees φ = √3 far from walls
        let z = 0.2 + sqrt(3.0);
        let p = WaypointPlan {
            times: alloc::vec![0.0, 1.0],
            waypoints: alloc::vec![Vec3::new(4.0, 4.0, z), Vec3::new(4.2, 4.0, z)],
            cost: 0.0,
            edges: alloc::vec::Vec::new(),
        };
        let wide = CorridorLimits {
            min_half_extent: 0.2,
            max_half_extent: 10.0,
        };
        let (_, l) = corridor_at(&f, &p, 0.5, 1.0, &wide).unwrap();
        assert!((l.x - 1.0).abs() < 1e-9);
        let z = 0.2 + 0.9;
        let p2 = WaypointPlan {
            waypoints: alloc::vec![Vec3::new(4.0, 4.0, z), Vec3::new(4.2, 4.0, z)],
            ..p.clone()
        };
        let (_, l) = corridor_at(&f, &p2, 0.5, 1.0, &wide).unwrap();
        assert!((l.x - 0.9 / sqrt(3.0)).abs() < 1e-9);
        assert!((l.x - 0.5196).abs() < 1e-4);
        // below the floor
        let p3 = WaypointPlan {
            waypoints: alloc::vec![Vec3::new(4.0, 4.0, 0.45), Vec3::new(4.2, 4.0, 0.45)],
            ..p.clone()
        };
        assert!(matches!(
            corridor_at(&f, &p3, 0.5, 1.0, &wide),
            Err(Error::CorridorCollapsed { .. })
        ));
    }

    #[test]
    fn open_space_counts_and_cap() {
        let g = VoxelGrid::new(Vec3::ZERO, 0.4, [15, 15, 10]).unwrap();
        let f = compute_edf(&g);
        let c = build_corridors(&f, &plan(), 2, 0.9, &limits()).unwrap();
        assert_eq!(c.entries.len(), 8);
        let expected = (0.9 * f.sentinel() / sqrt(3.0)).min(1.0);
        assert!(c.entries.iter().all(|e| e.half_extent == Vec3::splat(expected)));
        assert!(c.entries.windows(2).all(|w| w[1].tau > w[0].tau));
        assert!((c.entries[0].tau - 1.25 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn boxes_stay_inside_clearance_ball() {
        let mut g = VoxelGrid::new(Vec3::ZERO, 0.4, [15, 15, 10]).unwrap();
        g.fill_box(&Aabb::from_min_max(Vec3::new(3.6, 1.6, 0.0), Vec3::new(4.4, 2.4, 4.0)));
        g.fill_box(&Aabb::from_min_max(Vec3::new(0.0, 3.0, 0.0), Vec3::new(1.0, 6.0, 1.0)));
        let f = compute_edf(&g);
        for shrink in [0.5, 0.9, 1.0] {
            let c = build_corridors(&f, &plan(), 3, shrink, &limits()).unwrap();
            for e in &c.entries {
                let phi_c = f.phi(e.center).unwrap();
                let l = e.half_extent.x;
                assert!(sqrt(3.0) * l <= phi_c + 1e-12);
                for corner in 0..8 {
                    let s = |b: usize| if corner >> b & 1 == 1 { 1.0 } else { -1.0 };
                    let p = e.center + Vec3::new(s(0) * l, s(1) * l, s(2) * l);
                    assert!((p - e.center).norm() <= phi_c + 1e-12);
                    if f.contains(p) {
                        assert!(f.phi(p).unwrap() >= 0.0);
                    }
                }
            }
        }
        let small = build_corridors(&f, &plan(), 2, 0.5, &limits()).unwrap();
        let large = build_corridors(&f, &plan(), 2, 0.9, &limits()).unwrap();
        for (a, b) in small.entries.iter().zip(&large.entries) {
            assert!(a.half_extent.x <= b.half_extent.x);
        }
    }
}
