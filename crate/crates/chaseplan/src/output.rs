//! JSON and CSV artifacts. Floats are written in shortest round-trip form,
//! so identical runs give identical bytes.

use std::fs;
use std::path::Path;

use chaseplan_core::corridor::CorridorSequence;
use chaseplan_core::fields::DistanceField;
use chaseplan_core::mission::{ComparisonRow, LogSample, MissionLog, MissionMetrics, ReplanRecord, StageTimings};
use chaseplan_core::preplan::EdgeCost;
use chaseplan_core::trajopt::{yaw_towards, ChaserState, PiecewisePolynomial};
use chaseplan_core::world::TargetPath;
use chaseplan_core::Vec3;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::CliError;

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn v3(v: Vec3) -> [f64; 3] {
    v.to_array()
}

fn state_json(s: &ChaserState) -> Value {
    json!({
        "t": s.stamp,
        "pos": v3(s.position),
        "vel": v3(s.velocity),
        "acc": v3(s.acceleration),
    })
}

fn edge_json(e: &EdgeCost) -> Value {
    json!({
        "interval": e.interval,
        "visibility": e.visibility,
        "tracking": e.tracking,
        "total": e.total,
    })
}

pub fn corridors_json(c: &CorridorSequence) -> Value {
    json!({
        "shrink": c.shrink,
        "boxes": c.entries.iter().map(|e| json!({
            "tau": e.tau,
            "segment": e.segment,
            "center": v3(e.center),
            "half_extent": v3(e.half_extent),
        })).collect::<Vec<_>>(),
    })
}

/// Coefficients per segment and axis; segment `n` is
/// `Σ_k c[k]·(t − knots[n])^k` on `[knots[n], knots[n+1]]`.
pub fn trajectory_json(p: &PiecewisePolynomial) -> Value {
    let segments: Vec<Value> = (0..p.segments())
        .map(|s| {
            json!({
                "x": p.coefficients(s, 0),
                "y": p.coefficients(s, 1),
                "z": p.coefficients(s, 2),
            })
        })
        .collect();
    json!({
        "convention": "segment n: p(t) = sum_k c[k] * (t - knots[n])^k for t in [knots[n], knots[n+1]]",
        "order": p.order(),
        "knots": p.knots(),
        "segments": segments,
    })
}

/// Plan record without timings (those go to `timings.json`).
pub fn plan_json(r: &ReplanRecord) -> Value {
    json!({
        "index": r.index,
        "trigger": r.trigger,
        "start_state": state_json(&r.start_state),
        "target_forecast": r.target_forecast.iter().map(|p| v3(*p)).collect::<Vec<_>>(),
        "candidate_counts": r.layer_sizes,
        "edge_count": r.edge_count,
        "times": r.plan.times,
        "waypoints": r.plan.waypoints.iter().map(|p| v3(*p)).collect::<Vec<_>>(),
        "cost": r.plan.cost,
        "edge_costs": r.plan.edges.iter().map(edge_json).collect::<Vec<_>>(),
        "corridors": corridors_json(&r.corridors),
        "trajectory": trajectory_json(&r.trajectory),
    })
}

fn timings_json(t: &StageTimings) -> Value {
    json!({
        "candidates": t.candidates,
        "graph": t.graph,
        "search": t.search,
        "corridor": t.corridor,
        "qp": t.qp,
        "total": t.total(),
    })
}

pub fn mission_timings_json(log: &MissionLog, metrics: &MissionMetrics) -> Value {
    json!({
        "edf": log.edf_seconds,
        "average": timings_json(&metrics.average_timings),
        "replans": log.replans.iter().map(|r| json!({
            "index": r.index,
            "trigger": r.trigger,
            "stages": timings_json(&r.timings),
        })).collect::<Vec<_>>(),
    })
}

/// Deterministic metric fields (no wall-clock timings).
pub fn metrics_json(m: &MissionMetrics) -> Value {
    json!({
        "duration": m.duration,
        "travel_distance": m.travel_distance,
        "average_speed": m.average_speed,
        "average_visibility": m.average_visibility,
        "occlusion_duration": m.occlusion_duration,
        "min_chaser_clearance": m.min_chaser_clearance,
        "average_target_clearance": m.average_target_clearance,
        "samples": m.samples,
        "samples_below_r_safe": m.samples_below_safe,
        "replans": m.replans,
    })
}

pub fn comparison_json(rows: &[ComparisonRow]) -> Value {
    json!({
        "runs": rows.iter().map(|r| match &r.outcome {
            Ok(m) => json!({"w_v": r.w_v, "metrics": metrics_json(m)}),
            Err(e) => json!({
                "w_v": r.w_v,
                "error": {"stage": e.stage.name(), "trigger_time": e.trigger, "message": e.source.to_string()},
            }),
        }).collect::<Vec<_>>(),
    })
}

/// One `log.csv` row.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub chaser_x: f64,
    pub chaser_y: f64,
    pub chaser_z: f64,
    pub chaser_vx: f64,
    pub chaser_vy: f64,
    pub chaser_vz: f64,
    pub chaser_yaw: f64,
    pub target_x: f64,
    pub target_y: f64,
    pub target_z: f64,
    pub psi: f64,
    pub phi_chaser: f64,
    pub phi_target: f64,
    pub below_r_safe: u8,
    pub replan: usize,
}

impl LogRow {
    pub fn from_sample(s: &LogSample, replan: usize) -> Self {
        LogRow {
            t: s.t,
            chaser_x: s.chaser_position.x,
            chaser_y: s.chaser_position.y,
            chaser_z: s.chaser_position.z,
            chaser_vx: s.chaser_velocity.x,
            chaser_vy: s.chaser_velocity.y,
            chaser_vz: s.chaser_velocity.z,
            chaser_yaw: s.chaser_yaw,
            target_x: s.target_position.x,
            target_y: s.target_position.y,
            target_z: s.target_position.z,
            psi: s.visibility,
            phi_chaser: s.chaser_clearance,
            phi_target: s.target_clearance,
            below_r_safe: u8::from(s.below_safe),
            replan,
        }
    }

    pub fn to_sample(&self) -> LogSample {
        LogSample {
            t: self.t,
            chaser_position: Vec3::new(self.chaser_x, self.chaser_y, self.chaser_z),
            chaser_velocity: Vec3::new(self.chaser_vx, self.chaser_vy, self.chaser_vz),
            chaser_yaw: self.chaser_yaw,
            target_position: Vec3::new(self.target_x, self.target_y, self.target_z),
            visibility: self.psi,
            chaser_clearance: self.phi_chaser,
            target_clearance: self.phi_target,
            below_safe: self.below_r_safe != 0,
        }
    }
}

/// Index of the replan whose window contains `t`.
fn active_replan(triggers: &[f64], t: f64) -> usize {
    triggers.partition_point(|&k| k <= t).saturating_sub(1)
}

pub fn write_log_csv(path: &Path, log: &MissionLog) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for s in &log.samples {
        w.serialize(LogRow::from_sample(s, active_replan(&log.triggers, s.t)))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_log_csv(path: &Path) -> Result<MissionLog, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut samples = Vec::new();
    for row in r.deserialize::<LogRow>() {
        samples.push(row.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?.to_sample());
    }
    if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(CliError::Usage(format!("{}: timestamps must increase", path.display())));
    }
    Ok(MissionLog {
        samples,
        ..Default::default()
    })
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Executed trajectory: each replan's polynomial over the window in which it
/// was flown.
pub fn executed_trajectory_json(log: &MissionLog, end: f64) -> Value {
    let pieces: Vec<Value> = log
        .replans
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let until = log.triggers.get(k + 1).copied().unwrap_or(end);
            json!({
                "replan": r.index,
                "valid_from": r.trigger,
                "valid_until": until,
                "trajectory": trajectory_json(&r.trajectory),
            })
        })
        .collect();
    json!({ "pieces": pieces })
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    yaw: f64,
    speed: f64,
}

/// Samples the executed trajectory at `rate` Hz as `t,x,y,z,yaw,speed`.
pub fn write_trajectory_csv(
    path: &Path,
    log: &MissionLog,
    target: &TargetPath,
    start: f64,
    end: f64,
    rate: f64,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut yaw = 0.0;
    for t in chaseplan_core::mission::sample_times(start, end, rate) {
        let k = active_replan(&log.triggers, t);
        let Some(r) = log.replans.get(k) else { break };
        let s = r.trajectory.state_at(t)?;
        yaw = yaw_towards(s.position, target.position(t), yaw);
        w.serialize(TrajectoryRow {
            t,
            x: s.position.x,
            y: s.position.y,
            z: s.position.z,
            yaw,
            speed: s.velocity.norm(),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Horizontal slice at height `z` through voxel-center columns: a comment
/// line with origin and resolution, then `i,j,x,y,z,value` in row-major
/// order (`j` outer, `i` inner).
pub fn write_slice_csv(
    path: &Path,
    field: &DistanceField,
    z: f64,
    value: impl Fn(Vec3) -> Result<f64, chaseplan_core::Error>,
) -> Result<(), CliError> {
    let g = field.grid();
    let [nx, ny, _] = g.dims();
    let (o, res) = (g.origin(), g.resolution());
    let mut out = format!(
        "# origin_x={},origin_y={},z={},resolution={},nx={},ny={}\ni,j,x,y,z,value\n",
        o.x, o.y, z, res, nx, ny
    );
    for j in 0..ny {
        for i in 0..nx {
            let p = Vec3::new(o.x + (i as f64 + 0.5) * res, o.y + (j as f64 + 0.5) * res, z);
            let v = value(p)?;
            out.push_str(&format!("{i},{j},{},{},{},{}\n", p.x, p.y, z, v));
        }
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}
