//! Receding-horizon chase: forecast, preplan, corridors and trajectory at
//! every trigger, followed by exact kinematic execution of the first
//! `H − ε` seconds and fixed-rate logging.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::config::PlannerConfig;
use crate::corridor::{build_corridors, CorridorLimits, CorridorSequence};
use crate::error::{Error, Result};
use crate::fields::{compute_edf, DistanceField};
use crate::math::{floor, Vec3};
use crate::preplan::{build_graph_from_layers, forecast_window, generate_layers, shortest_path, WaypointPlan};
use crate::trajopt::{generate_trajectory, yaw_towards, ChaserState, PiecewisePolynomial};
use crate::world::{voxelize, Scenario, DEFAULT_VOXEL_BUDGET};

/// Monotonic wall clock in seconds. Only used for stage timings; nothing
/// else in the mission depends on it.
pub trait Clock {
    fn now(&mut self) -> f64;
}

/// Clock that always reads zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now(&mut self) -> f64 {
        0.0
    }
}

/// Pipeline stage, used for timings and error provenance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Voxelize,
    Edf,
    Forecast,
    Candidates,
    Graph,
    Search,
    Corridor,
    Qp,
    Execute,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Voxelize => "voxelize",
            Stage::Edf => "edf",
            Stage::Forecast => "forecast",
            Stage::Candidates => "candidates",
            Stage::Graph => "graph",
            Stage::Search => "search",
            Stage::Corridor => "corridor",
            Stage::Qp => "qp",
            Stage::Execute => "execute",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Seconds spent per stage of one replan (or averaged over replans).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    /// Forecast plus candidate generation with the visibility filter.
    pub candidates: f64,
    pub graph: f64,
    pub search: f64,
    pub corridor: f64,
    pub qp: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.candidates + self.graph + self.search + self.corridor + self.qp
    }
}

/// Everything produced by one replan.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplanRecord {
    pub index: usize,
    pub trigger: f64,
    pub start_state: ChaserState,
    pub target_forecast: Vec<Vec3>,
    pub layer_sizes: Vec<usize>,
    pub edge_count: usize,
    pub plan: WaypointPlan,
    pub corridors: CorridorSequence,
    pub trajectory: PiecewisePolynomial,
    pub timings: StageTimings,
}

/// One log row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSample {
    pub t: f64,
    pub chaser_position: Vec3,
    pub chaser_velocity: Vec3,
    pub chaser_yaw: f64,
    pub target_position: Vec3,
    /// `ψ(x_c; x_p)`
    pub visibility: f64,
    /// `φ(x_c)`
    pub chaser_clearance: f64,
    /// `φ(x_p)`
    pub target_clearance: f64,
    /// `φ(x_c) < r_safe`
    pub below_safe: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MissionLog {
    pub samples: Vec<LogSample>,
    pub triggers: Vec<f64>,
    pub replans: Vec<ReplanRecord>,
    pub edf_seconds: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MissionMetrics {
    pub duration: f64,
    pub travel_distance: f64,
    pub average_speed: f64,
    pub average_visibility: f64,
    pub occlusion_duration: f64,
    pub min_chaser_clearance: f64,
    pub average_target_clearance: f64,
    pub samples: usize,
    pub samples_below_safe: usize,
    pub replans: usize,
    pub edf_seconds: f64,
    pub average_timings: StageTimings,
}

/// Mission abort: failing stage, the trigger it happened at, the cause and
/// everything logged up to that point.
#[derive(Clone, Debug, PartialEq)]
pub struct MissionError {
    pub stage: Stage,
    pub trigger: f64,
    pub source: Error,
    pub partial: Box<MissionLog>,
}

impl fmt::Display for MissionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed at t = {}: {}", self.stage, self.trigger, self.source)
    }
}

impl core::error::Error for MissionError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Replan trigger times `start + k·(H − ε)` strictly before `end`.
pub fn trigger_times(start: f64, end: f64, config: &PlannerConfig) -> Vec<f64> {
    let window = config.execution_window();
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = start + k as f64 * window;
        if t >= end - 1e-9 && k > 0 {
            break;
        }
        out.push(t);
        k += 1;
        if t >= end {
            break;
        }
    }
    out
}

/// Log sample times `start + j/rate` up to `end`, plus `end` itself if it
/// falls between grid points.
pub fn sample_times(start: f64, end: f64, rate: f64) -> Vec<f64> {
    let dt = 1.0 / rate;
    let count = floor((end - start) * rate + 1e-9) as usize;
    let mut out: Vec<f64> = (0..=count).map(|j| start + j as f64 * dt).collect();
    if let Some(&last) = out.last() {
        if end - last > 1e-9 {
            out.push(end);
        }
    }
    out
}

/// Everything needed to run one replan.
struct Replanner<'a> {
    field: &'a DistanceField,
    scenario: &'a Scenario,
    limits: CorridorLimits,
}

impl Replanner<'_> {
    fn replan(
        &self,
        index: usize,
        state: ChaserState,
        clock: &mut dyn Clock,
    ) -> core::result::Result<ReplanRecord, (Stage, Error)> {
        let cfg = &self.scenario.config;
        let t = state.stamp;
        let c0 = clock.now();
        let forecast = forecast_window(&self.scenario.target_path, t, cfg.horizon, cfg.segments)
            .map_err(|e| (Stage::Forecast, e))?;
        let layers = generate_layers(self.field, &forecast, cfg).map_err(|e| (Stage::Candidates, e))?;
        let c1 = clock.now();
        let graph = build_graph_from_layers(self.field, state.position, &forecast, &layers, cfg)
            .map_err(|e| (Stage::Graph, e))?;
        let c2 = clock.now();
        let plan = shortest_path(&graph).map_err(|e| (Stage::Search, e))?;
        let c3 = clock.now();
        let corridors = build_corridors(self.field, &plan, cfg.corridors_per_segment, cfg.corridor_shrink, &self.limits)
            .map_err(|e| (Stage::Corridor, e))?;
        let c4 = clock.now();
        let trajectory = generate_trajectory(self.field, &state, &plan, &corridors, cfg).map_err(|e| (Stage::Qp, e))?;
        let c5 = clock.now();
        Ok(ReplanRecord {
            index,
            trigger: t,
            start_state: state,
            target_forecast: forecast.samples,
            layer_sizes: graph.layer_sizes(),
            edge_count: graph.edge_count(),
            plan,
            corridors,
            trajectory,
            timings: StageTimings {
                candidates: c1 - c0,
                graph: c2 - c1,
                search: c3 - c2,
                corridor: c4 - c3,
                qp: c5 - c4,
            },
        })
    }
}

/// Runs a single replan at the chaser state's stamp.
pub fn replan_once(
    scenario: &Scenario,
    field: &DistanceField,
    state: ChaserState,
    clock: &mut dyn Clock,
) -> core::result::Result<ReplanRecord, (Stage, Error)> {
    Replanner {
        field,
        scenario,
        limits: CorridorLimits::new(field.resolution(), &scenario.config),
    }
    .replan(0, state, clock)
}

/// Voxelizes the scenario, computes the distance field once, then runs the
/// mission.
pub fn run_mission(
    scenario: &Scenario,
    clock: &mut dyn Clock,
) -> core::result::Result<(MissionLog, MissionMetrics), MissionError> {
    let start = scenario.target_path.start_time();
    let fail = |stage, source| MissionError {
        stage,
        trigger: start,
        source,
        partial: Box::default(),
    };
    let grid = voxelize(scenario, DEFAULT_VOXEL_BUDGET).map_err(|e| fail(Stage::Voxelize, e))?;
    let c0 = clock.now();
    let field = compute_edf(&grid);
    let edf_seconds = clock.now() - c0;
    let (mut log, metrics) = run_mission_with_field(scenario, &field, clock)?;
    log.edf_seconds = edf_seconds;
    let metrics = MissionMetrics { edf_seconds, ..metrics };
    Ok((log, metrics))
}

/// Runs the mission on a precomputed distance field.
pub fn run_mission_with_field(
    scenario: &Scenario,
    field: &DistanceField,
    clock: &mut dyn Clock,
) -> core::result::Result<(MissionLog, MissionMetrics), MissionError> {
    let cfg = &scenario.config;
    let path = &scenario.target_path;
    let (start, end) = (path.start_time(), path.end_time());
    let mut log = MissionLog::default();
    let abort = |log: MissionLog, stage, trigger, source| MissionError {
        stage,
        trigger,
        source,
        partial: Box::new(log),
    };
    if let Err(e) = cfg.validate() {
        return Err(abort(log, Stage::Forecast, start, e));
    }
    if end - start < cfg.horizon - 1e-9 {
        return Err(abort(
            log,
            Stage::Forecast,
            start,
            Error::InvalidScenario(alloc::format!(
                "target path lasts {} s, shorter than the horizon {} s",
                end - start,
                cfg.horizon
            )),
        ));
    }

    let planner = Replanner {
        field,
        scenario,
        limits: CorridorLimits::new(field.resolution(), cfg),
    };
    let triggers = trigger_times(start, end, cfg);
    let times = sample_times(start, end, cfg.log_rate);
    let mut next_sample = 0usize;
    let mut yaw = 0.0;
    let mut state = ChaserState {
        stamp: start,
        ..scenario.chaser_init
    };

    for (k, &trigger) in triggers.iter().enumerate() {
        state.stamp = trigger;
        log.triggers.push(trigger);
        let record = match planner.replan(k, state, clock) {
            Ok(r) => r,
            Err((stage, e)) => return Err(abort(log, stage, trigger, e)),
        };
        let until = triggers.get(k + 1).copied().unwrap_or(end);
        let last_window = k + 1 == triggers.len();
        let traj = &record.trajectory;
        while next_sample < times.len() {
            let t = times[next_sample];
            if !(t < until || (last_window && t <= end)) {
                break;
            }
            let sample = (|| -> Result<LogSample> {
                let c = traj.state_at(t)?;
                let p = path.position(t);
                yaw = yaw_towards(c.position, p, yaw);
                let phi_c = field.phi(c.position)?;
                Ok(LogSample {
                    t,
                    chaser_position: c.position,
                    chaser_velocity: c.velocity,
                    chaser_yaw: yaw,
                    target_position: p,
                    visibility: field.psi_at(c.position, p)?,
                    chaser_clearance: phi_c,
                    target_clearance: field.phi(p)?,
                    below_safe: phi_c < cfg.r_safe,
                })
            })();
            match sample {
                Ok(s) => log.samples.push(s),
                Err(e) => return Err(abort(log, Stage::Execute, trigger, e)),
            }
            next_sample += 1;
        }
        if !last_window {
            state = match traj.state_at(until) {
                Ok(s) => s,
                Err(e) => return Err(abort(log, Stage::Execute, trigger, e)),
            };
        }
        log.replans.push(record);
    }

    let metrics = compute_metrics(&log);
    Ok((log, metrics))
}

fn trapezoid(samples: &[LogSample], f: impl Fn(&LogSample) -> f64) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t))
        .fold(0.0, |a, b| a + b)
}

/// Summary statistics of a log. Averages are trapezoidal time averages (the
/// single value for a one-sample log); occlusion time sums the sample
/// intervals whose two endpoints both have `ψ ≤ 0`.
pub fn compute_metrics(log: &MissionLog) -> MissionMetrics {
    let s = &log.samples;
    let mut m = MissionMetrics {
        samples: s.len(),
        replans: log.replans.len(),
        edf_seconds: log.edf_seconds,
        ..Default::default()
    };
    if s.is_empty() {
        return m;
    }
    m.duration = s[s.len() - 1].t - s[0].t;
    m.travel_distance = s
        .windows(2)
        .map(|w| w[0].chaser_position.distance(w[1].chaser_position))
        .fold(0.0, |a, b| a + b);
    let average = |f: &dyn Fn(&LogSample) -> f64| {
        if m.duration > 0.0 {
            trapezoid(s, f) / m.duration
        } else {
            f(&s[0])
        }
    };
    m.average_speed = average(&|x| x.chaser_velocity.norm());
    m.average_visibility = average(&|x| x.visibility.max(0.0));
    m.average_target_clearance = average(&|x| x.target_clearance);
    m.occlusion_duration = s
        .windows(2)
        .filter(|w| w[0].visibility <= 0.0 && w[1].visibility <= 0.0)
        .map(|w| w[1].t - w[0].t)
        .fold(0.0, |a, b| a + b);
    m.min_chaser_clearance = s.iter().map(|x| x.chaser_clearance).fold(f64::INFINITY, f64::min);
    m.samples_below_safe = s.iter().filter(|x| x.below_safe).count();
    if !log.replans.is_empty() {
        let n = log.replans.len() as f64;
        let mut t = StageTimings::default();
        for r in &log.replans {
            t.candidates += r.timings.candidates;
            t.graph += r.timings.graph;
            t.search += r.timings.search;
            t.corridor += r.timings.corridor;
            t.qp += r.timings.qp;
        }
        m.average_timings = StageTimings {
            candidates: t.candidates / n,
            graph: t.graph / n,
            search: t.search / n,
            corridor: t.corridor / n,
            qp: t.qp / n,
        };
    }
    m
}

/// Result of one mission in a weight sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub w_v: f64,
    pub outcome: core::result::Result<MissionMetrics, MissionError>,
}

/// Runs the scenario once per visibility weight, everything else fixed.
/// A failing run is reported in its row and does not stop the others.
pub fn compare_runs(
    scenario: &Scenario,
    field: &DistanceField,
    weights: &[f64],
    clock: &mut dyn Clock,
) -> Result<Vec<ComparisonRow>> {
    if weights.is_empty() {
        return Err(Error::InvalidConfig {
            field: "w_v",
            reason: "at least one weight is required".into(),
        });
    }
    Ok(weights
        .iter()
        .map(|&w_v| ComparisonRow {
            w_v,
            outcome: with_visibility_weight(scenario, w_v)
                .and_then(|s| run_mission_with_field(&s, field, clock).map(|(_, m)| m)),
        })
        .collect())
}

/// Copy of `scenario` with `w_v` replaced, validated.
pub fn with_visibility_weight(scenario: &Scenario, w_v: f64) -> core::result::Result<Scenario, MissionError> {
    let mut s = scenario.clone();
    s.config.w_v = w_v;
    s.config.validate().map_err(|source| MissionError {
        stage: Stage::Forecast,
        trigger: scenario.target_path.start_time(),
        source,
        partial: Box::default(),
    })?;
    Ok(s)
}
