use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chaseplan_core::fields::{compute_edf, DistanceField};
use chaseplan_core::mission::{
    compute_metrics, replan_once, run_mission_with_field, with_visibility_weight, Clock, ComparisonRow,
};
use chaseplan_core::world::{voxelize, Scenario, DEFAULT_VOXEL_BUDGET};
use chaseplan_core::Vec3;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::CliError;
use crate::output::{
    comparison_json, executed_trajectory_json, metrics_json, mission_timings_json, plan_json, read_log_csv,
    write_json, write_log_csv, write_slice_csv, write_trajectory_csv,
};
use crate::scenario::{load_scenario, LoadedScenario};

/// Visibility-aware chasing planner.
#[derive(Debug, Parser)]
#[command(name = "chaseplan", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan once at time --t and write plan_0.json (waypoints, edge costs, corridors, trajectory).
    Plan {
        #[command(flatten)]
        common: Common,
        /// Replan time in seconds; the chaser starts at its initial state at this time.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
    },
    /// Run the receding-horizon mission; writes log.csv, metrics.json, timings.json,
    /// trajectory.json, trajectory.csv and plan_<k>.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Sample rate of trajectory.csv in Hz (default: the log rate).
        #[arg(long)]
        trajectory_rate: Option<f64>,
    },
    /// Run one mission per visibility weight and write comparison.json.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated visibility weights, e.g. 1.0,7.5.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        wv: Vec<f64>,
    },
    /// Dump horizontal slices of the distance field (phi_slice.csv) and, with
    /// --target, of the visibility score towards that point (psi_slice.csv).
    Fields {
        #[command(flatten)]
        common: Common,
        /// Slice height in meters.
        #[arg(long)]
        slice_z: f64,
        /// Target position x,y,z for the visibility slice.
        #[arg(long, value_parser = parse_xyz, allow_hyphen_values = true)]
        target: Option<[f64; 3]>,
    },
    /// Recompute metrics.json from a log.csv.
    Metrics {
        /// Mission log written by `simulate`.
        #[arg(long)]
        log: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Config override key=value (repeatable), e.g. --set w_v=7.5.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

struct Wall(Instant);

impl Clock for Wall {
    fn now(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn wall() -> Wall {
    Wall(Instant::now())
}

fn prepare(common: &Common) -> Result<LoadedScenario, CliError> {
    let loaded = load_scenario(&common.scenario, &common.overrides)?;
    fs::create_dir_all(&common.out).map_err(|e| CliError::io(&common.out, e))?;
    write_json(&common.out.join("effective_config.json"), &loaded.effective)?;
    Ok(loaded)
}

fn field_for(scenario: &Scenario) -> Result<(DistanceField, f64), CliError> {
    let grid = voxelize(scenario, DEFAULT_VOXEL_BUDGET)?;
    let t = Instant::now();
    let field = compute_edf(&grid);
    Ok((field, t.elapsed().as_secs_f64()))
}

/// Runs a parsed command and returns the human-readable summary.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Plan { common, t } => plan(&common, t),
        Command::Simulate { common, trajectory_rate } => simulate(&common, trajectory_rate),
        Command::Compare { common, wv } => compare(&common, &wv),
        Command::Fields { common, slice_z, target } => fields(&common, slice_z, target),
        Command::Metrics { log, out } => metrics(&log, &out),
    }
}

fn plan(common: &Common, t: f64) -> Result<String, CliError> {
    let s = prepare(common)?.scenario;
    let (field, edf) = field_for(&s)?;
    let state = chaseplan_core::trajopt::ChaserState {
        stamp: t,
        ..s.chaser_init
    };
    let record = replan_once(&s, &field, state, &mut wall())
        .map_err(|(stage, source)| CliError::Stage { stage, trigger: t, source })?;
    write_json(&common.out.join("plan_0.json"), &plan_json(&record))?;
    write_json(
        &common.out.join("timings.json"),
        &json!({
            "edf": edf,
            "stages": {
                "candidates": record.timings.candidates,
                "graph": record.timings.graph,
                "search": record.timings.search,
                "corridor": record.timings.corridor,
                "qp": record.timings.qp,
                "total": record.timings.total(),
            }
        }),
    )?;
    Ok(format!(
        "plan at t = {t}: cost {:.4}, candidates per layer {:?}, {} edges, {} corridors, {:.3} s\n",
        record.plan.cost,
        record.layer_sizes,
        record.edge_count,
        record.corridors.entries.len(),
        record.timings.total()
    ))
}

fn simulate(common: &Common, trajectory_rate: Option<f64>) -> Result<String, CliError> {
    let s = prepare(common)?.scenario;
    let (field, edf) = field_for(&s)?;
    let out = &common.out;
    let (mut log, metrics) = match run_mission_with_field(&s, &field, &mut wall()) {
        Ok(r) => r,
        Err(e) => {
            if !e.partial.samples.is_empty() {
                write_log_csv(&out.join("log_partial.csv"), &e.partial)?;
            }
            return Err(e.into());
        }
    };
    log.edf_seconds = edf;
    write_log_csv(&out.join("log.csv"), &log)?;
    write_json(&out.join("metrics.json"), &metrics_json(&metrics))?;
    write_json(&out.join("timings.json"), &mission_timings_json(&log, &metrics))?;
    let (start, end) = (s.target_path.start_time(), s.target_path.end_time());
    write_json(&out.join("trajectory.json"), &executed_trajectory_json(&log, end))?;
    let rate = trajectory_rate.unwrap_or(s.config.log_rate);
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(CliError::Usage("--trajectory-rate must be positive".into()));
    }
    write_trajectory_csv(&out.join("trajectory.csv"), &log, &s.target_path, start, end, rate)?;
    for r in &log.replans {
        write_json(&out.join(format!("plan_{}.json", r.index)), &plan_json(r))?;
    }
    Ok(summary(&metrics_json(&metrics)))
}

fn summary(m: &serde_json::Value) -> String {
    let mut s = String::new();
    for (k, v) in m.as_object().into_iter().flatten() {
        s.push_str(&format!("{k}: {v}\n"));
    }
    s
}

fn compare(common: &Common, weights: &[f64]) -> Result<String, CliError> {
    let s = prepare(common)?.scenario;
    if weights.is_empty() {
        return Err(CliError::Usage("--wv needs at least one weight".into()));
    }
    let (field, _) = field_for(&s)?;
    let rows: Vec<ComparisonRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = weights
            .iter()
            .map(|&w_v| {
                let (s, field) = (&s, &field);
                scope.spawn(move || ComparisonRow {
                    w_v,
                    outcome: with_visibility_weight(s, w_v)
                        .and_then(|sw| run_mission_with_field(&sw, field, &mut wall()).map(|(_, m)| m)),
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("mission thread panicked")).collect()
    });
    let report = comparison_json(&rows);
    write_json(&common.out.join("comparison.json"), &report)?;
    let mut text = String::new();
    for r in &rows {
        match &r.outcome {
            Ok(m) => text.push_str(&format!(
                "w_v = {}: occlusion {:.3} s, avg psi {:.3} m, distance {:.3} m, min phi {:.3} m\n",
                r.w_v, m.occlusion_duration, m.average_visibility, m.travel_distance, m.min_chaser_clearance
            )),
            Err(e) => text.push_str(&format!("w_v = {}: failed: {e}\n", r.w_v)),
        }
    }
    Ok(text)
}

fn parse_xyz(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("{c:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected x,y,z, got {} values", v.len()))
}

fn fields(common: &Common, slice_z: f64, target: Option<[f64; 3]>) -> Result<String, CliError> {
    let s = prepare(common)?.scenario;
    let (field, _) = field_for(&s)?;
    let g = field.grid();
    if !(slice_z >= g.origin().z && slice_z <= g.extent_max().z) {
        return Err(CliError::Usage(format!("--slice-z {slice_z} lies outside the map")));
    }
    write_slice_csv(&common.out.join("phi_slice.csv"), &field, slice_z, |p| field.phi(p))?;
    let mut text = String::from("wrote phi_slice.csv\n");
    if let Some(t) = target {
        let xp = Vec3::new(t[0], t[1], t[2]);
        if !field.contains(xp) {
            return Err(CliError::Usage(format!("--target {t:?} lies outside the map")));
        }
        write_slice_csv(&common.out.join("psi_slice.csv"), &field, slice_z, |p| field.psi_at(p, xp))?;
        text.push_str("wrote psi_slice.csv\n");
    }
    Ok(text)
}

fn metrics(log: &Path, out: &Path) -> Result<String, CliError> {
    let log = read_log_csv(log)?;
    let m = compute_metrics(&log);
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut j = metrics_json(&m);
    // a bare log carries no replan records
    j.as_object_mut().map(|o| o.remove("replans"));
    write_json(&out.join("metrics.json"), &j)?;
    Ok(summary(&j))
}
