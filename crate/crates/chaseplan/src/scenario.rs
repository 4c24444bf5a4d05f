//! Scenario files.
//!
//! ```json
//! {
//!   "bounds": {"min": [0, 0, 0], "max": [20, 20, 6]},
//!   "resolution": 0.4,
//!   "obstacles": [{"center": [5, 5, 1.5], "half_extent": [1, 1, 1.5]}],
//!   "target_path": [{"t": 0, "pos": [2, 2, 0.5]}, {"t": 20, "pos": [18, 2, 0.5]}],
//!   "chaser_init": {"pos": [2, 0.5, 2], "vel": [0, 0, 0], "acc": [0, 0, 0]},
//!   "config": {"w_v": 7.5}
//! }
//! ```
//!
//! Omitted config keys take the reference defaults; unknown keys are errors.

use std::fs;
use std::path::Path;

use chaseplan_core::trajopt::ChaserState;
use chaseplan_core::world::{Aabb, Scenario, TargetPath};
use chaseplan_core::{PlannerConfig, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_RESOLUTION: f64 = 0.4;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoxFile {
    pub center: [f64; 3],
    pub half_extent: [f64; 3],
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KnotFile {
    pub t: f64,
    pub pos: [f64; 3],
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChaserFile {
    pub pos: [f64; 3],
    #[serde(default)]
    pub vel: [f64; 3],
    #[serde(default)]
    pub acc: [f64; 3],
}

/// Planner parameters under their file names. Every field is optional on
/// input; [`ConfigFile::resolved`] fills the defaults.
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_des: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_safe: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_min_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_max_deg: Option<f64>,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub poly_order: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub corridors_per_segment: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_res: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replan_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corridor_shrink: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_rate: Option<f64>,
}

/// Keys accepted by `--set`, in file order.
pub const CONFIG_KEYS: &[&str] = &[
    "resolution",
    "w_v",
    "w_d",
    "lambda",
    "d_des",
    "d_lower",
    "d_upper",
    "d_max",
    "r_safe",
    "theta_min_deg",
    "theta_max_deg",
    "H",
    "N",
    "K",
    "M",
    "omega_res",
    "replan_slack",
    "corridor_shrink",
    "log_rate",
];

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("override {key}: expected a number, got {value:?}")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| CliError::Usage(format!("override {key}: expected a nonnegative integer, got {value:?}")))
}

impl ConfigFile {
    /// Sets one config key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let f = |v: &mut Option<f64>| -> Result<(), CliError> {
            *v = Some(parse_f64(key, value)?);
            Ok(())
        };
        match key {
            "w_v" => f(&mut self.w_v),
            "w_d" => f(&mut self.w_d),
            "lambda" => f(&mut self.lambda),
            "d_des" => f(&mut self.d_des),
            "d_lower" => f(&mut self.d_lower),
            "d_upper" => f(&mut self.d_upper),
            "d_max" => f(&mut self.d_max),
            "r_safe" => f(&mut self.r_safe),
            "theta_min_deg" => f(&mut self.theta_min_deg),
            "theta_max_deg" => f(&mut self.theta_max_deg),
            "H" => f(&mut self.horizon),
            "omega_res" => f(&mut self.omega_res),
            "replan_slack" => f(&mut self.replan_slack),
            "corridor_shrink" => f(&mut self.corridor_shrink),
            "log_rate" => f(&mut self.log_rate),
            "N" => {
                self.segments = Some(parse_usize(key, value)?);
                Ok(())
            }
            "K" => {
                self.poly_order = Some(parse_usize(key, value)?);
                Ok(())
            }
            "M" => {
                self.corridors_per_segment = Some(parse_usize(key, value)?);
                Ok(())
            }
            _ => Err(CliError::Usage(format!(
                "unknown config key {key:?}; known keys: {}",
                CONFIG_KEYS.join(", ")
            ))),
        }
    }

    /// Copy with every missing key set to its default.
    pub fn resolved(&self) -> ConfigFile {
        let d = PlannerConfig::default();
        ConfigFile {
            w_v: self.w_v.or(Some(d.w_v)),
            w_d: self.w_d.or(Some(d.w_d)),
            lambda: self.lambda.or(Some(d.lambda)),
            d_des: self.d_des.or(Some(d.d_des)),
            d_lower: self.d_lower.or(Some(d.d_lower)),
            d_upper: self.d_upper.or(Some(d.d_upper)),
            d_max: self.d_max.or(Some(d.d_max)),
            r_safe: self.r_safe.or(Some(d.r_safe)),
            theta_min_deg: self.theta_min_deg.or(Some(20.0)),
            theta_max_deg: self.theta_max_deg.or(Some(70.0)),
            horizon: self.horizon.or(Some(d.horizon)),
            segments: self.segments.or(Some(d.segments)),
            poly_order: self.poly_order.or(Some(d.poly_order)),
            corridors_per_segment: self.corridors_per_segment.or(Some(d.corridors_per_segment)),
            omega_res: self.omega_res.or(Some(d.candidate_spacing)),
            replan_slack: self.replan_slack.or(Some(d.replan_slack)),
            corridor_shrink: self.corridor_shrink.or(Some(d.corridor_shrink)),
            log_rate: self.log_rate.or(Some(d.log_rate)),
        }
    }

    pub fn to_planner_config(&self) -> PlannerConfig {
        let d = PlannerConfig::default();
        PlannerConfig {
            horizon: self.horizon.unwrap_or(d.horizon),
            segments: self.segments.unwrap_or(d.segments),
            w_v: self.w_v.unwrap_or(d.w_v),
            w_d: self.w_d.unwrap_or(d.w_d),
            lambda: self.lambda.unwrap_or(d.lambda),
            d_des: self.d_des.unwrap_or(d.d_des),
            d_lower: self.d_lower.unwrap_or(d.d_lower),
            d_upper: self.d_upper.unwrap_or(d.d_upper),
            d_max: self.d_max.unwrap_or(d.d_max),
            r_safe: self.r_safe.unwrap_or(d.r_safe),
            theta_min: self.theta_min_deg.map_or(d.theta_min, f64::to_radians),
            theta_max: self.theta_max_deg.map_or(d.theta_max, f64::to_radians),
            poly_order: self.poly_order.unwrap_or(d.poly_order),
            corridors_per_segment: self.corridors_per_segment.unwrap_or(d.corridors_per_segment),
            candidate_spacing: self.omega_res.unwrap_or(d.candidate_spacing),
            replan_slack: self.replan_slack.unwrap_or(d.replan_slack),
            corridor_shrink: self.corridor_shrink.unwrap_or(d.corridor_shrink),
            log_rate: self.log_rate.unwrap_or(d.log_rate),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub bounds: BoundsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(default)]
    pub obstacles: Vec<BoxFile>,
    pub target_path: Vec<KnotFile>,
    pub chaser_init: ChaserFile,
    #[serde(default)]
    pub config: ConfigFile,
}

/// Resolved parameters echoed next to every output.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EffectiveConfig {
    pub resolution: f64,
    #[serde(flatten)]
    pub config: ConfigFile,
}

#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub effective: EffectiveConfig,
}

impl ScenarioFile {
    /// Parses JSON text, reporting the failing field path and position.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Scenario(format!(
                "parse error at {path} (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), CliError> {
        for o in overrides {
            let o = o.as_ref();
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("override {o:?} is not of the form key=value")))?;
            let key = key.trim();
            if key == "resolution" {
                self.resolution = Some(parse_f64(key, value)?);
            } else {
                self.config.set(key, value)?;
            }
        }
        Ok(())
    }

    /// Builds and validates the planning scenario.
    pub fn into_scenario(self) -> Result<LoadedScenario, CliError> {
        let config = self.config.resolved();
        let resolution = self.resolution.unwrap_or(DEFAULT_RESOLUTION);
        let knots = self
            .target_path
            .iter()
            .map(|k| (k.t, Vec3::from_array(k.pos)))
            .collect();
        let c = &self.chaser_init;
        let start = self.target_path.first().map_or(0.0, |k| k.t);
        let scenario = Scenario {
            bounds_min: Vec3::from_array(self.bounds.min),
            bounds_max: Vec3::from_array(self.bounds.max),
            resolution,
            obstacles: self
                .obstacles
                .iter()
                .map(|b| Aabb::new(Vec3::from_array(b.center), Vec3::from_array(b.half_extent)))
                .collect(),
            target_path: TargetPath::new(knots)?,
            chaser_init: ChaserState {
                position: Vec3::from_array(c.pos),
                velocity: Vec3::from_array(c.vel),
                acceleration: Vec3::from_array(c.acc),
                stamp: start,
            },
            config: config.to_planner_config(),
        }
        .validate()?;
        Ok(LoadedScenario {
            scenario,
            effective: EffectiveConfig { resolution, config },
        })
    }
}

/// Reads, overrides and validates a scenario file.
pub fn load_scenario<S: AsRef<str>>(path: &Path, overrides: &[S]) -> Result<LoadedScenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut file = ScenarioFile::parse(&text)?;
    file.apply_overrides(overrides)?;
    file.into_scenario()
}
