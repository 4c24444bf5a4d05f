use std::io;
use std::path::Path;

use chaseplan_core::mission::{MissionError, Stage};
use chaseplan_core::Error;
use serde_json::json;

/// Bad invocation or invalid input.
pub const EXIT_USAGE: i32 = 2;
/// The planner found no feasible plan or trajectory.
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{stage} failed at t = {trigger}: {source}")]
    Stage { stage: Stage, trigger: f64, source: Error },
}

impl From<MissionError> for CliError {
    fn from(e: MissionError) -> Self {
        CliError::Stage {
            stage: e.stage,
            trigger: e.trigger,
            source: e.source,
        }
    }
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidScenario(_)
            | Error::NonmonotonicTargetTimes { .. }
            | Error::ChaserInObstacle { .. }
            | Error::InvalidConfig { .. }
            | Error::VoxelBudget { .. }
            | Error::EmptyTargetPath
    )
}

impl CliError {
    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Scenario(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) | CliError::Stage { source: e, .. } => {
                if is_input_error(e) {
                    EXIT_USAGE
                } else {
                    EXIT_INFEASIBLE
                }
            }
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Scenario(_) => "scenario",
            CliError::Io { .. } => "io",
            CliError::Core(e) | CliError::Stage { source: e, .. } if is_input_error(e) => "scenario",
            CliError::Core(_) | CliError::Stage { .. } => "planning",
        }
    }

    /// Machine-readable form written to standard error.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        match self {
            CliError::Stage { stage, trigger, source } => {
                v["stage"] = json!(stage.name());
                v["trigger_time"] = json!(trigger);
                v["cause"] = json!(source.to_string());
            }
            CliError::Io { path, .. } => v["path"] = json!(path),
            _ => {}
        }
        v
    }
}
