//! File formats, simulation outputs and the command-line front end for
//! [`chaseplan_core`].

pub mod cli;
pub mod error;
pub mod output;
pub mod scenario;

pub use error::CliError;
pub use scenario::{load_scenario, LoadedScenario, ScenarioFile};
