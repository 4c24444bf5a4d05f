//! Visibility-aware chasing planner for a camera-carrying aerial vehicle.
//!
//! The pipeline runs in three stages over a static voxel map:
//!
//! 1. [`fields`] computes the exact Euclidean distance field of the map and
//!    derives the line-of-sight visibility score of a viewpoint with respect
//!    to the target.
//! 2. [`preplan`] builds a layered graph of candidate viewpoints around the
//!    forecast target positions and extracts the cheapest sequence trading off
//!    travel distance, visibility and tracking distance.
//! 3. [`corridor`] turns that sequence into axis-aligned safe boxes and
//!    [`trajopt`] fits a minimum-jerk piecewise polynomial inside them.
//!
//! [`mission`] repeats the pipeline in a receding-horizon loop and records the
//! metrics used to compare planner settings.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, timing and the
//! command-line tool live in the companion `chaseplan` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod config;
pub mod corridor;
pub mod error;
pub mod fields;
pub mod math;
pub mod mission;
pub mod preplan;
pub mod trajopt;
pub mod world;

pub use config::PlannerConfig;
pub use error::{Error, Result};
pub use math::Vec3;
