use alloc::string::String;

use crate::math::Vec3;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("nonmonotonic target times at knot {index}")]
    NonmonotonicTargetTimes { index: usize },

    #[error("chaser starts in occupied space at ({}, {}, {})", .position.x, .position.y, .position.z)]
    ChaserInObstacle { position: Vec3 },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("grid of {voxels} voxels exceeds the voxel budget of {budget}")]
    VoxelBudget { voxels: usize, budget: usize },

    #[error("point ({}, {}, {}) is out of grid range", .point.x, .point.y, .point.z)]
    OutOfRange { point: Vec3 },

    #[error("voxel index ({}, {}, {}) is out of grid range", .index[0], .index[1], .index[2])]
    IndexOutOfRange { index: [usize; 3] },

    #[error("target path is empty")]
    EmptyTargetPath,

    #[error("no viewpoint candidates at layer {layer}")]
    NoCandidates { layer: usize },

    #[error("preplanning infeasible: {0}")]
    PreplanInfeasible(String),

    #[error("corridor collapsed at tau={tau} (segment {segment})")]
    CorridorCollapsed { tau: f64, segment: usize },

    #[error("time {t} outside [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },

    #[error("inconsistent timestamps: {0}")]
    InconsistentTimestamps(String),

    #[error("QP infeasible")]
    QpInfeasible,

    #[error("QP not strictly convex on the equality null space")]
    QpNotConvex,

    #[error("QP equality constraints are rank deficient")]
    QpDegenerateEqualities,

    #[error("QP iteration limit {iterations} reached (primal residual {primal}, stationarity {stationarity})")]
    QpIterationLimit {
        iterations: usize,
        primal: f64,
        stationarity: f64,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
