//! Scenario description and the voxel occupancy grid built from it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::math::{ceil, floor, Vec3};
use crate::trajopt::ChaserState;

/// Default upper bound on the number of voxels a scenario may allocate.
pub const DEFAULT_VOXEL_BUDGET: usize = 16_000_000;

/// Closed axis-aligned box `B(center, half_extent)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub center: Vec3,
    pub half_extent: Vec3,
}

impl Aabb {
    pub fn new(center: Vec3, half_extent: Vec3) -> Self {
        Aabb { center, half_extent }
    }

    pub fn from_min_max(min: Vec3, max: Vec3) -> Self {
        Aabb {
            center: (min + max) * 0.5,
            half_extent: (max - min) * 0.5,
        }
    }

    pub fn min(&self) -> Vec3 {
        self.center - self.half_extent
    }

    pub fn max(&self) -> Vec3 {
        self.center + self.half_extent
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let (lo, hi) = (self.min(), self.max());
        (0..3).all(|a| p[a] >= lo[a] && p[a] <= hi[a])
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        let (a0, a1) = (self.min(), self.max());
        let (b0, b1) = (other.min(), other.max());
        (0..3).all(|a| a0[a] <= b1[a] && b0[a] <= a1[a])
    }
}

/// Scripted target trajectory, linearly interpolated between knots and held
/// constant outside the knot span.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetPath {
    knots: Vec<(f64, Vec3)>,
}

impl TargetPath {
    pub fn new(knots: Vec<(f64, Vec3)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::EmptyTargetPath);
        }
        for (i, w) in knots.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::NonmonotonicTargetTimes { index: i + 1 });
            }
        }
        if knots.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
            return Err(Error::InvalidScenario("non-finite target knot".into()));
        }
        Ok(TargetPath { knots })
    }

    pub fn knots(&self) -> &[(f64, Vec3)] {
        &self.knots
    }

    pub fn start_time(&self) -> f64 {
        self.knots[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    pub fn position(&self, t: f64) -> Vec3 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        let last = k.len() - 1;
        if t >= k[last].0 {
            return k[last].1;
        }
        // first knot strictly after t
        let hi = k.partition_point(|(kt, _)| *kt <= t);
        let (t0, p0) = k[hi - 1];
        let (t1, p1) = k[hi];
        p0.lerp(p1, (t - t0) / (t1 - t0))
    }
}

/// Validated planning problem: world bounds, obstacles, the target script and
/// the chaser's initial state.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub bounds_min: Vec3,
    pub bounds_max: Vec3,
    pub resolution: f64,
    pub obstacles: Vec<Aabb>,
    pub target_path: TargetPath,
    pub chaser_init: ChaserState,
    pub config: PlannerConfig,
}

impl Scenario {
    /// Checks every scenario invariant and returns the scenario unchanged.
    pub fn validate(self) -> Result<Self> {
        if !self.bounds_min.is_finite() || !self.bounds_max.is_finite() {
            return Err(Error::InvalidScenario("non-finite bounds".into()));
        }
        if !(0..3).all(|a| self.bounds_min[a] < self.bounds_max[a]) {
            return Err(Error::InvalidScenario(
                "bounds_min must be below bounds_max on every axis".into(),
            ));
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        self.config.validate()?;
        TargetPath::new(self.target_path.knots.clone())?;
        let bounds = Aabb::from_min_max(self.bounds_min, self.bounds_max);
        for (i, ob) in self.obstacles.iter().enumerate() {
            if !ob.center.is_finite() || !ob.half_extent.is_finite() || ob.half_extent.min_elem() < 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "obstacle {i} has invalid geometry"
                )));
            }
            if !ob.intersects(&bounds) {
                return Err(Error::InvalidScenario(format!(
                    "obstacle {i} does not intersect the bounds"
                )));
            }
        }
        for (i, (_, p)) in self.target_path.knots().iter().enumerate() {
            if !bounds.contains(*p) {
                return Err(Error::InvalidScenario(format!(
                    "target knot {i} lies outside the bounds"
                )));
            }
        }
        let c = &self.chaser_init;
        if !(c.position.is_finite() && c.velocity.is_finite() && c.acceleration.is_finite()) {
            return Err(Error::InvalidScenario("non-finite chaser state".into()));
        }
        if !bounds.contains(c.position) {
            return Err(Error::InvalidScenario(
                "chaser starts outside the bounds".into(),
            ));
        }
        if self.obstacles.iter().any(|ob| ob.contains(c.position)) {
            return Err(Error::ChaserInObstacle {
                position: c.position,
            });
        }
        Ok(self)
    }
}

/// Boolean occupancy over an axis-aligned grid. Voxel `(i, j, k)` spans
/// `origin + [i, i+1) * resolution` on the first axis and so on; its center
/// is the half-integer point.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    origin: Vec3,
    resolution: f64,
    dims: [usize; 3],
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    /// An all-free grid.
    pub fn new(origin: Vec3, resolution: f64, dims: [usize; 3]) -> Result<Self> {
        if !(resolution > 0.0) || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidScenario("empty grid".into()));
        }
        let n = dims[0] * dims[1] * dims[2];
        Ok(VoxelGrid {
            origin,
            resolution,
            dims,
            occupancy: vec![false; n],
        })
    }

    /// Grid covering `[min, max]` at `resolution`, refusing more than `budget` voxels.
    pub fn covering(min: Vec3, max: Vec3, resolution: f64, budget: usize) -> Result<Self> {
        let mut dims = [0usize; 3];
        for a in 0..3 {
            let cells = ceil((max[a] - min[a]) / resolution - 1e-9);
            dims[a] = (cells as usize).max(1);
        }
        let voxels = dims[0].saturating_mul(dims[1]).saturating_mul(dims[2]);
        if voxels > budget {
            return Err(Error::VoxelBudget { voxels, budget });
        }
        VoxelGrid::new(min, resolution, dims)
    }

    /// Voxelizes a scenario with [`DEFAULT_VOXEL_BUDGET`].
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        voxelize(scenario, DEFAULT_VOXEL_BUDGET)
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    /// Upper corner of the grid (at least the scenario's `bounds_max`).
    pub fn extent_max(&self) -> Vec3 {
        self.origin
            + Vec3::new(
                self.dims[0] as f64,
                self.dims[1] as f64,
                self.dims[2] as f64,
            ) * self.resolution
    }

    /// Length of the grid's bounding-box diagonal.
    pub fn diagonal(&self) -> f64 {
        (self.extent_max() - self.origin).norm()
    }

    #[inline]
    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    #[inline]
    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    #[inline]
    pub fn is_occupied(&self, idx: [usize; 3]) -> bool {
        self.occupancy[self.linear_index(idx)]
    }

    pub fn set_occupied(&mut self, idx: [usize; 3], value: bool) {
        let i = self.linear_index(idx);
        self.occupancy[i] = value;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn contains(&self, x: Vec3) -> bool {
        let tol = 1e-9 * self.resolution.max(1.0);
        let hi = self.extent_max();
        (0..3).all(|a| x[a] >= self.origin[a] - tol && x[a] <= hi[a] + tol)
    }

    /// Index of the voxel containing `x`. Points on the upper grid face map
    /// to the last voxel.
    pub fn world_to_index(&self, x: Vec3) -> Result<[usize; 3]> {
        if !x.is_finite() || !self.contains(x) {
            return Err(Error::OutOfRange { point: x });
        }
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let u = floor((x[a] - self.origin[a]) / self.resolution);
            idx[a] = (u.max(0.0) as usize).min(self.dims[a] - 1);
        }
        Ok(idx)
    }

    pub fn index_to_center(&self, idx: [usize; 3]) -> Result<Vec3> {
        if (0..3).any(|a| idx[a] >= self.dims[a]) {
            return Err(Error::IndexOutOfRange { index: idx });
        }
        Ok(self.center_unchecked(idx))
    }

    #[inline]
    pub(crate) fn center_unchecked(&self, idx: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.origin.x + (idx[0] as f64 + 0.5) * self.resolution,
            self.origin.y + (idx[1] as f64 + 0.5) * self.resolution,
            self.origin.z + (idx[2] as f64 + 0.5) * self.resolution,
        )
    }

    /// Whether the voxel containing `x` is occupied; out-of-range points count as free.
    pub fn occupied_at(&self, x: Vec3) -> bool {
        self.world_to_index(x).map(|i| self.is_occupied(i)).unwrap_or(false)
    }

    /// Marks every voxel whose center lies in the closed box.
    pub fn fill_box(&mut self, b: &Aabb) {
        let (lo, hi) = (b.min(), b.max());
        let mut range = [(0usize, 0usize); 3];
        for a in 0..3 {
            // candidate range padded by one voxel; the exact test below decides
            let first = floor((lo[a] - self.origin[a]) / self.resolution - 0.5) - 1.0;
            let last = ceil((hi[a] - self.origin[a]) / self.resolution - 0.5) + 1.0;
            let max_i = (self.dims[a] - 1) as f64;
            if last < 0.0 || first > max_i {
                return;
            }
            range[a] = (first.max(0.0) as usize, last.min(max_i) as usize);
        }
        for k in range[2].0..=range[2].1 {
            for j in range[1].0..=range[1].1 {
                for i in range[0].0..=range[0].1 {
                    if b.contains(self.center_unchecked([i, j, k])) {
                        self.set_occupied([i, j, k], true);
                    }
                }
            }
        }
    }
}

/// Builds the occupancy grid of a scenario: a voxel is occupied iff its
/// center lies inside some closed obstacle box.
pub fn voxelize(scenario: &Scenario, budget: usize) -> Result<VoxelGrid> {
    let mut grid = VoxelGrid::covering(
        scenario.bounds_min,
        scenario.bounds_max,
        scenario.resolution,
        budget,
    )?;
    for ob in &scenario.obstacles {
        grid.fill_box(ob);
    }
    Ok(grid)
}
