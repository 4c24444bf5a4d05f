//! Euclidean distance field `φ` and the line-of-sight visibility score `ψ`.
//!
//! `φ(x)` is the distance from `x` to the nearest occupied voxel center,
//! stored exactly at voxel centers and trilinearly interpolated in between.
//! Points inside an occupied voxel read 0.
//!
//! `ψ(x; x_p)` is the minimum of `φ` over the segment from the viewpoint to
//! the target. It is evaluated on uniform samples no farther apart than the
//! query step (endpoints included) plus one sample inside every occupied
//! voxel the segment crosses, so `ψ > 0` exactly when the segment misses
//! every occupied voxel (up to tangential contact).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ceil, sqrt, Vec3};
use crate::world::VoxelGrid;

/// Per-voxel Euclidean distance (meters) to the nearest occupied voxel center.
#[derive(Clone, Debug)]
pub struct DistanceField {
    grid: VoxelGrid,
    values: Vec<f64>,
    sentinel: f64,
}

/// Inputs of one visibility evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisibilityQuery {
    pub viewpoint: Vec3,
    pub target: Vec3,
    /// Maximum spacing between segment samples, meters.
    pub step: f64,
}

/// Exact squared Euclidean distance transform along one line
/// (lower envelope of parabolas). `f` holds squared distances, `INFINITY`
/// where no site is known yet.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k: Option<usize> = None;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        match k {
            None => {
                k = Some(0);
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
            }
            Some(mut kk) => loop {
                let p = v[kk];
                let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                if s <= z[kk] {
                    // z[0] is -inf so this never underflows
                    kk -= 1;
                    continue;
                }
                kk += 1;
                v[kk] = q;
                z[kk] = s;
                z[kk + 1] = f64::INFINITY;
                k = Some(kk);
                break;
            },
        }
    }
    if k.is_none() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut kk = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[kk + 1] < q as f64 {
            kk += 1;
        }
        let d = q as f64 - v[kk] as f64;
        *o = d * d + f[v[kk]];
    }
}

/// Exact Euclidean distance transform of the occupied voxels of `grid`,
/// measured between voxel centers. An obstacle-free grid yields the sentinel
/// (the grid diagonal) everywhere.
pub fn compute_edf(grid: &VoxelGrid) -> DistanceField {
    let [nx, ny, nz] = grid.dims();
    let res = grid.resolution();
    let sentinel = grid.diagonal();
    let occ = grid.occupancy();
    if !occ.iter().any(|&o| o) {
        return DistanceField {
            grid: grid.clone(),
            values: vec![sentinel; occ.len()],
            sentinel,
        };
    }

    let mut d2: Vec<f64> = occ
        .iter()
        .map(|&o| if o { 0.0 } else { f64::INFINITY })
        .collect();

    let longest = nx.max(ny).max(nz);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];

    let stride = [1, nx, nx * ny];
    let dims = [nx, ny, nz];
    for axis in 0..3 {
        let n = dims[axis];
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for b in 0..dims[o2] {
            for a in 0..dims[o1] {
                let base = a * stride[o1] + b * stride[o2];
                for q in 0..n {
                    line[q] = d2[base + q * stride[axis]];
                }
                edt_1d(&line[..n], &mut out[..n], &mut v[..n], &mut z[..n + 1]);
                for q in 0..n {
                    d2[base + q * stride[axis]] = out[q];
                }
            }
        }
    }

    let values = d2.into_iter().map(|d| sqrt(d) * res).collect();
    DistanceField {
        grid: grid.clone(),
        values,
        sentinel,
    }
}

impl DistanceField {
    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn resolution(&self) -> f64 {
        self.grid.resolution()
    }

    /// Value reported everywhere on an obstacle-free grid.
    pub fn sentinel(&self) -> f64 {
        self.sentinel
    }

    /// Stored per-voxel values, x-fastest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, idx: [usize; 3]) -> Result<f64> {
        self.grid.index_to_center(idx)?;
        Ok(self.values[self.grid.linear_index(idx)])
    }

    /// Default sampling step for visibility queries: half a voxel.
    pub fn default_step(&self) -> f64 {
        0.5 * self.grid.resolution()
    }

    pub fn contains(&self, x: Vec3) -> bool {
        self.grid.contains(x)
    }

    fn check(&self, x: Vec3) -> Result<()> {
        if x.is_finite() && self.grid.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfRange { point: x })
        }
    }

    /// `φ(x)`: trilinear interpolation of the stored field, 0 inside occupied voxels.
    pub fn phi(&self, x: Vec3) -> Result<f64> {
        self.check(x)?;
        Ok(self.phi_unchecked(x))
    }

    /// `φ` for a point already known to be inside the grid (clamped otherwise).
    #[inline]
    pub(crate) fn phi_unchecked(&self, x: Vec3) -> f64 {
        let dims = self.grid.dims();
        let origin = self.grid.origin();
        let inv = 1.0 / self.grid.resolution();
        let mut cell = [0usize; 3];
        let mut lo = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let s = (x[a] - origin[a]) * inv;
            let top = (dims[a] - 1) as f64;
            // containing voxel
            cell[a] = if s <= 0.0 { 0 } else { (s as usize).min(dims[a] - 1) };
            // interpolation cell between voxel centers
            let u = (s - 0.5).clamp(0.0, top);
            if dims[a] == 1 {
                lo[a] = 0;
                frac[a] = 0.0;
            } else {
                let i0 = (u as usize).min(dims[a] - 2);
                lo[a] = i0;
                frac[a] = u - i0 as f64;
            }
        }
        if self.grid.is_occupied(cell) {
            return 0.0;
        }
        let sx = if dims[0] > 1 { 1 } else { 0 };
        let sy = if dims[1] > 1 { dims[0] } else { 0 };
        let sz = if dims[2] > 1 { dims[0] * dims[1] } else { 0 };
        let base = self.grid.linear_index(lo);
        let v = &self.values;
        let [fx, fy, fz] = frac;
        let c00 = v[base] * (1.0 - fx) + v[base + sx] * fx;
        let c10 = v[base + sy] * (1.0 - fx) + v[base + sy + sx] * fx;
        let c01 = v[base + sz] * (1.0 - fx) + v[base + sz + sx] * fx;
        let c11 = v[base + sz + sy] * (1.0 - fx) + v[base + sz + sy + sx] * fx;
        let c0 = c00 * (1.0 - fy) + c10 * fy;
        let c1 = c01 * (1.0 - fy) + c11 * fy;
        c0 * (1.0 - fz) + c1 * fz
    }

    /// Minimum of `φ` over uniform samples of `[a, b]` (spacing ≤ `step`,
    /// endpoints included). Stops early once 0 is reached.
    pub(crate) fn segment_min_sampled(&self, a: Vec3, b: Vec3, step: f64) -> f64 {
        let len = a.distance(b);
        if len == 0.0 {
            return self.phi_unchecked(a);
        }
        let n = (ceil(len / step) as usize).max(1);
        let inv = 1.0 / n as f64;
        let mut best = f64::INFINITY;
        for k in 0..=n {
            let p = if k == n { b } else { a.lerp(b, k as f64 * inv) };
            let v = self.phi_unchecked(p);
            if v < best {
                best = v;
                if best <= 0.0 {
                    break;
                }
            }
        }
        best
    }

    /// Whether the segment `[a, b]` passes through any occupied voxel
    /// (3D DDA voxel traversal).
    pub(crate) fn segment_hits_occupied(&self, a: Vec3, b: Vec3) -> bool {
        let grid = &self.grid;
        let dims = grid.dims();
        let origin = grid.origin();
        let inv = 1.0 / grid.resolution();
        let u0 = (a - origin) * inv;
        let u1 = (b - origin) * inv;
        let d = u1 - u0;
        let mut cell = [0i64; 3];
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for ax in 0..3 {
            let top = dims[ax] as i64 - 1;
            let c = if u0[ax] <= 0.0 { 0 } else { (u0[ax] as i64).min(top) };
            cell[ax] = c;
            if d[ax] > 0.0 {
                step[ax] = 1;
                t_delta[ax] = 1.0 / d[ax];
                t_max[ax] = ((c + 1) as f64 - u0[ax]) / d[ax];
            } else if d[ax] < 0.0 {
                step[ax] = -1;
                t_delta[ax] = -1.0 / d[ax];
                t_max[ax] = (c as f64 - u0[ax]) / d[ax];
            }
        }
        loop {
            if grid.is_occupied([cell[0] as usize, cell[1] as usize, cell[2] as usize]) {
                return true;
            }
            let ax = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            if t_max[ax] >= 1.0 {
                return false;
            }
            cell[ax] += step[ax];
            if cell[ax] < 0 || cell[ax] >= dims[ax] as i64 {
                return false;
            }
            t_max[ax] += t_delta[ax];
        }
    }

    /// `ψ` for in-range endpoints with the given step.
    pub(crate) fn psi_unchecked(&self, x: Vec3, xp: Vec3, step: f64) -> f64 {
        // canonical orientation: identical samples for (x, xp) and (xp, x)
        let (a, b) = if x.lex_le(xp) { (x, xp) } else { (xp, x) };
        if a == b {
            return self.phi_unchecked(a);
        }
        if self.segment_hits_occupied(a, b) {
            return 0.0;
        }
        self.segment_min_sampled(a, b, step)
    }

    /// `ψ(x; x_p)`, the minimum of `φ` along the sight line.
    pub fn psi(&self, q: &VisibilityQuery) -> Result<f64> {
        if !(q.step > 0.0) {
            return Err(Error::InvalidScenario("visibility step must be positive".into()));
        }
        self.check(q.viewpoint)?;
        self.check(q.target)?;
        Ok(self.psi_unchecked(q.viewpoint, q.target, q.step))
    }

    /// `ψ(x; x_p)` at the default step.
    pub fn psi_at(&self, x: Vec3, xp: Vec3) -> Result<f64> {
        self.psi(&VisibilityQuery {
            viewpoint: x,
            target: xp,
            step: self.default_step(),
        })
    }

    /// Line-of-sight test: `ψ(x; x_p) > 0`.
    pub fn is_visible(&self, x: Vec3, xp: Vec3) -> Result<bool> {
        Ok(self.psi_at(x, xp)? > 0.0)
    }

    /// Minimum of `φ` along `[a, b]` at the default step (segment clearance).
    pub fn segment_clearance(&self, a: Vec3, b: Vec3) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        let (a, b) = if a.lex_le(b) { (a, b) } else { (b, a) };
        Ok(self.segment_min_sampled(a, b, self.default_step()))
    }

    pub(crate) fn line_integral_unchecked(&self, a: Vec3, b: Vec3, xp: Vec3, step: f64) -> f64 {
        let len = a.distance(b);
        if len == 0.0 {
            return self.psi_unchecked(a, xp, step).max(0.0) * self.resolution();
        }
        let n = (ceil(len / step) as usize).max(1);
        let h = len / n as f64;
        let inv = 1.0 / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let p = if k == n { b } else { a.lerp(b, k as f64 * inv) };
            let v = self.psi_unchecked(p, xp, step).max(0.0);
            acc += if k == 0 || k == n { 0.5 * v } else { v };
        }
        acc * h
    }

    /// Trapezoidal integral of `max(ψ(·; x_p), 0)` along `[a, b]` at spacing
    /// ≤ `step`. A zero-length segment contributes `ψ(a; x_p) · resolution`.
    pub fn line_integral_psi(&self, a: Vec3, b: Vec3, xp: Vec3, step: f64) -> Result<f64> {
        if !(step > 0.0) {
            return Err(Error::InvalidScenario("integration step must be positive".into()));
        }
        self.check(a)?;
        self.check(b)?;
        self.check(xp)?;
        Ok(self.line_integral_unchecked(a, b, xp, step))
    }

    /// Transitional visibility cost of moving from `x_prev` to `x_next` while
    /// the target moves from `xp_prev` to `xp_next`. `+∞` when the segment is
    /// entirely occluded from either target position.
    pub fn transitional_visibility_cost(
        &self,
        x_prev: Vec3,
        x_next: Vec3,
        xp_prev: Vec3,
        xp_next: Vec3,
    ) -> Result<f64> {
        let step = self.default_step();
        let i_prev = self.line_integral_psi(x_prev, x_next, xp_prev, step)?;
        let i_next = self.line_integral_psi(x_prev, x_next, xp_next, step)?;
        Ok(transitional_cost_from_integrals(i_prev, i_next))
    }
}

/// Inverse geometric mean of the two visibility integrals; `+∞` if either is 0.
pub fn transitional_cost_from_integrals(i_prev: f64, i_next: f64) -> f64 {
    if i_prev <= 0.0 || i_next <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / sqrt(i_prev * i_next)
    }
}
