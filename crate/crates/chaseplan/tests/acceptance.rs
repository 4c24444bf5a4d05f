//! Acceptance criteria 1–8. Each test prints one `criterion N: PASS|FAIL`
//! line to the real stdout (not the captured test output) and then asserts.
//! Tests share a lock so the timing criteria run without contention.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use chaseplan::load_scenario;
use chaseplan_core::corridor::{CorridorEntry, CorridorSequence};
use chaseplan_core::fields::{compute_edf, DistanceField};
use chaseplan_core::mission::{replan_once, run_mission_with_field, Clock, MissionMetrics};
use chaseplan_core::preplan::{
    build_graph_from_layers, edge_cost, generate_candidates, shortest_path, shortest_path_dp, CandidateSet,
    TargetForecast, WaypointPlan,
};
use chaseplan_core::trajopt::{assemble_qp, solve_qp, ChaserState, PiecewisePolynomial, QuadraticProgram};
use chaseplan_core::world::{voxelize, Aabb, Scenario, VoxelGrid, DEFAULT_VOXEL_BUDGET};
use chaseplan_core::{PlannerConfig, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn bundled() -> Vec<(String, Scenario)> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, load_scenario::<&str>(&p, &[]).unwrap().scenario)
        })
        .collect()
}

struct Wall(Instant);

impl Clock for Wall {
    fn now(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

// ---------------------------------------------------------------- criterion 1

fn brute_force_edt(g: &VoxelGrid) -> Vec<f64> {
    let [nx, ny, nz] = g.dims();
    let mut occupied = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if g.is_occupied([i, j, k]) {
                    occupied.push([i as f64, j as f64, k as f64]);
                }
            }
        }
    }
    let mut out = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let mut best = f64::INFINITY;
                for o in &occupied {
                    let d = (o[0] - i as f64).powi(2) + (o[1] - j as f64).powi(2) + (o[2] - k as f64).powi(2);
                    best = best.min(d);
                }
                out.push(if occupied.is_empty() {
                    g.diagonal()
                } else {
                    best.sqrt() * g.resolution()
                });
            }
        }
    }
    out
}

#[test]
fn criterion_1_edf_exactness() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut max_err = 0.0f64;
    let mut edf_seconds = 0.0;
    for _ in 0..50 {
        let dims = [rng.gen_range(1..=24), rng.gen_range(1..=24), rng.gen_range(1..=24)];
        let res = [0.1, 0.25, 0.4, 1.0][rng.gen_range(0..4)];
        let mut g = VoxelGrid::new(Vec3::new(-1.0, 2.0, 0.5), res, dims).unwrap();
        let p = rng.gen_range(0.01..=0.10);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    if rng.gen_bool(p) {
                        g.set_occupied([i, j, k], true);
                    }
                }
            }
        }
        let t = Instant::now();
        let f = compute_edf(&g);
        edf_seconds += t.elapsed().as_secs_f64();
        let oracle = brute_force_edt(&g);
        for (a, b) in f.values().iter().zip(&oracle) {
            max_err = max_err.max((a - b).abs());
        }
    }
    let pass = max_err < 1e-9 && edf_seconds < 5.0;
    report(1, pass, &format!("max error {max_err:e}, EDF time {edf_seconds:.3} s over 50 grids"));
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 2

/// Independent trilinear interpolation of the stored voxel values, 0 inside
/// occupied voxels.
fn phi_oracle(f: &DistanceField, x: Vec3) -> f64 {
    let g = f.grid();
    let dims = g.dims();
    let (o, res) = (g.origin(), g.resolution());
    let mut cell = [0usize; 3];
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut w = [0.0; 3];
    for a in 0..3 {
        let s = (x[a] - o[a]) / res;
        cell[a] = (s.floor().max(0.0) as usize).min(dims[a] - 1);
        let u = (s - 0.5).clamp(0.0, (dims[a] - 1) as f64);
        lo[a] = u.floor() as usize;
        hi[a] = (lo[a] + 1).min(dims[a] - 1);
        w[a] = u - lo[a] as f64;
    }
    if g.is_occupied(cell) {
        return 0.0;
    }
    let v = |i, j, k| f.value_at([i, j, k]).unwrap();
    let mut acc = 0.0;
    for (dk, wk) in [(lo[2], 1.0 - w[2]), (hi[2], w[2])] {
        for (dj, wj) in [(lo[1], 1.0 - w[1]), (hi[1], w[1])] {
            for (di, wi) in [(lo[0], 1.0 - w[0]), (hi[0], w[0])] {
                acc += wi * wj * wk * v(di, dj, dk);
            }
        }
    }
    acc
}

fn psi_oracle(f: &DistanceField, x: Vec3, xp: Vec3, step: f64) -> f64 {
    let n = ((x.distance(xp) / step).ceil() as usize).max(1);
    (0..=n)
        .map(|k| phi_oracle(f, x.lerp(xp, k as f64 / n as f64)))
        .fold(f64::INFINITY, f64::min)
}

/// Exact segment/voxel-box intersection test (slab method) against every
/// occupied voxel near the segment. Returns `(blocked, min gap)` where the
/// gap is the smallest distance from the segment to an occupied voxel box.
fn ray_cast(g: &VoxelGrid, a: Vec3, b: Vec3) -> (bool, f64) {
    let res = g.resolution();
    let [nx, ny, nz] = g.dims();
    let lo = a.zip(b, f64::min) - Vec3::splat(2.0 * res);
    let hi = a.zip(b, f64::max) + Vec3::splat(2.0 * res);
    let o = g.origin();
    let range = |ax: usize, n: usize| {
        let i0 = ((lo[ax] - o[ax]) / res).floor().max(0.0) as usize;
        let i1 = (((hi[ax] - o[ax]) / res).floor().max(0.0) as usize).min(n - 1);
        i0..=i1
    };
    let mut blocked = false;
    let mut gap = f64::INFINITY;
    for k in range(2, nz) {
        for j in range(1, ny) {
            for i in range(0, nx) {
                if !g.is_occupied([i, j, k]) {
                    continue;
                }
                let bmin = o + Vec3::new(i as f64, j as f64, k as f64) * res;
                let bmax = bmin + Vec3::splat(res);
                // distance from the segment to the box by dense parameter scan
                let n = 64;
                for s in 0..=n {
                    let p = a.lerp(b, s as f64 / n as f64);
                    let q = p.zip(bmin, f64::max).zip(bmax, f64::min);
                    gap = gap.min(p.distance(q));
                }
                // slab intersection
                let (mut t0, mut t1) = (0.0f64, 1.0f64);
                let d = b - a;
                let mut hit = true;
                for ax in 0..3 {
                    if d[ax].abs() < 1e-15 {
                        if a[ax] < bmin[ax] || a[ax] > bmax[ax] {
                            hit = false;
                        }
                    } else {
                        let (mut u0, mut u1) = ((bmin[ax] - a[ax]) / d[ax], (bmax[ax] - a[ax]) / d[ax]);
                        if u0 > u1 {
                            std::mem::swap(&mut u0, &mut u1);
                        }
                        t0 = t0.max(u0);
                        t1 = t1.min(u1);
                    }
                }
                if hit && t0 <= t1 {
                    blocked = true;
                }
            }
        }
    }
    (blocked, gap)
}

#[test]
fn criterion_2_visibility_oracle() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_gap = 0.0f64;
    let mut bound = f64::INFINITY;
    let mut disagreements = 0usize;
    let mut unexplained = 0usize;
    let mut total = 0usize;
    let mut details = Vec::new();
    for (name, s) in bundled() {
        let grid = voxelize(&s, DEFAULT_VOXEL_BUDGET).unwrap();
        let f = compute_edf(&grid);
        let res = f.resolution();
        bound = bound.min(0.5 * res);
        let (lo, hi) = (grid.origin(), grid.extent_max());
        let mut pairs = 0;
        while pairs < 200 {
            let sample = |rng: &mut ChaCha8Rng| {
                Vec3::new(
                    rng.gen_range(lo.x..hi.x),
                    rng.gen_range(lo.y..hi.y),
                    rng.gen_range(lo.z..hi.z),
                )
            };
            let x = sample(&mut rng);
            // keep pairs within a few tracking distances so both outcomes occur
            let xp = x + Vec3::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0), rng.gen_range(-3.0..3.0));
            if !f.contains(xp) || grid.occupied_at(x) || grid.occupied_at(xp) {
                continue;
            }
            pairs += 1;
            total += 1;
            let psi = f.psi_at(x, xp).unwrap();
            let oracle = psi_oracle(&f, x, xp, res / 16.0);
            let blocked_ray = ray_cast(&grid, x, xp);
            worst_gap = worst_gap.max((psi - oracle).abs());
            let visible = f.is_visible(x, xp).unwrap();
            if visible == blocked_ray.0 {
                disagreements += 1;
                let tangent = blocked_ray.1 < res;
                if !tangent {
                    unexplained += 1;
                }
                details.push(format!("{name}: x={x:?} xp={xp:?} visible={visible} gap={:.3}", blocked_ray.1));
            }
        }
    }
    for d in &details {
        eprintln!("visibility disagreement: {d}");
    }
    let frac = disagreements as f64 / total as f64;
    let pass = worst_gap <= bound && frac < 0.02 && unexplained == 0;
    report(
        2,
        pass,
        &format!(
            "{total} pairs, max |psi - fine oracle| {worst_gap:.4} m (bound {bound} m), {disagreements} ray-cast disagreements ({:.2}%), {unexplained} away from tangency",
            100.0 * frac
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 3

fn elevation(v: Vec3) -> f64 {
    (v.z / v.norm()).asin()
}

struct Instance {
    field: DistanceField,
    chaser: Vec3,
    forecast: TargetForecast,
    layers: Vec<CandidateSet>,
    config: PlannerConfig,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Option<Instance> {
    let mut g = VoxelGrid::new(Vec3::ZERO, 0.4, [24, 24, 14]).unwrap();
    for _ in 0..rng.gen_range(1..4) {
        let c = Vec3::new(rng.gen_range(1.0..8.6), rng.gen_range(1.0..8.6), rng.gen_range(0.0..3.0));
        let h = Vec3::new(rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8), rng.gen_range(0.5..2.5));
        g.fill_box(&Aabb::new(c, h));
    }
    let field = compute_edf(&g);
    let config = PlannerConfig {
        segments: rng.gen_range(1..=3),
        w_v: rng.gen_range(0.5..8.0),
        ..Default::default()
    };
    let n = config.segments;
    let mut xp = Vec3::new(rng.gen_range(3.5..6.1), rng.gen_range(3.5..6.1), 0.5);
    let mut samples = vec![xp];
    for _ in 0..n {
        xp = xp + Vec3::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6), 0.0);
        samples.push(xp);
    }
    if samples.iter().any(|p| field.phi(*p).unwrap() <= 0.0) {
        return None;
    }
    let forecast = TargetForecast {
        t0: 0.0,
        dt: config.dt(),
        samples,
    };
    let mut layers = Vec::new();
    for k in 1..=n {
        let mut c = generate_candidates(&field, forecast.samples[k], k, &config).ok()?;
        while c.points.len() > 30 {
            let drop = rng.gen_range(0..c.points.len());
            c.points.remove(drop);
            c.visibility.remove(drop);
        }
        layers.push(c);
    }
    let start = forecast.samples[0] + Vec3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-2.5..-1.5), rng.gen_range(1.0..2.0));
    if !field.contains(start) || field.phi(start).unwrap() <= 0.0 {
        return None;
    }
    Some(Instance {
        field,
        chaser: start,
        forecast,
        layers,
        config,
    })
}

/// Cheapest path by enumerating every index tuple, with each constraint and
/// edge cost evaluated directly.
fn enumerate(inst: &Instance) -> Option<(f64, Vec<Vec3>)> {
    let f = &inst.field;
    let cfg = &inst.config;
    let xp = &inst.forecast.samples;
    let n = inst.layers.len();
    let source_phi = f.phi(inst.chaser).unwrap();
    let mut best: Option<(f64, Vec<Vec3>)> = None;
    let mut idx = vec![0usize; n];
    'outer: loop {
        let mut path = vec![inst.chaser];
        path.extend((0..n).map(|k| inst.layers[k].points[idx[k]]));
        let mut cost = 0.0;
        let mut ok = true;
        for k in 1..=n {
            let (a, b) = (path[k - 1], path[k]);
            let thr = if k == 1 { cfg.r_safe.min(source_phi) } else { cfg.r_safe };
            if f.segment_clearance(a, b).unwrap() < thr
                || !(a.distance(b) < cfg.d_max)
                || f.psi_at(b, xp[k]).unwrap() <= 0.0
                || (k > 1 && f.psi_at(a, xp[k - 1]).unwrap() <= 0.0)
            {
                ok = false;
                break;
            }
            let c = edge_cost(f, a, b, xp[k - 1], xp[k], cfg).unwrap();
            if !c.total.is_finite() {
                ok = false;
                break;
            }
            cost += c.total;
        }
        if ok && best.as_ref().map_or(true, |(b, _)| cost < *b) {
            best = Some((cost, path));
        }
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < inst.layers[k].points.len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    best
}

fn verify_plan(inst: &Instance, plan: &WaypointPlan) -> Result<(), String> {
    let f = &inst.field;
    let cfg = &inst.config;
    let xp = &inst.forecast.samples;
    if plan.waypoints[0] != inst.chaser {
        return Err("x_0 is not the chaser position".into());
    }
    let source_phi = f.phi(inst.chaser).unwrap();
    for k in 1..plan.waypoints.len() {
        let (a, b) = (plan.waypoints[k - 1], plan.waypoints[k]);
        let d = b.distance(xp[k]);
        if d < cfg.d_lower || d > cfg.d_upper {
            return Err(format!("waypoint {k}: distance {d}"));
        }
        let el = elevation(b - xp[k]);
        if el < cfg.theta_min - 1e-12 || el > cfg.theta_max + 1e-12 {
            return Err(format!("waypoint {k}: elevation {el}"));
        }
        if f.psi_at(b, xp[k]).unwrap() <= 0.0 {
            return Err(format!("waypoint {k}: target hidden"));
        }
        if f.phi(b).unwrap() < cfg.r_safe {
            return Err(format!("waypoint {k}: clearance"));
        }
        let thr = if k == 1 { cfg.r_safe.min(source_phi) } else { cfg.r_safe };
        if f.segment_clearance(a, b).unwrap() < thr {
            return Err(format!("segment {k}: clearance"));
        }
        if !(a.distance(b) < cfg.d_max) {
            return Err(format!("segment {k}: longer than d_max"));
        }
    }
    Ok(())
}

#[test]
fn criterion_3_preplanner_optimality() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut instances = 0;
    let mut feasible = 0;
    let mut failures = Vec::new();
    while instances < 25 {
        let Some(inst) = random_instance(&mut rng) else { continue };
        instances += 1;
        let graph =
            build_graph_from_layers(&inst.field, inst.chaser, &inst.forecast, &inst.layers, &inst.config).unwrap();
        let dijkstra = shortest_path(&graph);
        let dp = shortest_path_dp(&graph);
        match (enumerate(&inst), dijkstra) {
            (None, Err(_)) => {
                if dp.is_ok() {
                    failures.push(format!("instance {instances}: DP found a path, enumeration none"));
                }
            }
            (Some((cost, path)), Ok(plan)) => {
                feasible += 1;
                if plan.cost != cost {
                    failures.push(format!("instance {instances}: cost {} vs enumeration {cost}", plan.cost));
                }
                if plan.waypoints != path {
                    // exact cost ties may select a different but equally cheap path
                    eprintln!("instance {instances}: tie between equal-cost paths");
                }
                if let Err(e) = verify_plan(&inst, &plan) {
                    failures.push(format!("instance {instances}: {e}"));
                }
                match dp {
                    Ok(p) if p == plan => {}
                    _ => failures.push(format!("instance {instances}: DP and Dijkstra differ")),
                }
            }
            (a, b) => failures.push(format!(
                "instance {instances}: enumeration {:?} vs search {:?}",
                a.map(|x| x.0),
                b.map(|p| p.cost)
            )),
        }
    }
    for f in &failures {
        eprintln!("{f}");
    }
    let pass = failures.is_empty() && feasible >= 20;
    report(
        3,
        pass,
        &format!("{instances} instances, {feasible} feasible, {} mismatches", failures.len()),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 4

/// Dense solve of `[H Aᵀ; A 0] [x; y] = [−g; b]` by Gaussian elimination
/// with partial pivoting.
fn kkt_oracle(qp: &QuadraticProgram) -> Vec<f64> {
    let n = qp.dim();
    let m = qp.n_eq();
    let s = n + m;
    let mut a = vec![vec![0.0; s + 1]; s];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = qp.cost[(i, j)];
        }
        for r in 0..m {
            a[i][n + r] = qp.eq_matrix[(r, i)];
            a[n + r][i] = qp.eq_matrix[(r, i)];
        }
        a[i][s] = -qp.linear[i];
    }
    for r in 0..m {
        a[n + r][s] = qp.eq_rhs[r];
    }
    for col in 0..s {
        let piv = (col..s).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..s {
            if r != col {
                let fct = a[r][col] / a[col][col];
                if fct != 0.0 {
                    for c in col..=s {
                        a[r][c] -= fct * a[col][c];
                    }
                }
            }
        }
    }
    (0..n).map(|i| a[i][s] / a[i][i]).collect()
}

#[test]
fn criterion_4_qp_correctness() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let order = 6;
    let (mut kkt, mut cont, mut corr, mut oracle_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut active = 0usize;
    let mut eq_only = 0usize;
    for inst in 0..50 {
        let n = rng.gen_range(1..=4);
        let dt = rng.gen_range(0.5..1.5);
        let t0 = rng.gen_range(0.0..10.0);
        let times: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * dt).collect();
        // reference curve: a random quintic per axis, feasible by construction
        let coeffs: Vec<[f64; 6]> = (0..3)
            .map(|_| std::array::from_fn(|k| rng.gen_range(-1.0..1.0) / (1 + k * k) as f64))
            .collect();
        let curve = |t: f64, d: usize| -> Vec3 {
            let s = t - t0;
            let mut out = Vec3::ZERO;
            for ax in 0..3 {
                let mut acc = 0.0;
                for k in d..6 {
                    let f: f64 = ((k - d + 1)..=k).map(|m| m as f64).product();
                    acc += f * coeffs[ax][k] * s.powi((k - d) as i32);
                }
                out[ax] = acc;
            }
            out
        };
        let state = ChaserState {
            position: curve(t0, 0),
            velocity: curve(t0, 1),
            acceleration: curve(t0, 2),
            stamp: t0,
        };
        let waypoints: Vec<Vec3> = times
            .iter()
            .map(|&t| curve(t, 0) + Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let plan = WaypointPlan {
            times: times.clone(),
            waypoints,
            cost: 0.0,
            edges: Vec::new(),
        };
        let equality_only = inst % 5 == 0;
        let m = rng.gen_range(1..=3);
        let mut entries = Vec::new();
        if !equality_only {
            for seg in 0..n {
                for i in 1..=m {
                    let tau = times[seg] + i as f64 * dt / (m + 1) as f64;
                    let off = Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
                    let l = off.x.abs().max(off.y.abs()).max(off.z.abs()) + rng.gen_range(0.0..0.1);
                    entries.push(CorridorEntry {
                        tau,
                        center: curve(tau, 0) + off,
                        half_extent: Vec3::splat(l),
                        segment: seg,
                    });
                }
            }
        }
        let corridors = CorridorSequence { entries, shrink: 1.0 };
        let lambda = rng.gen_range(0.5..5.0);
        let qp = assemble_qp(&state, &plan, &corridors, lambda, order).unwrap();
        let nc = order + 1;
        let mut flat = vec![0.0; n * 3 * nc];
        for (ax, block) in qp.split_blocks().iter().enumerate() {
            let sol = solve_qp(block).unwrap();
            kkt = kkt.max(sol.residuals.max());
            active += sol.ineq_multipliers.iter().filter(|m| **m != 0.0).count();
            if equality_only {
                eq_only += 1;
                let x_ref = kkt_oracle(block);
                let scale = x_ref.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                for (a, b) in sol.x.iter().zip(&x_ref) {
                    oracle_err = oracle_err.max((a - b).abs() / scale);
                }
            }
            for seg in 0..n {
                for k in 0..nc {
                    flat[seg * 3 * nc + ax * nc + k] = sol.x[seg * nc + k];
                }
            }
        }
        let traj = PiecewisePolynomial::new(times.clone(), order, flat).unwrap();
        for d in 0..=2 {
            cont = cont.max((traj.eval_segment(0, t0, d) - curve(t0, d)).norm());
        }
        for seg in 1..n {
            for d in 0..=2 {
                let l = traj.eval_segment(seg - 1, times[seg], d);
                let r = traj.eval_segment(seg, times[seg], d);
                cont = cont.max((l - r).norm());
            }
        }
        for e in &corridors.entries {
            let p = traj.eval(e.tau, 0).unwrap();
            for ax in 0..3 {
                corr = corr.max((p[ax] - e.center[ax]).abs() - e.half_extent[ax]);
            }
        }
    }
    let pass = kkt <= 1e-6 && cont <= 1e-6 && corr <= 1e-6 && oracle_err <= 1e-8;
    report(
        4,
        pass,
        &format!(
            "50 assemblies: max KKT {kkt:e}, C2 gap {cont:e}, corridor excess {corr:e}, dense-oracle error {oracle_err:e} over {eq_only} equality-only blocks, {active} active bounds"
        ),
    );
    assert!(pass);
}

// ------------------------------------------------------- criteria 5 and 6

struct Run {
    scenario: String,
    w_v: f64,
    metrics: MissionMetrics,
    seconds: f64,
}

fn missions() -> &'static Vec<Run> {
    static RUNS: OnceLock<Vec<Run>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut out = Vec::new();
        for (name, s) in bundled() {
            let grid = voxelize(&s, DEFAULT_VOXEL_BUDGET).unwrap();
            let field = compute_edf(&grid);
            for w_v in [1.0, 7.5] {
                let mut sw = s.clone();
                sw.config.w_v = w_v;
                let t = Instant::now();
                let (_, metrics) = run_mission_with_field(&sw, &field, &mut Wall(Instant::now()))
                    .unwrap_or_else(|e| panic!("{name} w_v={w_v}: {e}"));
                out.push(Run {
                    scenario: name.clone(),
                    w_v,
                    metrics,
                    seconds: t.elapsed().as_secs_f64(),
                });
            }
        }
        out
    })
}

#[test]
fn criterion_5_tradeoff_trend() {
    let _g = serial();
    let runs = missions();
    let get = |w: f64| {
        runs.iter()
            .find(|r| r.scenario == "wall_courtyard" && r.w_v == w)
            .expect("wall_courtyard run")
    };
    let (lo, hi) = (get(1.0), get(7.5));
    for r in [lo, hi] {
        eprintln!(
            "wall_courtyard w_v={}: occlusion {} s, avg psi {} m, distance {} m, {:.2} s",
            r.w_v, r.metrics.occlusion_duration, r.metrics.average_visibility, r.metrics.travel_distance, r.seconds
        );
    }
    let pass = hi.metrics.occlusion_duration <= lo.metrics.occlusion_duration
        && hi.metrics.average_visibility >= lo.metrics.average_visibility
        && hi.metrics.travel_distance >= lo.metrics.travel_distance
        && lo.seconds < 60.0
        && hi.seconds < 60.0;
    report(
        5,
        pass,
        &format!(
            "w_v 1.0 -> 7.5: occlusion {:.3} -> {:.3} s, avg psi {:.3} -> {:.3} m, distance {:.3} -> {:.3} m, run times {:.1} / {:.1} s",
            lo.metrics.occlusion_duration,
            hi.metrics.occlusion_duration,
            lo.metrics.average_visibility,
            hi.metrics.average_visibility,
            lo.metrics.travel_distance,
            hi.metrics.travel_distance,
            lo.seconds,
            hi.seconds
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_safety() {
    let _g = serial();
    let runs = missions();
    let mut pass = runs.len() >= 4;
    let mut parts = Vec::new();
    for r in runs {
        let ok = r.metrics.min_chaser_clearance > 0.0 && r.metrics.samples_below_safe == 0;
        pass &= ok;
        parts.push(format!(
            "{} w_v={}: min phi {:.3} m, {} of {} samples below r_safe",
            r.scenario, r.w_v, r.metrics.min_chaser_clearance, r.metrics.samples_below_safe, r.metrics.samples
        ));
    }
    report(6, pass, &parts.join("; "));
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_7_compute_budget() {
    let _g = serial();
    let path = scenario_dir().join("city_blocks.json");
    let s = load_scenario::<&str>(&path, &[]).unwrap().scenario;
    let span = s.bounds_max - s.bounds_min;
    assert!(span.x >= 39.0 && span.y >= 39.0 && span.z >= 9.0 && s.resolution == 0.4);
    let grid = voxelize(&s, DEFAULT_VOXEL_BUDGET).unwrap();
    let t = Instant::now();
    let field = compute_edf(&grid);
    let edf = t.elapsed().as_secs_f64();
    // replan along the mission's own executed states
    let (log, _) = run_mission_with_field(&s, &field, &mut Wall(Instant::now())).unwrap();
    let mut worst = 0.0f64;
    let mut sum = [0.0f64; 5];
    let picks: Vec<_> = log.replans.iter().step_by(3).collect();
    for r in &picks {
        let t = Instant::now();
        let rec = replan_once(&s, &field, r.start_state, &mut Wall(Instant::now())).unwrap();
        worst = worst.max(t.elapsed().as_secs_f64());
        let tm = rec.timings;
        for (acc, v) in sum.iter_mut().zip([tm.candidates, tm.graph, tm.search, tm.corridor, tm.qp]) {
            *acc += v / picks.len() as f64;
        }
    }
    let pass = worst <= 0.5;
    report(
        7,
        pass,
        &format!(
            "{} replans on {}x{}x{} voxels, worst {worst:.3} s; mean stages: candidates {:.4}, graph {:.4}, search {:.4}, corridor {:.5}, qp {:.4} s; EDF {edf:.3} s",
            picks.len(),
            grid.dims()[0],
            grid.dims()[1],
            grid.dims()[2],
            sum[0],
            sum[1],
            sum[2],
            sum[3],
            sum[4]
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn criterion_8_determinism() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_dir().join("wall_courtyard.json");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_chaseplan"))
            .args(["simulate", "--scenario"])
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push((
            std::fs::read(out.join("log.csv")).unwrap(),
            std::fs::read(out.join("metrics.json")).unwrap(),
        ));
    }
    let same_log = outputs[0].0 == outputs[1].0;
    let same_metrics = outputs[0].1 == outputs[1].1;
    let pass = same_log && same_metrics && !outputs[0].0.is_empty();
    report(
        8,
        pass,
        &format!(
            "log.csv identical: {same_log} ({} bytes), metrics.json identical: {same_metrics}",
            outputs[0].0.len()
        ),
    );
    assert!(pass);
}
