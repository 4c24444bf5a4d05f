//! Viewpoint preplanning over a layered graph.
//!
//! Layer 0 holds the chaser position, layers `1..=N` hold candidate
//! viewpoints around the forecast target positions `x_p,n`, and a dummy goal
//! closes the graph. Edge weights combine squared travel distance, the
//! transitional visibility cost and the squared tracking-distance error; the
//! cheapest source-to-goal path is the waypoint plan.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::fields::{transitional_cost_from_integrals, DistanceField};
use crate::math::{asin, floor, Vec3};
use crate::world::TargetPath;

/// Weight of every edge into the dummy goal.
pub const DUMMY_EDGE_WEIGHT: f64 = 1.0;

/// Target positions sampled at `t0 + n·dt`, `n = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetForecast {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<Vec3>,
}

impl TargetForecast {
    pub fn segments(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len())
            .map(|n| self.t0 + n as f64 * self.dt)
            .collect()
    }
}

/// Samples the scripted target path over `[t, t + horizon]` at `N + 1`
/// equispaced times, holding the end position past the last knot.
pub fn forecast_window(path: &TargetPath, t: f64, horizon: f64, segments: usize) -> Result<TargetForecast> {
    if path.knots().is_empty() {
        return Err(Error::EmptyTargetPath);
    }
    if segments == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidConfig {
            field: "H",
            reason: "horizon and segment count must be positive".into(),
        });
    }
    let dt = horizon / segments as f64;
    let samples = (0..=segments)
        .map(|n| path.position(t + n as f64 * dt))
        .collect();
    Ok(TargetForecast { t0: t, dt, samples })
}

/// Filtered viewpoint lattice `Ω(x_p,n)` for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub layer: usize,
    pub points: Vec<Vec3>,
    /// `ψ(point; x_p,n)` for each point.
    pub visibility: Vec<f64>,
}

/// Elevation angle of `v` above the horizontal plane.
pub fn elevation(v: Vec3) -> f64 {
    let n = v.norm();
    if n == 0.0 {
        0.0
    } else {
        asin((v.z / n).clamp(-1.0, 1.0))
    }
}

/// Lattice points of spacing `Ω_res` centered on the target, inside
/// `B(x_p, d_upper)` and outside `B(x_p, d_lower)`, kept if they satisfy the
/// Euclidean distance bounds, the elevation bounds, `ψ > 0` and `φ ≥ r_safe`.
pub fn generate_candidates(
    field: &DistanceField,
    target: Vec3,
    layer: usize,
    config: &PlannerConfig,
) -> Result<CandidateSet> {
    if !field.contains(target) {
        return Err(Error::OutOfRange { point: target });
    }
    let spacing = config.candidate_spacing;
    let m = floor(config.d_upper / spacing + 1e-9) as i64;
    let step = field.default_step();
    let mut points = Vec::new();
    let mut visibility = Vec::new();
    for k in -m..=m {
        for j in -m..=m {
            for i in -m..=m {
                let off = Vec3::new(i as f64, j as f64, k as f64) * spacing;
                let box_norm = off.x.abs().max(off.y.abs()).max(off.z.abs());
                if box_norm <= config.d_lower || box_norm > config.d_upper {
                    continue;
                }
                let dist = off.norm();
                if dist < config.d_lower || dist > config.d_upper {
                    continue;
                }
                let el = elevation(off);
                if el < config.theta_min || el > config.theta_max {
                    continue;
                }
                let p = target + off;
                if !field.contains(p) {
                    continue;
                }
                if field.phi_unchecked(p) < config.r_safe {
                    continue;
                }
                let psi = field.psi_unchecked(p, target, step);
                if psi <= 0.0 {
                    continue;
                }
                points.push(p);
                visibility.push(psi);
            }
        }
    }
    if points.is_empty() {
        return Err(Error::NoCandidates { layer });
    }
    Ok(CandidateSet {
        layer,
        points,
        visibility,
    })
}

/// Decomposed edge weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeCost {
    /// `‖x_{n−1} − x_n‖²`
    pub interval: f64,
    /// Transitional visibility cost `c_v` (before weighting).
    pub visibility: f64,
    /// `(‖x_p,n − x_n‖ − d_des)²` (before weighting).
    pub tracking: f64,
    /// `interval + w_v·visibility + w_d·tracking`, `+∞` if `c_v` is.
    pub total: f64,
}

impl EdgeCost {
    pub fn compose(interval: f64, visibility: f64, tracking: f64, config: &PlannerConfig) -> Self {
        let total = if visibility.is_infinite() {
            f64::INFINITY
        } else {
            interval + config.w_v * visibility + config.w_d * tracking
        };
        EdgeCost {
            interval,
            visibility,
            tracking,
            total,
        }
    }
}

/// Preplanning edge weight between consecutive waypoints.
pub fn edge_cost(
    field: &DistanceField,
    x_prev: Vec3,
    x_next: Vec3,
    xp_prev: Vec3,
    xp_next: Vec3,
    config: &PlannerConfig,
) -> Result<EdgeCost> {
    let c_v = field.transitional_visibility_cost(x_prev, x_next, xp_prev, xp_next)?;
    Ok(edge_cost_from_parts(x_prev, x_next, xp_next, c_v, config))
}

fn edge_cost_from_parts(x_prev: Vec3, x_next: Vec3, xp_next: Vec3, c_v: f64, config: &PlannerConfig) -> EdgeCost {
    let interval = (x_prev - x_next).norm_squared();
    let resid = xp_next.distance(x_next) - config.d_des;
    EdgeCost::compose(interval, c_v, resid * resid, config)
}

/// Edge from node `from` of layer `n − 1` to node `to` of layer `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub cost: EdgeCost,
}

/// Layered DAG `V_0 … V_N` plus an implicit dummy goal `V_{N+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredGraph {
    pub times: Vec<f64>,
    /// `layers[0]` is the chaser position.
    pub layers: Vec<Vec<Vec3>>,
    /// `edges[n − 1]` connects layer `n − 1` to layer `n`, sorted by `(from, to)`.
    pub edges: Vec<Vec<GraphEdge>>,
    pub dummy_weight: f64,
}

impl LayeredGraph {
    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum::<usize>() + self.layers.last().map_or(0, Vec::len)
    }
}

/// Candidate sets for layers `1..=N`.
pub fn generate_layers(
    field: &DistanceField,
    forecast: &TargetForecast,
    config: &PlannerConfig,
) -> Result<Vec<CandidateSet>> {
    (1..forecast.samples.len())
        .map(|n| generate_candidates(field, forecast.samples[n], n, config))
        .collect()
}

/// Builds the graph from precomputed candidate layers. An edge
/// `(v_{n−1}, v_n)` exists iff the segment keeps clearance `r_safe`, both
/// endpoints see their target sample, the spacing is below `d_max`, and the
/// edge cost is finite. The source node is exempt from its own visibility
/// test and its clearance threshold is capped at its current clearance.
pub fn build_graph_from_layers(
    field: &DistanceField,
    chaser_position: Vec3,
    forecast: &TargetForecast,
    candidates: &[CandidateSet],
    config: &PlannerConfig,
) -> Result<LayeredGraph> {
    let n_layers = forecast.segments();
    if candidates.len() != n_layers {
        return Err(Error::Dimension(format!(
            "{} candidate layers for {n_layers} forecast steps",
            candidates.len()
        )));
    }
    if let Some(empty) = candidates.iter().find(|c| c.points.is_empty()) {
        return Err(Error::NoCandidates { layer: empty.layer });
    }
    let source_phi = field.phi(chaser_position)?;
    let step = field.default_step();
    for s in &forecast.samples {
        if !field.contains(*s) {
            return Err(Error::OutOfRange { point: *s });
        }
    }

    let mut layers = Vec::with_capacity(n_layers + 1);
    layers.push(vec![chaser_position]);
    let mut visible: Vec<Vec<bool>> = vec![vec![true]];
    for c in candidates {
        for p in &c.points {
            if !field.contains(*p) {
                return Err(Error::OutOfRange { point: *p });
            }
        }
        layers.push(c.points.clone());
        visible.push(c.visibility.iter().map(|&v| v > 0.0).collect());
    }

    let mut edges = Vec::with_capacity(n_layers);
    for n in 1..=n_layers {
        let (xp_prev, xp_next) = (forecast.samples[n - 1], forecast.samples[n]);
        let clearance = if n == 1 {
            config.r_safe.min(source_phi)
        } else {
            config.r_safe
        };
        let mut layer_edges = Vec::new();
        // integral of ψ along a candidate-to-candidate segment, shared per edge
        for (from, &a) in layers[n - 1].iter().enumerate() {
            if !visible[n - 1][from] {
                continue;
            }
            for (to, &b) in layers[n].iter().enumerate() {
                if !visible[n][to] {
                    continue;
                }
                if !(a.distance(b) < config.d_max) {
                    continue;
                }
                let (lo, hi) = if a.lex_le(b) { (a, b) } else { (b, a) };
                if field.segment_min_sampled(lo, hi, step) < clearance {
                    continue;
                }
                let i_prev = field.line_integral_unchecked(a, b, xp_prev, step);
                if i_prev <= 0.0 {
                    continue;
                }
                let i_next = field.line_integral_unchecked(a, b, xp_next, step);
                let c_v = transitional_cost_from_integrals(i_prev, i_next);
                let cost = edge_cost_from_parts(a, b, xp_next, c_v, config);
                if cost.total.is_finite() {
                    layer_edges.push(GraphEdge { from, to, cost });
                }
            }
        }
        edges.push(layer_edges);
    }

    Ok(LayeredGraph {
        times: forecast.times(),
        layers,
        edges,
        dummy_weight: DUMMY_EDGE_WEIGHT,
    })
}

/// Generates the candidate layers and builds the graph.
pub fn build_graph(
    field: &DistanceField,
    chaser_position: Vec3,
    forecast: &TargetForecast,
    config: &PlannerConfig,
) -> Result<LayeredGraph> {
    let candidates = generate_layers(field, forecast, config)?;
    build_graph_from_layers(field, chaser_position, forecast, &candidates, config)
}

/// Preplanned waypoint sequence `σ = (x_0 … x_N)` at times `t_0 … t_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaypointPlan {
    pub times: Vec<f64>,
    pub waypoints: Vec<Vec3>,
    /// Sum of edge weights, excluding the dummy edge.
    pub cost: f64,
    /// Cost decomposition of each path edge, `edges[n − 1]` ending at `x_n`.
    pub edges: Vec<EdgeCost>,
}

#[derive(Clone, Copy, Debug)]
struct HeapItem {
    cost: f64,
    layer: usize,
    index: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // min-heap on (cost, layer, index)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.layer.cmp(&self.layer))
            .then_with(|| other.index.cmp(&self.index))
    }
}

fn reconstruct(graph: &LayeredGraph, pred: &[Vec<Option<usize>>], last: usize, cost: f64) -> WaypointPlan {
    let n_layers = graph.layers.len() - 1;
    let mut idx = vec![0usize; n_layers + 1];
    idx[n_layers] = last;
    for n in (1..=n_layers).rev() {
        let e = pred[n][idx[n]].expect("reachable node has a predecessor");
        idx[n - 1] = graph.edges[n - 1][e].from;
        debug_assert_eq!(graph.edges[n - 1][e].to, idx[n]);
    }
    let mut edges = Vec::with_capacity(n_layers);
    for n in 1..=n_layers {
        let e = pred[n][idx[n]].expect("reachable node has a predecessor");
        edges.push(graph.edges[n - 1][e].cost);
    }
    WaypointPlan {
        times: graph.times.clone(),
        waypoints: (0..=n_layers).map(|n| graph.layers[n][idx[n]]).collect(),
        cost,
        edges,
    }
}

fn infeasible(graph: &LayeredGraph) -> Error {
    let dead = graph
        .edges
        .iter()
        .position(Vec::is_empty)
        .map(|i| format!("no feasible edges into layer {}", i + 1))
        .unwrap_or_else(|| "no path reaches the last layer".into());
    Error::PreplanInfeasible(dead)
}

/// Dijkstra from the chaser node to the dummy goal. Ties prefer the smaller
/// predecessor index, then the smaller last-layer index.
pub fn shortest_path(graph: &LayeredGraph) -> Result<WaypointPlan> {
    let n_layers = graph.layers.len() - 1;
    if n_layers == 0 {
        return Err(Error::PreplanInfeasible("graph has no candidate layers".into()));
    }
    // outgoing edge lists per layer node
    let mut out: Vec<Vec<Vec<usize>>> = graph.layers.iter().map(|l| vec![Vec::new(); l.len()]).collect();
    for n in 1..=n_layers {
        for (e, edge) in graph.edges[n - 1].iter().enumerate() {
            out[n - 1][edge.from].push(e);
        }
    }
    let mut dist: Vec<Vec<f64>> = graph.layers.iter().map(|l| vec![f64::INFINITY; l.len()]).collect();
    let mut pred: Vec<Vec<Option<usize>>> = graph.layers.iter().map(|l| vec![None; l.len()]).collect();
    let mut done: Vec<Vec<bool>> = graph.layers.iter().map(|l| vec![false; l.len()]).collect();
    let mut goal: Option<(f64, usize)> = None;
    let mut heap = BinaryHeap::new();
    dist[0][0] = 0.0;
    heap.push(HeapItem { cost: 0.0, layer: 0, index: 0 });

    while let Some(HeapItem { cost, layer, index }) = heap.pop() {
        if layer == n_layers + 1 {
            break;
        }
        if done[layer][index] {
            continue;
        }
        done[layer][index] = true;
        if layer == n_layers {
            let through = cost + graph.dummy_weight;
            let better = match goal {
                None => true,
                Some((c, i)) => through < c + graph.dummy_weight || (through == c + graph.dummy_weight && index < i),
            };
            if better {
                goal = Some((cost, index));
                heap.push(HeapItem {
                    cost: through,
                    layer: n_layers + 1,
                    index: 0,
                });
            }
            continue;
        }
        for &e in &out[layer][index] {
            let edge = &graph.edges[layer][e];
            let nd = cost + edge.cost.total;
            let slot = &mut dist[layer + 1][edge.to];
            let current_pred = pred[layer + 1][edge.to].map(|p| graph.edges[layer][p].from);
            if nd < *slot || (nd == *slot && current_pred.map_or(true, |p| index < p)) {
                *slot = nd;
                pred[layer + 1][edge.to] = Some(e);
                heap.push(HeapItem {
                    cost: nd,
                    layer: layer + 1,
                    index: edge.to,
                });
            }
        }
    }

    match goal {
        Some((cost, last)) => Ok(reconstruct(graph, &pred, last, cost)),
        None => Err(infeasible(graph)),
    }
}

/// Forward dynamic program over the layers; same tie-breaking as
/// [`shortest_path`].
pub fn shortest_path_dp(graph: &LayeredGraph) -> Result<WaypointPlan> {
    let n_layers = graph.layers.len() - 1;
    if n_layers == 0 {
        return Err(Error::PreplanInfeasible("graph has no candidate layers".into()));
    }
    let mut dist: Vec<Vec<f64>> = graph.layers.iter().map(|l| vec![f64::INFINITY; l.len()]).collect();
    let mut pred: Vec<Vec<Option<usize>>> = graph.layers.iter().map(|l| vec![None; l.len()]).collect();
    dist[0][0] = 0.0;
    for n in 1..=n_layers {
        // edges are sorted by (from, to), so the first strict improvement
        // keeps the smallest predecessor among exact ties
        for (e, edge) in graph.edges[n - 1].iter().enumerate() {
            let nd = dist[n - 1][edge.from] + edge.cost.total;
            if nd < dist[n][edge.to] {
                dist[n][edge.to] = nd;
                pred[n][edge.to] = Some(e);
            }
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, &d) in dist[n_layers].iter().enumerate() {
        if d.is_finite() && best.map_or(true, |(b, _)| d < b) {
            best = Some((d, i));
        }
    }
    match best {
        Some((cost, last)) => Ok(reconstruct(graph, &pred, last, cost)),
        None => Err(infeasible(graph)),
    }
}

/// Full preplanning step: candidates, graph, shortest path.
pub fn preplan(
    field: &DistanceField,
    chaser_position: Vec3,
    forecast: &TargetForecast,
    config: &PlannerConfig,
) -> Result<WaypointPlan> {
    let graph = build_graph(field, chaser_position, forecast, config)?;
    shortest_path(&graph)
}

/// Re-checks a plan against the preplanning constraints: initial waypoint,
/// shell membership and visibility per waypoint, segment clearance and
/// waypoint spacing. Returns a description of the first violation.
pub fn check_plan(
    field: &DistanceField,
    plan: &WaypointPlan,
    chaser_position: Vec3,
    forecast: &TargetForecast,
    config: &PlannerConfig,
) -> core::result::Result<(), alloc::string::String> {
    if plan.waypoints.len() != forecast.samples.len() || plan.times.len() != plan.waypoints.len() {
        return Err("plan length differs from forecast".into());
    }
    if plan.waypoints[0] != chaser_position {
        return Err("x_0 differs from the chaser position".into());
    }
    let source_phi = field.phi(chaser_position).map_err(|e| format!("{e}"))?;
    for n in 1..plan.waypoints.len() {
        let (a, b, xp) = (plan.waypoints[n - 1], plan.waypoints[n], forecast.samples[n]);
        let d = b.distance(xp);
        if d < config.d_lower - 1e-9 || d > config.d_upper + 1e-9 {
            return Err(format!("waypoint {n} at distance {d} outside tracking bounds"));
        }
        let el = elevation(b - xp);
        if el < config.theta_min - 1e-9 || el > config.theta_max + 1e-9 {
            return Err(format!("waypoint {n} elevation {el} outside bounds"));
        }
        let psi = field.psi_at(b, xp).map_err(|e| format!("{e}"))?;
        if psi <= 0.0 {
            return Err(format!("waypoint {n} does not see the target"));
        }
        let clearance = field.segment_clearance(a, b).map_err(|e| format!("{e}"))?;
        let required = if n == 1 { config.r_safe.min(source_phi) } else { config.r_safe };
        if clearance < required {
            return Err(format!("segment {n} clearance {clearance} below {required}"));
        }
        if a.distance(b) > config.d_max {
            return Err(format!("segment {n} longer than d_max"));
        }
    }
    Ok(())
}
