//! Navigation graph over partitions.
//!
//! Nodes are partitions. A directed edge `a → b` exists when the cells of
//! `a` and `b` are 4-adjacent (or the same cell) and a turn–drive–turn
//! motion between some representative headings of the two partitions stays
//! collision-free along its whole sampled sweep.

use rayon::prelude::*;

use crate::geometry::{pose_valid, shortest_rotation, ObstacleSet, Pose2D, RobotModel};
use crate::partition::{CellIndex, Partition, PartitionGrid};

pub type NodeId = usize;

/// Default weight of turning relative to driving, meters per radian.
pub const DEFAULT_TURN_WEIGHT: f64 = 0.1;

/// Sampling steps for transition sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSteps {
    pub linear: f64,
    pub angular: f64,
}

impl TransitionSteps {
    /// Quarter of a cell linearly, one heading sample angularly.
    pub fn for_grid(grid: &PartitionGrid) -> Self {
        Self { linear: grid.spec().cell_size / 4.0, angular: grid.dtheta() }
    }
}

/// The three phases of a transition between two base poses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMotion {
    pub start: Pose2D,
    pub end: Pose2D,
    /// Heading during the straight segment; `None` when the positions
    /// coincide and the motion is a single rotation.
    pub travel_heading: Option<f64>,
}

impl TransitionMotion {
    /// Positions closer than this are treated as coincident.
    pub const SAME_POSITION: f64 = 1e-9;

    pub fn new(start: Pose2D, end: Pose2D) -> Self {
        let dx = end.x - start.x;
        let dy = end.y - start.y;
        let travel_heading =
            (dx.hypot(dy) > Self::SAME_POSITION).then(|| crate::geometry::normalize_angle(dy.atan2(dx)));
        Self { start, end, travel_heading }
    }

    pub fn length(&self) -> f64 {
        match self.travel_heading {
            Some(_) => (self.end.x - self.start.x).hypot(self.end.y - self.start.y),
            None => 0.0,
        }
    }

    /// Sum of absolute rotations. Rotations below 1e-9 rad count as zero.
    pub fn turn_total(&self) -> f64 {
        let clean = |a: f64| if a.abs() < 1e-9 { 0.0 } else { a.abs() };
        match self.travel_heading {
            Some(h) => clean(shortest_rotation(self.start.theta, h)) + clean(shortest_rotation(h, self.end.theta)),
            None => clean(shortest_rotation(self.start.theta, self.end.theta)),
        }
    }

    /// Every pose the forward simulation checks, in order. Rotations take
    /// the shorter way round; endpoints of every phase are included.
    pub fn sample_poses(&self, steps: TransitionSteps) -> Vec<Pose2D> {
        let mut out = Vec::new();
        let rotate = |out: &mut Vec<Pose2D>, x: f64, y: f64, from: f64, to: f64| {
            let delta = shortest_rotation(from, to);
            let n = (delta.abs() / steps.angular).ceil() as usize;
            for i in 0..=n {
                let t = if n == 0 { 0.0 } else { i as f64 / n as f64 };
                let theta = if i == n { to } else { from + delta * t };
                out.push(Pose2D::new(x, y, theta));
            }
        };
        match self.travel_heading {
            None => rotate(&mut out, self.start.x, self.start.y, self.start.theta, self.end.theta),
            Some(h) => {
                rotate(&mut out, self.start.x, self.start.y, self.start.theta, h);
                let len = self.length();
                let n = (len / steps.linear).ceil().max(1.0) as usize;
                for i in 1..=n {
                    let t = i as f64 / n as f64;
                    let (x, y) = if i == n {
                        (self.end.x, self.end.y)
                    } else {
                        (self.start.x + t * (self.end.x - self.start.x), self.start.y + t * (self.end.y - self.start.y))
                    };
                    out.push(Pose2D { x, y, theta: h });
                }
                rotate(&mut out, self.end.x, self.end.y, h, self.end.theta);
            }
        }
        out
    }
}

/// Forward-simulates the turn–drive–turn motion from `from` to `to`.
pub fn simulate_transition<O: ObstacleSet + ?Sized>(
    from: &Pose2D,
    to: &Pose2D,
    robot: &RobotModel,
    obstacles: &O,
    steps: TransitionSteps,
) -> bool {
    assert!(steps.linear > 0.0 && steps.angular > 0.0, "transition steps must be positive");
    TransitionMotion::new(*from, *to).sample_poses(steps).iter().all(|p| pose_valid(p, robot, obstacles))
}

/// Representative transition that validated an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeAnnotation {
    pub theta_from: f64,
    pub theta_to: f64,
    pub length: f64,
    pub turn: f64,
}

impl EdgeAnnotation {
    pub fn weight(&self, turn_weight: f64) -> f64 {
        self.length + turn_weight * self.turn
    }
}

/// Candidate headings for a partition, in trial order: the heading of the
/// hop (when the range holds it), the middle sample, then `phi1` and `phi2`.
/// Duplicates are dropped.
pub fn candidate_headings(p: &Partition, hop_heading: Option<f64>) -> Vec<f64> {
    let r = &p.range;
    let mut out: Vec<f64> = Vec::with_capacity(4);
    if let Some(h) = hop_heading {
        let k = r.nearest_sample(h);
        if r.contains_sample(k) {
            out.push(r.sample_angle(k));
        }
    }
    for t in [r.midpoint(), r.phi1(), r.phi2()] {
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

/// Whether the robot can move from partition `a` to partition `b`.
///
/// Candidate pairs `(θ_from, θ_to)` come from [`candidate_headings`] and are
/// tried in lexicographic order of their candidate positions; the first pair
/// whose transition validates wins. If none does, every remaining pair of
/// range samples is tried in sample order.
pub fn feasible_edge<O: ObstacleSet + ?Sized>(
    a: &Partition,
    b: &Partition,
    grid: &PartitionGrid,
    robot: &RobotModel,
    obstacles: &O,
    steps: TransitionSteps,
) -> Option<EdgeAnnotation> {
    debug_assert!(a.cell.manhattan(&b.cell) <= 1, "cells must be adjacent or equal");
    let hop = crate::partition::Direction::between(a.cell, b.cell).map(|d| d.heading());
    let from_candidates = candidate_headings(a, hop);
    let to_candidates = candidate_headings(b, hop);
    for &tf in &from_candidates {
        let start = grid.base_pose(a.cell, tf, robot);
        if !pose_valid(&start, robot, obstacles) {
            continue;
        }
        for &tt in &to_candidates {
            let end = grid.base_pose(b.cell, tt, robot);
            if let Some(e) = try_pair(start, end, tf, tt, robot, obstacles, steps) {
                return Some(e);
            }
        }
    }
    // Dense fallback over every sample pair. The representative headings
    // alone miss narrow exits (a detector parked under furniture can often
    // only back out along a few headings), which leaves one-way traps.
    for tf in a.range.sample_headings() {
        let start = grid.base_pose(a.cell, tf, robot);
        if !pose_valid(&start, robot, obstacles) {
            continue;
        }
        for tt in b.range.sample_headings() {
            if from_candidates.contains(&tf) && to_candidates.contains(&tt) {
                continue;
            }
            let end = grid.base_pose(b.cell, tt, robot);
            if let Some(e) = try_pair(start, end, tf, tt, robot, obstacles, steps) {
                return Some(e);
            }
        }
    }
    None
}

fn try_pair<O: ObstacleSet + ?Sized>(
    start: Pose2D,
    end: Pose2D,
    tf: f64,
    tt: f64,
    robot: &RobotModel,
    obstacles: &O,
    steps: TransitionSteps,
) -> Option<EdgeAnnotation> {
    if !simulate_transition(&start, &end, robot, obstacles, steps) {
        return None;
    }
    let m = TransitionMotion::new(start, end);
    Some(EdgeAnnotation { theta_from: tf, theta_to: tt, length: m.length(), turn: m.turn_total() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub annotation: EdgeAnnotation,
}

/// Directed graph of partitions with feasibility-checked edges.
#[derive(Debug, Clone, PartialEq)]
pub struct NavGraph {
    nodes: Vec<Partition>,
    // First node id of each cell (row-major), plus a trailing sentinel.
    cell_start: Vec<NodeId>,
    edges: Vec<Edge>,
    // Out-edges of node k are edges[out_start[k]..out_start[k + 1]].
    out_start: Vec<usize>,
    turn_weight: f64,
}

impl NavGraph {
    pub fn nodes(&self) -> &[Partition] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Partition {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, id: NodeId) -> &[Edge] {
        &self.edges[self.out_edge_range(id)]
    }

    /// Indices into [`NavGraph::edges`] of the out-edges of `id`.
    pub fn out_edge_range(&self, id: NodeId) -> std::ops::Range<usize> {
        self.out_start[id]..self.out_start[id + 1]
    }

    pub fn turn_weight(&self) -> f64 {
        self.turn_weight
    }

    /// Node ids of the partitions of cell `c`, by partition index.
    pub fn cell_nodes(&self, linear_cell: usize) -> std::ops::Range<NodeId> {
        self.cell_start[linear_cell]..self.cell_start[linear_cell + 1]
    }

    pub fn node_of(&self, linear_cell: usize, index: usize) -> Option<NodeId> {
        let r = self.cell_nodes(linear_cell);
        (index < r.len()).then(|| r.start + index)
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Option<&Edge> {
        let out = self.out_edges(from);
        out.binary_search_by_key(&to, |e| e.to).ok().map(|k| &out[k])
    }

    pub fn weight(&self, e: &Edge) -> f64 {
        e.annotation.weight(self.turn_weight)
    }

    /// Nodes reachable from `start` (inclusive) along directed edges.
    pub fn reachable_from(&self, start: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(n) = stack.pop() {
            for e in self.out_edges(n) {
                if !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }

    /// Strongly connected component id per node.
    pub fn scc_ids(&self) -> Vec<usize> {
        let mut g = petgraph::graph::DiGraph::<(), ()>::with_capacity(self.nodes.len(), self.edges.len());
        let ids: Vec<_> = (0..self.nodes.len()).map(|_| g.add_node(())).collect();
        for e in &self.edges {
            g.add_edge(ids[e.from], ids[e.to], ());
        }
        let mut out = vec![0; self.nodes.len()];
        for (k, comp) in petgraph::algo::tarjan_scc(&g).into_iter().enumerate() {
            for n in comp {
                out[n.index()] = k;
            }
        }
        out
    }
}

/// Pairs `(from, to)` whose feasibility the graph build evaluates: for every
/// node, the other partitions of its own cell and every partition of its
/// in-grid 4-neighbors, in node-id order.
pub fn candidate_pairs(grid: &PartitionGrid) -> Vec<(NodeId, NodeId)> {
    let spec = grid.spec();
    let mut cell_start = Vec::with_capacity(spec.cell_count() + 1);
    let mut acc = 0;
    for c in spec.cells() {
        cell_start.push(acc);
        acc += grid.ranges(c).len();
    }
    cell_start.push(acc);
    let mut pairs = Vec::new();
    for c in spec.cells() {
        let lc = spec.linear(c);
        let mut targets: Vec<CellIndex> = spec.neighbors4(c).collect();
        targets.push(c);
        targets.sort();
        for from in cell_start[lc]..cell_start[lc + 1] {
            for t in &targets {
                let lt = spec.linear(*t);
                for to in cell_start[lt]..cell_start[lt + 1] {
                    if to != from {
                        pairs.push((from, to));
                    }
                }
            }
        }
    }
    pairs
}

/// Builds the navigation graph. Edge checks run in parallel; the result is
/// ordered by `(from, to)` node id and is identical run to run.
pub fn build_nav_graph<O: ObstacleSet + ?Sized>(
    grid: &PartitionGrid,
    robot: &RobotModel,
    obstacles: &O,
    steps: TransitionSteps,
    turn_weight: f64,
) -> NavGraph {
    let nodes: Vec<Partition> = grid.all_partitions().collect();
    let spec = grid.spec();
    let mut cell_start = Vec::with_capacity(spec.cell_count() + 1);
    let mut acc = 0;
    for c in spec.cells() {
        cell_start.push(acc);
        acc += grid.ranges(c).len();
    }
    cell_start.push(acc);

    let pairs = candidate_pairs(grid);
    let edges: Vec<Edge> = pairs
        .par_iter()
        .filter_map(|&(from, to)| {
            feasible_edge(&nodes[from], &nodes[to], grid, robot, obstacles, steps).map(|annotation| Edge {
                from,
                to,
                annotation,
            })
        })
        .collect();

    let mut out_start = vec![0usize; nodes.len() + 1];
    for e in &edges {
        out_start[e.from + 1] += 1;
    }
    for k in 1..out_start.len() {
        out_start[k] += out_start[k - 1];
    }
    NavGraph { nodes, cell_start, edges, out_start, turn_weight }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{IndexedCloud, Point3, PointCloud};
    use crate::partition::{build_partition_grid, GridSpec, DEFAULT_DTHETA};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn steps() -> TransitionSteps {
        TransitionSteps { linear: 0.075, angular: DEFAULT_DTHETA }
    }

    fn build(spec: GridSpec, cloud: &PointCloud) -> (PartitionGrid, NavGraph) {
        let robot = RobotModel::default_magni_like();
        let grid = build_partition_grid(spec, &robot, cloud, DEFAULT_DTHETA).unwrap();
        let g = build_nav_graph(&grid, &robot, cloud, TransitionSteps::for_grid(&grid), DEFAULT_TURN_WEIGHT);
        (grid, g)
    }

    #[test]
    fn zero_motion_is_feasible() {
        let robot = RobotModel::default_magni_like();
        let p = Pose2D::new(1.0, 1.0, 0.3);
        assert!(simulate_transition(&p, &p, &robot, &PointCloud::empty(), steps()));
        let m = TransitionMotion::new(p, p);
        assert_eq!(m.length(), 0.0);
        assert_eq!(m.turn_total(), 0.0);
        assert!(m.travel_heading.is_none());
    }

    #[test]
    fn endpoint_in_pillar_fails() {
        let robot = RobotModel::default_magni_like();
        let cloud = PointCloud::new(vec![Point3::new(2.0, 0.0, 0.2)]).unwrap();
        let from = Pose2D::new(0.0, 0.0, 0.0);
        let to = Pose2D::new(2.0, 0.0, 0.0);
        assert!(pose_valid(&from, &robot, &cloud));
        assert!(!simulate_transition(&from, &to, &robot, &cloud, steps()));
    }

    #[test]
    fn motion_samples_respect_steps() {
        let from = Pose2D::new(0.0, 0.0, 0.0);
        let to = Pose2D::new(0.0, 1.0, PI);
        let m = TransitionMotion::new(from, to);
        assert!((m.travel_heading.unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!((m.turn_total() - PI).abs() < 1e-12);
        let poses = m.sample_poses(steps());
        assert_eq!(poses.first().unwrap(), &from);
        assert_eq!(poses.last().unwrap().x, to.x);
        assert_eq!(poses.last().unwrap().y, to.y);
        assert!((poses.last().unwrap().theta - PI).abs() < 1e-12);
        for w in poses.windows(2) {
            let lin = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
            let ang = shortest_rotation(w[0].theta, w[1].theta).abs();
            assert!(lin <= 0.075 + 1e-12 && ang <= DEFAULT_DTHETA + 1e-12);
        }
    }

    #[test]
    fn overhang_blocks_final_rotation_only() {
        // Base drives from (0, 0) to (1, 0) heading east, then turns to face
        // north. The detector (0.45 m ahead, under 0.30 m) sweeps an arc
        // around (1, 0); a low ledge sits on that arc at 45°.
        let robot = RobotModel::default_magni_like();
        let r = 0.45 * std::f64::consts::FRAC_1_SQRT_2;
        let mut pts = Vec::new();
        for i in -2..=2 {
            for j in -2..=2 {
                pts.push(Point3::new(1.0 + r + i as f64 * 0.01, r + j as f64 * 0.01, 0.25));
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let from = Pose2D::new(0.0, 0.0, 0.0);
        let straight = Pose2D::new(1.0, 0.0, 0.0);
        let turned = Pose2D::new(1.0, 0.0, FRAC_PI_2);
        assert!(pose_valid(&straight, &robot, &cloud));
        assert!(pose_valid(&turned, &robot, &cloud));
        let dense = |a: &Pose2D, b: &Pose2D| {
            let fine = TransitionSteps { linear: 0.075 / 16.0, angular: DEFAULT_DTHETA / 16.0 };
            TransitionMotion::new(*a, *b).sample_poses(fine).iter().all(|p| pose_valid(p, &robot, &cloud))
        };
        assert!(simulate_transition(&from, &straight, &robot, &cloud, steps()));
        assert!(dense(&from, &straight));
        assert!(!simulate_transition(&from, &turned, &robot, &cloud, steps()));
        assert!(!dense(&from, &turned));
    }

    #[test]
    fn adjacent_empty_cells_hop_straight() {
        let spec = GridSpec::new((0.0, 0.0), 0.3, 2, 1).unwrap();
        let (grid, g) = build(spec, &PointCloud::empty());
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges().len(), 2);
        let e = g.edge(0, 1).unwrap();
        assert_eq!(e.annotation.theta_from, 0.0);
        assert_eq!(e.annotation.theta_to, 0.0);
        assert_eq!(e.annotation.turn, 0.0);
        assert!((e.annotation.length - 0.3).abs() < 1e-12);
        // Reverse hop heads west.
        let back = g.edge(1, 0).unwrap();
        assert!((back.annotation.theta_from - PI).abs() < 1e-12);
        assert_eq!(back.annotation.turn, 0.0);
        assert_eq!(grid.partition_count(), 2);
    }

    #[test]
    fn single_cell_graph() {
        let spec = GridSpec::new((0.0, 0.0), 0.3, 1, 1).unwrap();
        let (_, g) = build(spec, &PointCloud::empty());
        assert_eq!(g.node_count(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn blocked_rotation_between_same_cell_partitions() {
        // Detector cell at the origin, walls to the north and south close
        // enough that only east- and west-facing arcs survive. Rotating
        // between them sweeps the body through a wall.
        let robot = RobotModel::default_magni_like();
        let mut pts = Vec::new();
        for i in -30..=30 {
            for k in 0..8 {
                let x = i as f64 * 0.03;
                let z = 0.03 + k as f64 * 0.1;
                pts.push(Point3::new(x, 0.36, z));
                pts.push(Point3::new(x, -0.36, z));
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let spec = GridSpec::new((-0.15, -0.15), 0.3, 1, 1).unwrap();
        let grid = build_partition_grid(spec, &robot, &cloud, DEFAULT_DTHETA).unwrap();
        let parts: Vec<_> = grid.partitions(CellIndex::new(0, 0)).collect();
        assert_eq!(parts.len(), 2, "expected east and west arcs");
        let s = TransitionSteps::for_grid(&grid);
        assert!(feasible_edge(&parts[0], &parts[1], &grid, &robot, &cloud, s).is_none());
        assert!(feasible_edge(&parts[1], &parts[0], &grid, &robot, &cloud, s).is_none());
        // Dense rotation oracle: every candidate pair fails at 1/16 steps.
        let fine = TransitionSteps { linear: s.linear / 16.0, angular: s.angular / 16.0 };
        for tf in candidate_headings(&parts[0], None) {
            for tt in candidate_headings(&parts[1], None) {
                let a = grid.base_pose(parts[0].cell, tf, &robot);
                let b = grid.base_pose(parts[1].cell, tt, &robot);
                assert!(!simulate_transition(&a, &b, &robot, &cloud, fine));
            }
        }
    }

    #[test]
    fn edges_stay_local_and_revalidate() {
        let spec = GridSpec::new((0.0, 0.0), 0.3, 5, 5).unwrap();
        let (cx, cy) = spec.cell_center(CellIndex::new(2, 2));
        let cloud = PointCloud::new(crate::scene::pillar_points((cx, cy), 0.1, 0.03, 1.0, 40.0)).unwrap();
        let idx = IndexedCloud::from(&cloud);
        let robot = RobotModel::default_magni_like();
        let grid = build_partition_grid(spec, &robot, &idx, DEFAULT_DTHETA).unwrap();
        let s = TransitionSteps::for_grid(&grid);
        let g = build_nav_graph(&grid, &robot, &idx, s, DEFAULT_TURN_WEIGHT);
        assert!(!g.edges().is_empty());
        for e in g.edges() {
            let a = g.node(e.from);
            let b = g.node(e.to);
            assert!(a.cell.manhattan(&b.cell) <= 1);
            let pa = grid.base_pose(a.cell, e.annotation.theta_from, &robot);
            let pb = grid.base_pose(b.cell, e.annotation.theta_to, &robot);
            assert!(simulate_transition(&pa, &pb, &robot, &cloud, s));
            assert!(a.range.contains(e.annotation.theta_from));
            assert!(b.range.contains(e.annotation.theta_to));
        }
        for w in g.edges().windows(2) {
            assert!((w[0].from, w[0].to) < (w[1].from, w[1].to));
        }
    }

    #[test]
    fn dense_fallback_finds_exit_from_under_table() {
        let cloud = crate::scene::under_table_example().rasterize().unwrap().without_floor(0.02);
        let idx = IndexedCloud::from(&cloud);
        let robot = RobotModel::default_magni_like();
        let spec = GridSpec::new((0.0, 0.0), 0.3, 12, 10).unwrap();
        let grid = build_partition_grid(spec, &robot, &idx, DEFAULT_DTHETA).unwrap();
        let s = TransitionSteps::for_grid(&grid);
        // Detector just under the south edge, backing out to the open cell
        // below it.
        let a = grid.partitions(CellIndex::new(5, 3)).next().unwrap();
        let b = grid.partitions(CellIndex::new(5, 2)).next().unwrap();
        let hop = Some(crate::partition::Direction::between(a.cell, b.cell).unwrap().heading());
        let (ca, cb) = (candidate_headings(&a, hop), candidate_headings(&b, hop));
        for &tf in &ca {
            for &tt in &cb {
                let pa = grid.base_pose(a.cell, tf, &robot);
                let pb = grid.base_pose(b.cell, tt, &robot);
                assert!(!simulate_transition(&pa, &pb, &robot, &idx, s));
            }
        }
        let e = feasible_edge(&a, &b, &grid, &robot, &idx, s).expect("exit exists");
        assert!(!(ca.contains(&e.theta_from) && cb.contains(&e.theta_to)));
        let pa = grid.base_pose(a.cell, e.theta_from, &robot);
        let pb = grid.base_pose(b.cell, e.theta_to, &robot);
        assert!(simulate_transition(&pa, &pb, &robot, &cloud, s));
    }
}
