//! Sensor-aligned coverage planning over the navigation graph.
//!
//! Both planners walk the partition graph instead of a plain occupancy
//! grid. A cell counts as covered once some step's detector footprint
//! overlaps at least `coverage_overlap` of its area; only cells with at least
//! one partition (coverable cells) are tracked.
//!
//! * Path Transform: every node carries the cost `d + α · p`, with `d` the
//!   graph distance from the start and `p` the obstacle proximity, the cell
//!   distance to the nearest uncoverable cell or grid edge (in meters). The planner steps to
//!   the cheapest uncovered neighbor; when none is left it jumps, along a
//!   shortest path, to the cheapest uncovered node overall.
//! * Backtracking spiral: the planner prefers the neighbor that keeps a
//!   covered or blocked cell on its right (trying forward, left, right, back
//!   relative to the current travel direction), otherwise any uncovered
//!   neighbor in N, E, S, W order. Dead ends backtrack along a shortest path
//!   to the nearest uncovered node.
//!
//! Ties always go to the lowest `(cell_y, cell_x, partition)`.
//!
//! Edges are directed, so some moves cannot be undone. Both planners stay
//! inside the current strongly connected component of the graph until it
//! has no uncovered cell left, then leave toward the component that keeps
//! the most uncovered cells reachable.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::footprint::{body_cells, footprint_cells, min_center_overlap, DEFAULT_COVERAGE_OVERLAP};
use crate::geometry::{Pose2D, RobotModel};
use crate::graph::{NavGraph, NodeId};
use crate::partition::{CellIndex, Direction, GridSpec, PartitionGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    PathTransform,
    Bsa,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::PathTransform => "path_transform",
            Algorithm::Bsa => "bsa",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "path_transform" | "path-transform" | "pt" => Ok(Algorithm::PathTransform),
            "bsa" | "backtracking_spiral" => Ok(Algorithm::Bsa),
            other => Err(Error::Config(format!("unknown planner algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub algorithm: Algorithm,
    /// Detector pose the survey starts from.
    pub start: Pose2D,
    /// Path Transform obstacle-proximity weight α.
    pub obstacle_weight: f64,
    /// Cost per newly contaminated cell on an edge (0 disables).
    pub contamination_penalty: f64,
    /// Relative surcharge on edges into already covered cells.
    pub revisit_penalty: f64,
    pub coverage_overlap: f64,
    /// Commanded survey speed, m/s.
    pub velocity: f64,
}

impl PlannerConfig {
    pub fn new(algorithm: Algorithm, start: Pose2D, velocity: f64) -> Self {
        Self {
            algorithm,
            start,
            obstacle_weight: 1.0,
            contamination_penalty: 0.0,
            revisit_penalty: 0.0,
            coverage_overlap: DEFAULT_COVERAGE_OVERLAP,
            velocity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.obstacle_weight >= 0.0) {
            return Err(Error::Config("obstacle_weight must be ≥ 0".into()));
        }
        if !(self.contamination_penalty >= 0.0 && self.revisit_penalty >= 0.0) {
            return Err(Error::Config("planner penalties must be ≥ 0".into()));
        }
        if !(self.coverage_overlap > 0.0 && self.coverage_overlap <= 1.0) {
            return Err(Error::Config("coverage_overlap must lie in (0, 1]".into()));
        }
        if !(self.velocity > 0.0 && self.velocity.is_finite()) {
            return Err(Error::Config("survey velocity must be positive".into()));
        }
        Ok(())
    }

    /// Short stable digest of every field.
    pub fn hash(&self) -> String {
        let text = format!(
            "{}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}",
            self.algorithm.as_str(),
            self.start.x,
            self.start.y,
            self.start.theta,
            self.obstacle_weight,
            self.contamination_penalty,
            self.revisit_penalty,
            self.coverage_overlap,
            self.velocity,
            "v1"
        );
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub node: NodeId,
    pub cell: CellIndex,
    pub partition: usize,
    pub sensor: Pose2D,
    pub base: Pose2D,
    pub velocity: f64,
    /// Cells this step's footprint covers (row-major).
    pub footprint: Vec<CellIndex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveragePlan {
    pub grid: GridSpec,
    pub algorithm: Algorithm,
    pub config_hash: String,
    pub coverage_overlap: f64,
    pub steps: Vec<PlanStep>,
    /// Coverable cells covered by some step, row-major.
    pub covered_cells: Vec<CellIndex>,
    pub total_length: f64,
    pub total_turn: f64,
    pub backtracks: usize,
}

impl CoveragePlan {
    fn empty(grid: &PartitionGrid, cfg: &PlannerConfig) -> Self {
        Self {
            grid: *grid.spec(),
            algorithm: cfg.algorithm,
            config_hash: cfg.hash(),
            coverage_overlap: cfg.coverage_overlap,
            steps: Vec::new(),
            covered_cells: Vec::new(),
            total_length: 0.0,
            total_turn: 0.0,
            backtracks: 0,
        }
    }
}

/// Finds the partition holding the start pose and the sample heading to
/// start at. Headings within half a sample of a range snap onto it.
pub fn locate_start(graph: &NavGraph, grid: &PartitionGrid, start: &Pose2D) -> Result<(NodeId, f64)> {
    let err = |reason: &str| Error::StartPose {
        x: start.x,
        y: start.y,
        heading_deg: start.theta.to_degrees(),
        reason: reason.to_string(),
    };
    let cell = grid.spec().locate(start.x, start.y).ok_or_else(|| err("lies outside the grid"))?;
    let lc = grid.spec().linear(cell);
    let tolerance = grid.dtheta() / 2.0 + 1e-9;
    let mut best: Option<(f64, NodeId)> = None;
    for id in graph.cell_nodes(lc) {
        let d = graph.node(id).range.distance_to(start.theta);
        if d <= tolerance && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, id));
        }
    }
    let (_, node) = best.ok_or_else(|| {
        if graph.cell_nodes(lc).is_empty() {
            err("is in a cell with no valid detector placement")
        } else {
            err("has a heading outside every valid orientation range of its cell")
        }
    })?;
    let range = graph.node(node).range;
    let k = range.nearest_sample(start.theta);
    let gap = |t: f64| crate::geometry::shortest_rotation(start.theta, t).abs();
    let theta = if range.contains_sample(k) {
        range.sample_angle(k)
    } else if gap(range.phi1()) <= gap(range.phi2()) {
        range.phi1()
    } else {
        range.phi2()
    };
    Ok((node, theta))
}

/// Distance in cells from every cell to the nearest uncoverable cell or to
/// the outside of the grid, whichever is closer.
pub fn obstacle_distance(grid: &PartitionGrid) -> Vec<usize> {
    let spec = grid.spec();
    let mut dist = vec![usize::MAX; spec.cell_count()];
    let mut queue = VecDeque::new();
    for c in grid.uncoverable_cells() {
        dist[spec.linear(c)] = 0;
        queue.push_back(c);
    }
    while let Some(c) = queue.pop_front() {
        let d = dist[spec.linear(c)];
        for n in spec.neighbors4(c) {
            let k = spec.linear(n);
            if dist[k] == usize::MAX {
                dist[k] = d + 1;
                queue.push_back(n);
            }
        }
    }
    spec.cells()
        .map(|c| {
            let edge = (c.x + 1).min(c.y + 1).min(spec.nx - c.x).min(spec.ny - c.y);
            dist[spec.linear(c)].min(edge)
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
struct Arrival {
    footprint: Vec<CellIndex>,
    body: Vec<CellIndex>,
}

/// Heap entry ordered by cost, then by node id (both ascending).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Queued {
    cost: f64,
    node: NodeId,
}

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Plain shortest-path distances over edge weights.
fn dijkstra(graph: &NavGraph, source: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(Queued { cost: 0.0, node: source }));
    while let Some(Reverse(Queued { cost, node })) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for e in graph.out_edges(node) {
            let c = cost + graph.weight(e);
            if c < dist[e.to] {
                dist[e.to] = c;
                heap.push(Reverse(Queued { cost: c, node: e.to }));
            }
        }
    }
    dist
}

struct Planner<'a> {
    graph: &'a NavGraph,
    grid: &'a PartitionGrid,
    robot: &'a RobotModel,
    cfg: &'a PlannerConfig,
    spec: GridSpec,
    arrivals: Vec<Arrival>,
    target: Vec<bool>,
    covered: Vec<bool>,
    clean: Vec<bool>,
    remaining: usize,
    scc: Vec<usize>,
    pt_value: Vec<f64>,
    current: NodeId,
    heading: Direction,
    plan: CoveragePlan,
}

impl<'a> Planner<'a> {
    fn new(
        graph: &'a NavGraph,
        grid: &'a PartitionGrid,
        robot: &'a RobotModel,
        cfg: &'a PlannerConfig,
        start: NodeId,
    ) -> Self {
        let spec = *grid.spec();
        let fp = robot.footprint();
        let arrivals: Vec<Arrival> = graph
            .edges()
            .par_iter()
            .map(|e| {
                let b = graph.node(e.to);
                let (x, y) = spec.cell_center(b.cell);
                let sensor = Pose2D::new(x, y, e.annotation.theta_to);
                let base = grid.base_pose(b.cell, e.annotation.theta_to, robot);
                Arrival {
                    footprint: footprint_cells(&spec, &sensor, fp, cfg.coverage_overlap),
                    body: if cfg.contamination_penalty > 0.0 { body_cells(&spec, &base, robot) } else { Vec::new() },
                }
            })
            .collect();
        let reach = graph.reachable_from(start);
        let mut target = vec![false; spec.cell_count()];
        for (id, p) in graph.nodes().iter().enumerate() {
            if reach[id] {
                target[spec.linear(p.cell)] = true;
            }
        }
        let remaining = target.iter().filter(|t| **t).count();
        let pt_value = match cfg.algorithm {
            Algorithm::PathTransform => {
                let dist = dijkstra(graph, start);
                let prox = obstacle_distance(grid);
                graph
                    .nodes()
                    .iter()
                    .enumerate()
                    .map(|(id, p)| dist[id] + cfg.obstacle_weight * prox[spec.linear(p.cell)] as f64 * spec.cell_size)
                    .collect()
            }
            Algorithm::Bsa => Vec::new(),
        };
        Self {
            graph,
            grid,
            robot,
            cfg,
            spec,
            arrivals,
            target,
            covered: vec![false; spec.cell_count()],
            clean: vec![false; spec.cell_count()],
            remaining,
            scc: graph.scc_ids(),
            pt_value,
            current: start,
            heading: Direction::from_heading(cfg.start.theta),
            plan: CoveragePlan::empty(grid, cfg),
        }
    }

    fn record(&mut self, node: NodeId, theta: f64, footprint: Vec<CellIndex>) {
        let p = *self.graph.node(node);
        let (x, y) = self.spec.cell_center(p.cell);
        let sensor = Pose2D::new(x, y, theta);
        let base = self.grid.base_pose(p.cell, theta, self.robot);
        for c in &footprint {
            let k = self.spec.linear(*c);
            if self.grid.is_coverable(*c) && !self.covered[k] {
                self.covered[k] = true;
                if self.target[k] {
                    self.remaining -= 1;
                }
            }
        }
        self.plan.steps.push(PlanStep {
            node,
            cell: p.cell,
            partition: p.index,
            sensor,
            base,
            velocity: self.cfg.velocity,
            footprint,
        });
        self.current = node;
    }

    fn take_edge(&mut self, edge_index: usize) {
        let e = self.graph.edges()[edge_index];
        let from_cell = self.graph.node(e.from).cell;
        let to_cell = self.graph.node(e.to).cell;
        if let Some(d) = Direction::between(from_cell, to_cell) {
            self.heading = d;
        }
        self.plan.total_length += e.annotation.length;
        self.plan.total_turn += e.annotation.turn;
        let footprint = self.arrivals[edge_index].footprint.clone();
        self.record(e.to, e.annotation.theta_to, footprint);
    }

    fn is_open(&self, cell: CellIndex) -> bool {
        let k = self.spec.linear(cell);
        self.target[k] && !self.covered[k]
    }

    /// Cells the body would newly contaminate by arriving along `edge_index`.
    fn violations(&self, edge_index: usize) -> usize {
        if self.cfg.contamination_penalty <= 0.0 {
            return 0;
        }
        let a = &self.arrivals[edge_index];
        a.body
            .iter()
            .filter(|c| {
                let k = self.spec.linear(**c);
                self.grid.is_coverable(**c) && !self.covered[k] && !self.clean[k] && !a.footprint.contains(c)
            })
            .count()
    }

    fn edge_cost(&self, edge_index: usize) -> f64 {
        let e = &self.graph.edges()[edge_index];
        let mut w = self.graph.weight(e);
        if self.covered[self.spec.linear(self.graph.node(e.to).cell)] {
            w *= 1.0 + self.cfg.revisit_penalty;
        }
        w + self.cfg.contamination_penalty * self.violations(edge_index) as f64
    }

    fn node_key(&self, id: NodeId) -> (CellIndex, usize) {
        let p = self.graph.node(id);
        (p.cell, p.index)
    }

    fn local_move(&self) -> Option<usize> {
        let cur_cell = self.graph.node(self.current).cell;
        let mut best: Option<(Vec<f64>, (CellIndex, usize), usize)> = None;
        for idx in self.graph.out_edge_range(self.current) {
            let e = &self.graph.edges()[idx];
            let to_cell = self.graph.node(e.to).cell;
            if !self.is_open(to_cell) || self.scc[e.to] != self.scc[self.current] {
                continue;
            }
            let penalty = self.cfg.contamination_penalty * self.violations(idx) as f64;
            let key: Vec<f64> = match self.cfg.algorithm {
                Algorithm::PathTransform => vec![self.pt_value[e.to] + penalty],
                Algorithm::Bsa => {
                    let Some(d) = Direction::between(cur_cell, to_cell) else { continue };
                    vec![penalty, self.spiral_rank(to_cell, d) as f64, self.graph.weight(e)]
                }
            };
            let tie = self.node_key(e.to);
            let better = match &best {
                None => true,
                Some((bk, bt, _)) => match cmp_keys(&key, bk) {
                    Ordering::Less => true,
                    Ordering::Equal => tie < *bt,
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((key, tie, idx));
            }
        }
        best.map(|(_, _, idx)| idx)
    }

    /// 0–3 when the move keeps a covered or blocked cell on the right
    /// (forward, left, right, back), otherwise 4 + N/E/S/W position.
    fn spiral_rank(&self, to_cell: CellIndex, d: Direction) -> usize {
        let right_blocked = match self.spec.step(to_cell, d.right()) {
            None => true,
            Some(r) => !self.is_open(r) || r == self.graph.node(self.current).cell,
        };
        if right_blocked {
            let h = self.heading;
            [h, h.left(), h.right(), h.back()].iter().position(|x| *x == d).unwrap_or(3)
        } else {
            4 + Direction::ALL.iter().position(|x| *x == d).unwrap_or(0)
        }
    }

    /// Open target cells reachable from `start`, counting its own cell.
    fn open_cells_reachable(&self, start: NodeId) -> usize {
        let reach = self.graph.reachable_from(start);
        let mut seen = vec![false; self.spec.cell_count()];
        let mut count = 0;
        for (id, r) in reach.into_iter().enumerate() {
            let cell = self.graph.node(id).cell;
            let k = self.spec.linear(cell);
            if r && !seen[k] && self.is_open(cell) {
                seen[k] = true;
                count += 1;
            }
        }
        count
    }

    /// Shortest path (by penalized edge cost) to the best open node.
    fn jump(&self) -> Option<Vec<usize>> {
        let n = self.graph.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[self.current] = 0.0;
        heap.push(Reverse(Queued { cost: 0.0, node: self.current }));
        while let Some(Reverse(Queued { cost, node })) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for idx in self.graph.out_edge_range(node) {
                let e = &self.graph.edges()[idx];
                let c = cost + self.edge_cost(idx);
                if c < dist[e.to] {
                    dist[e.to] = c;
                    via[e.to] = Some(idx);
                    heap.push(Reverse(Queued { cost: c, node: e.to }));
                }
            }
        }
        let home = self.scc[self.current];
        let open: Vec<NodeId> =
            (0..n).filter(|&id| dist[id].is_finite() && self.is_open(self.graph.node(id).cell)).collect();
        // Leaving the current component is final, so when it is exhausted
        // head for the component that keeps the most open cells in reach.
        let exhausted = open.iter().all(|&id| self.scc[id] != home);
        let mut reach_cache = std::collections::HashMap::new();
        let mut lost = |id: NodeId| -> usize {
            if !exhausted {
                return 0;
            }
            let comp = self.scc[id];
            let reach = *reach_cache.entry(comp).or_insert_with(|| self.open_cells_reachable(id));
            self.remaining - reach
        };
        let keys: Vec<_> = open
            .iter()
            .map(|&id| {
                let primary = match self.cfg.algorithm {
                    Algorithm::PathTransform => self.pt_value[id],
                    Algorithm::Bsa => dist[id],
                };
                (self.scc[id] != home, lost(id), primary, dist[id], self.node_key(id), id)
            })
            .collect();
        let goal = keys
            .into_iter()
            .min_by(|a, b| {
                a.0.cmp(&b.0)
                    .then(a.1.cmp(&b.1))
                    .then(a.2.total_cmp(&b.2))
                    .then(a.3.total_cmp(&b.3))
                    .then(a.4.cmp(&b.4))
            })?
            .5;
        let mut path = Vec::new();
        let mut at = goal;
        while let Some(idx) = via[at] {
            path.push(idx);
            at = self.graph.edges()[idx].from;
        }
        path.reverse();
        Some(path)
    }

    fn run(mut self, start_theta: f64) -> CoveragePlan {
        let start = self.current;
        let p = *self.graph.node(start);
        let (x, y) = self.spec.cell_center(p.cell);
        let fp = footprint_cells(
            &self.spec,
            &Pose2D::new(x, y, start_theta),
            self.robot.footprint(),
            self.cfg.coverage_overlap,
        );
        let base0 = self.grid.base_pose(p.cell, start_theta, self.robot);
        for c in body_cells(&self.spec, &base0, self.robot) {
            self.clean[self.spec.linear(c)] = true;
        }
        self.record(start, start_theta, fp);
        while self.remaining > 0 {
            if let Some(idx) = self.local_move() {
                self.take_edge(idx);
                continue;
            }
            let Some(path) = self.jump() else { break };
            self.plan.backtracks += 1;
            for idx in path {
                self.take_edge(idx);
            }
        }
        let mut plan = self.plan;
        plan.covered_cells = self.spec.cells().filter(|c| self.covered[self.spec.linear(*c)]).collect();
        plan
    }
}

fn cmp_keys(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn plan_once(graph: &NavGraph, grid: &PartitionGrid, robot: &RobotModel, cfg: &PlannerConfig) -> Result<CoveragePlan> {
    cfg.validate()?;
    if graph.node_count() == 0 {
        return Ok(CoveragePlan::empty(grid, cfg));
    }
    let min_overlap = min_center_overlap(grid.spec(), robot.footprint(), grid.samples());
    if min_overlap + 1e-9 < cfg.coverage_overlap {
        return Err(Error::Planning(format!(
            "detector footprint covers only {:.0}% of a cell at some headings; coverage needs {:.0}%",
            min_overlap * 100.0,
            cfg.coverage_overlap * 100.0
        )));
    }
    let (start, theta) = locate_start(graph, grid, &cfg.start)?;
    Ok(Planner::new(graph, grid, robot, cfg, start).run(theta))
}

/// Runs the configured algorithm. With a contamination penalty set, the
/// penalized plan is kept only if the replay validator finds no more
/// violations than in the unpenalized plan.
pub fn plan_coverage(
    graph: &NavGraph,
    grid: &PartitionGrid,
    robot: &RobotModel,
    cfg: &PlannerConfig,
) -> Result<CoveragePlan> {
    let plan = plan_once(graph, grid, robot, cfg)?;
    if cfg.contamination_penalty <= 0.0 {
        return Ok(plan);
    }
    let plain_cfg = PlannerConfig { contamination_penalty: 0.0, ..cfg.clone() };
    let mut plain = plan_once(graph, grid, robot, &plain_cfg)?;
    let penalized_v = validate_contamination_safety(&plan, robot, grid).len();
    let plain_v = validate_contamination_safety(&plain, robot, grid).len();
    if penalized_v <= plain_v {
        Ok(plan)
    } else {
        plain.config_hash = cfg.hash();
        Ok(plain)
    }
}

pub fn path_transform_plan(
    graph: &NavGraph,
    grid: &PartitionGrid,
    robot: &RobotModel,
    cfg: &PlannerConfig,
) -> Result<CoveragePlan> {
    plan_coverage(graph, grid, robot, &PlannerConfig { algorithm: Algorithm::PathTransform, ..cfg.clone() })
}

pub fn bsa_plan(
    graph: &NavGraph,
    grid: &PartitionGrid,
    robot: &RobotModel,
    cfg: &PlannerConfig,
) -> Result<CoveragePlan> {
    plan_coverage(graph, grid, robot, &PlannerConfig { algorithm: Algorithm::Bsa, ..cfg.clone() })
}

/// A body cylinder reached a coverable cell before the detector surveyed it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub step: usize,
    pub cell: CellIndex,
}

/// Replays the plan and reports every `(step, cell)` where the body
/// overlaps a coverable cell that no step up to and including this one has
/// surveyed. Cells under the body at step 0 form the clean start zone.
pub fn validate_contamination_safety(plan: &CoveragePlan, robot: &RobotModel, grid: &PartitionGrid) -> Vec<Violation> {
    let spec = *grid.spec();
    let mut surveyed = vec![false; spec.cell_count()];
    let mut clean = vec![false; spec.cell_count()];
    let mut out = Vec::new();
    for (k, step) in plan.steps.iter().enumerate() {
        for c in footprint_cells(&spec, &step.sensor, robot.footprint(), plan.coverage_overlap) {
            surveyed[spec.linear(c)] = true;
        }
        let body = body_cells(&spec, &step.base, robot);
        if k == 0 {
            for c in &body {
                clean[spec.linear(*c)] = true;
            }
        }
        for c in body {
            let i = spec.linear(c);
            if grid.is_coverable(c) && !surveyed[i] && !clean[i] {
                out.push(Violation { step: k, cell: c });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub coverable_cells: usize,
    pub covered_cells: usize,
    pub coverage_fraction: f64,
    pub uncoverable_cells: Vec<CellIndex>,
    pub unreachable_cells: Vec<CellIndex>,
    pub revisit_count: usize,
    pub path_length: f64,
    pub total_turn: f64,
    pub backtracks: usize,
    pub contamination_violations: usize,
}

impl CoverageReport {
    /// Flat `key = value` text.
    pub fn to_text(&self) -> String {
        let cells = |v: &[CellIndex]| v.iter().map(|c| format!("{}:{}", c.x, c.y)).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "coverable_cells = {}", self.coverable_cells);
        let _ = writeln!(s, "covered_cells = {}", self.covered_cells);
        let _ = writeln!(s, "coverage_fraction = {:.6}", self.coverage_fraction);
        let _ = writeln!(s, "uncoverable_count = {}", self.uncoverable_cells.len());
        let _ = writeln!(s, "uncoverable_cells = {}", cells(&self.uncoverable_cells));
        let _ = writeln!(s, "unreachable_count = {}", self.unreachable_cells.len());
        let _ = writeln!(s, "unreachable_cells = {}", cells(&self.unreachable_cells));
        let _ = writeln!(s, "revisit_count = {}", self.revisit_count);
        let _ = writeln!(s, "path_length_m = {:.6}", self.path_length);
        let _ = writeln!(s, "total_turn_rad = {:.6}", self.total_turn);
        let _ = writeln!(s, "backtracks = {}", self.backtracks);
        let _ = writeln!(s, "contamination_violations = {}", self.contamination_violations);
        s
    }
}

/// Coverage statistics recomputed from the plan's poses. Unreachable cells
/// are coverable cells with no partition reachable from the start; when the
/// start itself is invalid every coverable cell is unreachable.
pub fn coverage_metrics(
    plan: &CoveragePlan,
    grid: &PartitionGrid,
    graph: &NavGraph,
    robot: &RobotModel,
    start: &Pose2D,
) -> CoverageReport {
    let spec = *grid.spec();
    let coverable = grid.coverable_cells();
    let mut covered = vec![false; spec.cell_count()];
    for s in &plan.steps {
        for c in footprint_cells(&spec, &s.sensor, robot.footprint(), plan.coverage_overlap) {
            if grid.is_coverable(c) {
                covered[spec.linear(c)] = true;
            }
        }
    }
    let mut reachable_cell = vec![false; spec.cell_count()];
    if let Ok((s, _)) = locate_start(graph, grid, start) {
        for (id, r) in graph.reachable_from(s).into_iter().enumerate() {
            if r {
                reachable_cell[spec.linear(graph.node(id).cell)] = true;
            }
        }
    }
    let covered_count = covered.iter().filter(|c| **c).count();
    let mut seen = vec![false; spec.cell_count()];
    let mut revisits = 0;
    for s in &plan.steps {
        let k = spec.linear(s.cell);
        if seen[k] {
            revisits += 1;
        }
        seen[k] = true;
    }
    let mut length = 0.0;
    let mut turn = 0.0;
    for w in plan.steps.windows(2) {
        if let Some(e) = graph.edge(w[0].node, w[1].node) {
            length += e.annotation.length;
            turn += e.annotation.turn;
        }
    }
    CoverageReport {
        coverable_cells: coverable.len(),
        covered_cells: covered_count,
        coverage_fraction: if coverable.is_empty() { 1.0 } else { covered_count as f64 / coverable.len() as f64 },
        uncoverable_cells: grid.uncoverable_cells(),
        unreachable_cells: coverable.into_iter().filter(|c| !reachable_cell[spec.linear(*c)]).collect(),
        revisit_count: revisits,
        path_length: length,
        total_turn: turn,
        backtracks: plan.backtracks,
        contamination_violations: validate_contamination_safety(plan, robot, grid).len(),
    }
}
