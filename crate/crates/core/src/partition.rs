//! Grid cell partitions: per-cell orientation ranges in which the detector
//! can sit over the cell center without any collision.
//!
//! Headings are sampled at a fixed step `dtheta` that divides the circle.
//! Maximal runs of valid samples (joined across the 0/2π seam) become
//! [`OrientationRange`]s whose endpoints are the outermost valid samples.

use std::f64::consts::{FRAC_PI_8, TAU};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, pose_valid, sensor_pose_to_base_pose, ObstacleSet, Pose2D, RobotModel};

/// Default heading sample step (5°, 72 samples).
pub const DEFAULT_DTHETA: f64 = 5.0 * std::f64::consts::PI / 180.0;

/// Integer cell coordinates. Ordered row-major: by `y`, then `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub x: usize,
    pub y: usize,
}

impl CellIndex {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Manhattan distance, used for 4-adjacency.
    pub fn manhattan(&self, other: &CellIndex) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl Ord for CellIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for CellIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Regular grid over the workspace; `origin` is the lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: (f64, f64),
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: (f64, f64), cell_size: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Config(format!("cell_size must be positive, got {cell_size}")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::Config("grid needs at least one cell per axis".into()));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        Ok(Self { origin, cell_size, nx, ny })
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Row-major linear index.
    pub fn linear(&self, c: CellIndex) -> usize {
        c.y * self.nx + c.x
    }

    pub fn cell_at(&self, linear: usize) -> CellIndex {
        CellIndex::new(linear % self.nx, linear / self.nx)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.cell_count()).map(|k| self.cell_at(k))
    }

    pub fn cell_center(&self, c: CellIndex) -> (f64, f64) {
        (self.origin.0 + (c.x as f64 + 0.5) * self.cell_size, self.origin.1 + (c.y as f64 + 0.5) * self.cell_size)
    }

    /// `(min_x, min_y, max_x, max_y)` of a cell.
    pub fn cell_rect(&self, c: CellIndex) -> (f64, f64, f64, f64) {
        let x0 = self.origin.0 + c.x as f64 * self.cell_size;
        let y0 = self.origin.1 + c.y as f64 * self.cell_size;
        (x0, y0, x0 + self.cell_size, y0 + self.cell_size)
    }

    /// Cell containing a world point, if inside the grid.
    pub fn locate(&self, x: f64, y: f64) -> Option<CellIndex> {
        let fx = ((x - self.origin.0) / self.cell_size).floor();
        let fy = ((y - self.origin.1) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some(CellIndex::new(fx as usize, fy as usize))
    }

    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.origin.0,
            self.origin.1,
            self.origin.0 + self.nx as f64 * self.cell_size,
            self.origin.1 + self.ny as f64 * self.cell_size,
        )
    }

    /// The in-grid 4-neighbors of `c` in N, E, S, W order.
    pub fn neighbors4(&self, c: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        Direction::ALL.into_iter().filter_map(move |d| self.step(c, d))
    }

    pub fn step(&self, c: CellIndex, d: Direction) -> Option<CellIndex> {
        let (dx, dy) = d.delta();
        let x = c.x as i64 + dx;
        let y = c.y as i64 + dy;
        (x >= 0 && y >= 0 && (x as usize) < self.nx && (y as usize) < self.ny)
            .then(|| CellIndex::new(x as usize, y as usize))
    }

    /// Cells within the bounding box `[x0, x1] × [y0, y1]`, clamped to the grid.
    pub(crate) fn cells_in_box(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<CellIndex> {
        let cs = self.cell_size;
        let clamp = |v: f64, n: usize| -> Option<usize> {
            if v < 0.0 {
                Some(0)
            } else if v >= n as f64 {
                None
            } else {
                Some(v as usize)
            }
        };
        let lo_x = ((x0 - self.origin.0) / cs).floor();
        let hi_x = ((x1 - self.origin.0) / cs).floor();
        let lo_y = ((y0 - self.origin.1) / cs).floor();
        let hi_y = ((y1 - self.origin.1) / cs).floor();
        if hi_x < 0.0 || hi_y < 0.0 {
            return Vec::new();
        }
        let (Some(ax), Some(ay)) = (clamp(lo_x, self.nx), clamp(lo_y, self.ny)) else {
            return Vec::new();
        };
        let bx = (hi_x as usize).min(self.nx - 1);
        let by = (hi_y as usize).min(self.ny - 1);
        let mut out = Vec::new();
        for y in ay..=by {
            for x in ax..=bx {
                out.push(CellIndex::new(x, y));
            }
        }
        out
    }
}

/// Compass direction of a grid hop. North is +y, east is +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::North => (0, 1),
            Direction::East => (1, 0),
            Direction::South => (0, -1),
            Direction::West => (-1, 0),
        }
    }

    pub fn right(self) -> Self {
        match self {
            Direction::North => Direction::East,
            Direction::East => Direction::South,
            Direction::South => Direction::West,
            Direction::West => Direction::North,
        }
    }

    pub fn left(self) -> Self {
        self.right().right().right()
    }

    pub fn back(self) -> Self {
        self.right().right()
    }

    pub fn between(from: CellIndex, to: CellIndex) -> Option<Self> {
        let dx = to.x as i64 - from.x as i64;
        let dy = to.y as i64 - from.y as i64;
        match (dx, dy) {
            (0, 1) => Some(Direction::North),
            (1, 0) => Some(Direction::East),
            (0, -1) => Some(Direction::South),
            (-1, 0) => Some(Direction::West),
            _ => None,
        }
    }

    /// Nearest compass direction to a heading.
    pub fn from_heading(theta: f64) -> Self {
        let q = (normalize_angle(theta) / std::f64::consts::FRAC_PI_2).round() as i64 % 4;
        [Direction::East, Direction::North, Direction::West, Direction::South][q as usize]
    }

    pub fn heading(self) -> f64 {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self {
            Direction::East => 0.0,
            Direction::North => FRAC_PI_2,
            Direction::West => PI,
            Direction::South => 3.0 * FRAC_PI_2,
        }
    }
}

/// A closed run of valid heading samples `[phi1, phi2]`, possibly wrapping
/// through 2π, or the full circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationRange {
    first: usize,
    len: usize,
    samples: usize,
    dtheta: f64,
}

impl OrientationRange {
    /// Range covering `len` consecutive samples starting at sample `first`.
    pub fn from_samples(first: usize, len: usize, samples: usize, dtheta: f64) -> Self {
        assert!(len >= 1 && len <= samples && first < samples);
        let first = if len == samples { 0 } else { first };
        Self { first, len, samples, dtheta }
    }

    pub fn full(samples: usize, dtheta: f64) -> Self {
        Self::from_samples(0, samples, samples, dtheta)
    }

    pub fn is_full(&self) -> bool {
        self.len == self.samples
    }

    pub fn phi1(&self) -> f64 {
        self.sample_angle(self.first)
    }

    pub fn phi2(&self) -> f64 {
        self.sample_angle((self.first + self.len - 1) % self.samples)
    }

    pub fn wraps(&self) -> bool {
        !self.is_full() && self.first + self.len > self.samples
    }

    /// Angular width of the closed interval; 2π for the full circle.
    pub fn width(&self) -> f64 {
        if self.is_full() {
            TAU
        } else {
            (self.len - 1) as f64 * self.dtheta
        }
    }

    pub fn sample_count(&self) -> usize {
        self.len
    }

    pub fn first_sample(&self) -> usize {
        self.first
    }

    /// Sample indices in the range, in increasing angular order from `phi1`.
    pub fn sample_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |k| (self.first + k) % self.samples)
    }

    /// Headings of the samples in the range.
    pub fn sample_headings(&self) -> impl Iterator<Item = f64> + '_ {
        self.sample_indices().map(move |k| self.sample_angle(k))
    }

    pub fn contains_sample(&self, k: usize) -> bool {
        let off = (k + self.samples - self.first) % self.samples;
        off < self.len
    }

    /// Whether `theta` lies in `[phi1, phi2]` (1e-9 rad slack at the ends).
    pub fn contains(&self, theta: f64) -> bool {
        if self.is_full() {
            return true;
        }
        let off = normalize_angle(theta - self.phi1());
        off <= self.width() + 1e-9 || off >= TAU - 1e-9
    }

    /// The middle sample (lower middle for an even count).
    pub fn midpoint(&self) -> f64 {
        self.sample_angle((self.first + (self.len - 1) / 2) % self.samples)
    }

    /// Sample index nearest to `theta`.
    pub fn nearest_sample(&self, theta: f64) -> usize {
        ((normalize_angle(theta) / self.dtheta).round() as usize) % self.samples
    }

    pub fn sample_angle(&self, k: usize) -> f64 {
        k as f64 * self.dtheta
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    /// Angular distance from `theta` to the nearest point of the range.
    pub fn distance_to(&self, theta: f64) -> f64 {
        if self.contains(theta) {
            return 0.0;
        }
        let to_start = normalize_angle(self.phi1() - theta);
        let from_end = normalize_angle(theta - self.phi2());
        to_start.min(from_end)
    }
}

/// Partition `P(x, y, i)`: the `i`-th orientation range of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    pub cell: CellIndex,
    pub index: usize,
    pub range: OrientationRange,
}

/// Number of heading samples for `dtheta`, validating that it divides 2π.
pub fn sample_count(dtheta: f64) -> Result<usize> {
    if !(dtheta > 0.0 && dtheta <= FRAC_PI_8 + 1e-12) {
        return Err(Error::AngularResolution(dtheta));
    }
    let n = (TAU / dtheta).round();
    if (n * dtheta - TAU).abs() > 1e-9 {
        return Err(Error::AngularResolution(dtheta));
    }
    Ok(n as usize)
}

/// Merges a cyclic validity mask into maximal runs.
pub(crate) fn runs_from_mask(valid: &[bool], dtheta: f64) -> Vec<OrientationRange> {
    let n = valid.len();
    if valid.iter().all(|&v| v) {
        return vec![OrientationRange::full(n, dtheta)];
    }
    let Some(gap) = valid.iter().position(|&v| !v) else { unreachable!() };
    // Walk once around the circle starting just after an invalid sample so
    // no run is split by the seam.
    let mut runs = Vec::new();
    let mut k = 0;
    while k < n {
        let idx = (gap + 1 + k) % n;
        if valid[idx] {
            let start = idx;
            let mut len = 0;
            while k < n && valid[(gap + 1 + k) % n] {
                len += 1;
                k += 1;
            }
            runs.push(OrientationRange::from_samples(start, len, n, dtheta));
        } else {
            k += 1;
        }
    }
    runs.sort_by(|a, b| a.phi1().total_cmp(&b.phi1()));
    runs
}

/// Orientation ranges for the detector centered on `cell_center`.
pub fn compute_cell_ranges<O: ObstacleSet + ?Sized>(
    cell_center: (f64, f64),
    robot: &RobotModel,
    obstacles: &O,
    dtheta: f64,
) -> Result<Vec<OrientationRange>> {
    let n = sample_count(dtheta)?;
    let valid: Vec<bool> = (0..n)
        .map(|k| {
            let base = sensor_pose_to_base_pose(cell_center, k as f64 * dtheta, robot);
            pose_valid(&base, robot, obstacles)
        })
        .collect();
    Ok(runs_from_mask(&valid, dtheta))
}

/// Per-cell partition lists for a whole grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionGrid {
    spec: GridSpec,
    dtheta: f64,
    cells: Vec<Vec<OrientationRange>>,
}

impl PartitionGrid {
    /// Assembles a grid from precomputed per-cell ranges (row-major).
    pub fn from_cells(spec: GridSpec, dtheta: f64, cells: Vec<Vec<OrientationRange>>) -> Result<Self> {
        sample_count(dtheta)?;
        if cells.len() != spec.cell_count() {
            return Err(Error::Config(format!("expected {} cells, got {}", spec.cell_count(), cells.len())));
        }
        Ok(Self { spec, dtheta, cells })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn samples(&self) -> usize {
        (TAU / self.dtheta).round() as usize
    }

    pub fn ranges(&self, c: CellIndex) -> &[OrientationRange] {
        &self.cells[self.spec.linear(c)]
    }

    pub fn partitions(&self, c: CellIndex) -> impl Iterator<Item = Partition> + '_ {
        self.ranges(c).iter().enumerate().map(move |(index, range)| Partition { cell: c, index, range: *range })
    }

    /// Every partition, row-major by cell then by index.
    pub fn all_partitions(&self) -> impl Iterator<Item = Partition> + '_ {
        self.spec.cells().flat_map(move |c| self.partitions(c))
    }

    pub fn is_coverable(&self, c: CellIndex) -> bool {
        !self.ranges(c).is_empty()
    }

    /// Cells with no valid orientation at all.
    pub fn uncoverable_cells(&self) -> Vec<CellIndex> {
        self.spec.cells().filter(|c| !self.is_coverable(*c)).collect()
    }

    pub fn coverable_cells(&self) -> Vec<CellIndex> {
        self.spec.cells().filter(|c| self.is_coverable(*c)).collect()
    }

    pub fn partition_count(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    /// Base pose for the detector over a cell center at `theta`.
    pub fn base_pose(&self, c: CellIndex, theta: f64, robot: &RobotModel) -> Pose2D {
        sensor_pose_to_base_pose(self.spec.cell_center(c), theta, robot)
    }
}

/// Evaluates every cell (in parallel) and assembles the grid row-major.
pub fn build_partition_grid<O: ObstacleSet + ?Sized>(
    spec: GridSpec,
    robot: &RobotModel,
    obstacles: &O,
    dtheta: f64,
) -> Result<PartitionGrid> {
    sample_count(dtheta)?;
    let cells = (0..spec.cell_count())
        .into_par_iter()
        .map(|k| compute_cell_ranges(spec.cell_center(spec.cell_at(k)), robot, obstacles, dtheta))
        .collect::<Result<Vec<_>>>()?;
    PartitionGrid::from_cells(spec, dtheta, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{IndexedCloud, Point3, PointCloud};
    use proptest::prelude::*;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn dtheta_validation() {
        assert!(sample_count(deg(5.0)).is_ok());
        assert_eq!(sample_count(deg(5.0)).unwrap(), 72);
        assert!(sample_count(deg(7.0)).is_err());
        assert!(sample_count(deg(30.0)).is_err());
        assert!(sample_count(0.0).is_err());
        assert!(sample_count(-0.1).is_err());
        assert!(sample_count(std::f64::consts::FRAC_PI_8).is_ok());
    }

    #[test]
    fn mask_runs_merge_across_seam() {
        let d = TAU / 8.0;
        let mask = [true, true, false, false, true, false, true, true];
        let runs = runs_from_mask(&mask, d);
        assert_eq!(runs.len(), 2);
        // Sorted by phi1: the run starting at sample 4, then the one at 6.
        assert_eq!(runs[0].first_sample(), 4);
        assert_eq!(runs[0].sample_count(), 1);
        assert_eq!(runs[1].first_sample(), 6);
        assert_eq!(runs[1].sample_count(), 4);
        assert!(runs[1].wraps());
        assert!(runs[1].contains(0.0));
        assert!(runs[1].contains(d));
        assert!(!runs[1].contains(2.0 * d));
        assert_eq!(runs_from_mask(&[false; 8], d), vec![]);
        let full = runs_from_mask(&[true; 8], d);
        assert_eq!(full.len(), 1);
        assert!(full[0].is_full());
        assert!((full[0].width() - TAU).abs() < 1e-12);
    }

    #[test]
    fn empty_cloud_gives_full_circle() {
        let robot = RobotModel::default_magni_like();
        let r = compute_cell_ranges((0.0, 0.0), &robot, &PointCloud::empty(), DEFAULT_DTHETA).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].is_full());
    }

    #[test]
    fn boxed_in_gives_nothing() {
        let robot = RobotModel::default_magni_like();
        // Obstacle right at the detector center blocks every heading.
        let cloud = PointCloud::new(vec![Point3::new(1.0, 1.0, 0.1)]).unwrap();
        let r = compute_cell_ranges((1.0, 1.0), &robot, &cloud, DEFAULT_DTHETA).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn bad_dtheta_is_rejected() {
        let robot = RobotModel::default_magni_like();
        assert!(compute_cell_ranges((0.0, 0.0), &robot, &PointCloud::empty(), deg(7.0)).is_err());
    }

    fn wall_east(x: f64) -> PointCloud {
        let mut pts = Vec::new();
        for j in -40..=40 {
            for k in 0..10 {
                pts.push(Point3::new(x, j as f64 * 0.05, 0.05 + k as f64 * 0.1));
            }
        }
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn wall_east_matches_dense_oracle() {
        let robot = RobotModel::default_magni_like();
        // Wall 0.5 m east of the cell: the base cannot sit east of the
        // detector, so westward headings are blocked.
        let cloud = wall_east(0.5);
        let ranges = compute_cell_ranges((0.0, 0.0), &robot, &cloud, DEFAULT_DTHETA).unwrap();
        assert!(!ranges.is_empty() && ranges.len() <= 2);
        // Dense oracle at dtheta / 16 with an independent transform.
        let n = 72 * 16;
        let fine = TAU / n as f64;
        let oracle_valid = |t: f64| {
            let (s, c) = t.sin_cos();
            let (bx, by) = (-0.45 * c, -0.45 * s);
            !cloud.points().iter().any(|p| {
                robot.cylinders().any(|(_, cy)| {
                    let ax = bx + c * cy.offset_x - s * cy.offset_y;
                    let ay = by + s * cy.offset_x + c * cy.offset_y;
                    p.z >= cy.z_min && p.z <= cy.z_max && (p.x - ax).powi(2) + (p.y - ay).powi(2) <= cy.radius.powi(2)
                })
            })
        };
        let mut blocked_any = false;
        for k in 0..n {
            let t = k as f64 * fine;
            let v = oracle_valid(t);
            blocked_any |= !v;
            let near = ranges.iter().any(|r| r.distance_to(t) <= DEFAULT_DTHETA + 1e-9);
            if v {
                assert!(near, "oracle-valid {t} not within dtheta of a range");
            }
            if ranges.iter().any(|r| r.contains(t)) {
                // Inside a stored range: the oracle may only disagree within
                // one step of an endpoint.
                let edge = ranges.iter().any(|r| {
                    r.contains(t)
                        && (normalize_angle(t - r.phi1()) < DEFAULT_DTHETA
                            || normalize_angle(r.phi2() - t) < DEFAULT_DTHETA)
                });
                assert!(v || edge, "range claims {t} but oracle rejects it mid-range");
            }
        }
        assert!(blocked_any);
        // West-facing heading (base east of detector) is blocked.
        assert!(!ranges.iter().any(|r| r.contains(std::f64::consts::PI)));
        assert!(ranges.iter().any(|r| r.contains(0.0)));
    }

    #[test]
    fn grid_empty_world() {
        let robot = RobotModel::default_magni_like();
        let spec = GridSpec::new((0.0, 0.0), 0.3, 3, 3).unwrap();
        let g = build_partition_grid(spec, &robot, &PointCloud::empty(), DEFAULT_DTHETA).unwrap();
        for c in spec.cells() {
            assert_eq!(g.ranges(c).len(), 1);
            assert!(g.ranges(c)[0].is_full());
        }
        assert!(g.uncoverable_cells().is_empty());
    }

    #[test]
    fn pillar_on_cell_center_empties_that_cell() {
        let robot = RobotModel::default_magni_like();
        let spec = GridSpec::new((0.0, 0.0), 0.3, 5, 5).unwrap();
        let (cx, cy) = spec.cell_center(CellIndex::new(2, 2));
        let cloud = crate::scene::pillar_points((cx, cy), 0.05, 0.03, 0.8, 40.0);
        let cloud = PointCloud::new(cloud).unwrap();
        let g = build_partition_grid(spec, &robot, &IndexedCloud::from(&cloud), DEFAULT_DTHETA).unwrap();
        assert!(g.ranges(CellIndex::new(2, 2)).is_empty());
        for n in spec.neighbors4(CellIndex::new(2, 2)) {
            assert!(!g.ranges(n).is_empty(), "neighbor {n} should be coverable");
        }
        // Per-cell oracle: every cell equals an independent evaluation.
        for c in spec.cells() {
            let direct = compute_cell_ranges(spec.cell_center(c), &robot, &cloud, DEFAULT_DTHETA).unwrap();
            assert_eq!(g.ranges(c), &direct[..]);
        }
    }

    #[test]
    fn grid_locate_and_neighbors() {
        let spec = GridSpec::new((-1.0, 2.0), 0.5, 4, 3).unwrap();
        assert_eq!(spec.locate(-1.0, 2.0), Some(CellIndex::new(0, 0)));
        assert_eq!(spec.locate(0.99, 3.49), Some(CellIndex::new(3, 2)));
        assert_eq!(spec.locate(1.0, 3.0), None);
        assert_eq!(spec.locate(-1.01, 2.5), None);
        let n: Vec<_> = spec.neighbors4(CellIndex::new(0, 0)).collect();
        assert_eq!(n, vec![CellIndex::new(0, 1), CellIndex::new(1, 0)]);
        assert!(GridSpec::new((0.0, 0.0), 0.0, 1, 1).is_err());
        assert!(GridSpec::new((0.0, 0.0), 1.0, 0, 1).is_err());
    }

    #[test]
    fn direction_helpers() {
        assert_eq!(Direction::North.right(), Direction::East);
        assert_eq!(Direction::North.left(), Direction::West);
        assert_eq!(Direction::from_heading(0.1), Direction::East);
        assert_eq!(Direction::from_heading(deg(95.0)), Direction::North);
        assert_eq!(Direction::from_heading(deg(359.0)), Direction::East);
        assert_eq!(Direction::from_heading(deg(260.0)), Direction::South);
    }

    fn scatter() -> impl Strategy<Value = Vec<Point3>> {
        prop::collection::vec(
            (-0.2..1.4f64, -0.2..1.4f64, 0.03..1.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z)),
            0..25,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ranges_revalidate_and_are_disjoint(pts in scatter()) {
            let robot = RobotModel::default_magni_like();
            let cloud = PointCloud::new(pts).unwrap();
            let spec = GridSpec::new((0.0, 0.0), 0.3, 4, 4).unwrap();
            let g = build_partition_grid(spec, &robot, &cloud, DEFAULT_DTHETA).unwrap();
            for c in spec.cells() {
                let rs = g.ranges(c);
                prop_assert!(rs.len() as f64 <= std::f64::consts::PI / DEFAULT_DTHETA);
                for w in rs.windows(2) {
                    prop_assert!(w[0].phi1() < w[1].phi1());
                }
                let mut seen = [false; 72];
                for r in rs {
                    for k in r.sample_indices() {
                        prop_assert!(!seen[k], "ranges overlap");
                        seen[k] = true;
                        let base = g.base_pose(c, r.sample_angle(k), &robot);
                        prop_assert!(pose_valid(&base, &robot, &cloud));
                    }
                }
            }
        }

        #[test]
        fn adding_points_never_widens(pts in scatter(), extra in scatter()) {
            let robot = RobotModel::default_magni_like();
            let a = PointCloud::new(pts).unwrap();
            let b = a.merged(&PointCloud::new(extra).unwrap());
            let spec = GridSpec::new((0.0, 0.0), 0.3, 4, 4).unwrap();
            let ga = build_partition_grid(spec, &robot, &a, DEFAULT_DTHETA).unwrap();
            let gb = build_partition_grid(spec, &robot, &b, DEFAULT_DTHETA).unwrap();
            for c in spec.cells() {
                for r in gb.ranges(c) {
                    let inside = ga.ranges(c).iter().any(|o| r.sample_indices().all(|k| o.contains_sample(k)));
                    prop_assert!(inside);
                }
            }
        }

        #[test]
        fn finer_build_contains_coarse_samples(pts in scatter()) {
            let robot = RobotModel::default_magni_like();
            let cloud = PointCloud::new(pts).unwrap();
            let spec = GridSpec::new((0.0, 0.0), 0.3, 3, 3).unwrap();
            let coarse = build_partition_grid(spec, &robot, &cloud, DEFAULT_DTHETA).unwrap();
            let fine = build_partition_grid(spec, &robot, &cloud, DEFAULT_DTHETA / 2.0).unwrap();
            for c in spec.cells() {
                for r in coarse.ranges(c) {
                    for k in r.sample_indices() {
                        prop_assert!(fine.ranges(c).iter().any(|f| f.contains_sample(2 * k)));
                    }
                }
            }
        }
    }
}
