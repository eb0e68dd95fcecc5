//! Which grid cells a detector footprint or the robot body touches.

use crate::geometry::{footprint_corners, Pose2D, RobotModel, SensorFootprint};
use crate::partition::{CellIndex, GridSpec};

/// Default fraction of a cell's area the footprint must overlap to cover it.
pub const DEFAULT_COVERAGE_OVERLAP: f64 = 0.6;

/// Area of a simple polygon (shoelace, counter-clockwise positive).
pub fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

/// Clips a convex polygon against an axis-aligned rectangle.
pub fn clip_to_rect(poly: &[(f64, f64)], rect: (f64, f64, f64, f64)) -> Vec<(f64, f64)> {
    let (x0, y0, x1, y1) = rect;
    // Each edge: (inside test, intersection with the boundary line).
    let mut out: Vec<(f64, f64)> = poly.to_vec();
    let planes: [(usize, f64, bool); 4] = [(0, x0, true), (0, x1, false), (1, y0, true), (1, y1, false)];
    for (axis, bound, keep_above) in planes {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let coord = |p: &(f64, f64)| if axis == 0 { p.0 } else { p.1 };
        let inside = |p: &(f64, f64)| if keep_above { coord(p) >= bound } else { coord(p) <= bound };
        let cross = |a: &(f64, f64), b: &(f64, f64)| {
            let t = (bound - coord(a)) / (coord(b) - coord(a));
            (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
        };
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            match (inside(&prev), inside(&cur)) {
                (true, true) => out.push(cur),
                (true, false) => out.push(cross(&prev, &cur)),
                (false, true) => {
                    out.push(cross(&prev, &cur));
                    out.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    out
}

/// Fraction of cell `c`'s area overlapped by the detector footprint.
pub fn cell_overlap_fraction(grid: &GridSpec, c: CellIndex, sensor: &Pose2D, footprint: SensorFootprint) -> f64 {
    let corners = footprint_corners(sensor, footprint);
    let clipped = clip_to_rect(&corners, grid.cell_rect(c));
    polygon_area(&clipped).abs() / (grid.cell_size * grid.cell_size)
}

/// Cells whose area the footprint overlaps by at least `threshold`,
/// row-major.
pub fn footprint_cells(grid: &GridSpec, sensor: &Pose2D, footprint: SensorFootprint, threshold: f64) -> Vec<CellIndex> {
    let corners = footprint_corners(sensor, footprint);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for (x, y) in corners {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    grid.cells_in_box(x0, y0, x1, y1)
        .into_iter()
        .filter(|c| cell_overlap_fraction(grid, *c, sensor, footprint) >= threshold - 1e-12)
        .collect()
}

/// Cells whose interior a body cylinder's floor disk reaches. Tangency does
/// not count.
pub fn body_cells(grid: &GridSpec, base: &Pose2D, robot: &RobotModel) -> Vec<CellIndex> {
    let mut out: Vec<CellIndex> = Vec::new();
    for cyl in robot.body_cylinders() {
        let (ax, ay) = cyl.axis_at(base);
        let r = cyl.radius;
        for c in grid.cells_in_box(ax - r, ay - r, ax + r, ay + r) {
            let (rx0, ry0, rx1, ry1) = grid.cell_rect(c);
            let dx = (rx0 - ax).max(0.0).max(ax - rx1);
            let dy = (ry0 - ay).max(0.0).max(ay - ry1);
            if dx * dx + dy * dy < r * r {
                out.push(c);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Smallest overlap fraction of the center cell over `samples` headings.
/// The planner requires it to reach the coverage threshold so that placing
/// the detector over a cell always covers it.
pub fn min_center_overlap(grid: &GridSpec, footprint: SensorFootprint, samples: usize) -> f64 {
    let c = CellIndex::new(0, 0);
    let (cx, cy) = grid.cell_center(c);
    (0..samples)
        .map(|k| {
            let t = k as f64 * std::f64::consts::TAU / samples as f64;
            cell_overlap_fraction(grid, c, &Pose2D::new(cx, cy, t), footprint)
        })
        .fold(f64::INFINITY, f64::min)
}
