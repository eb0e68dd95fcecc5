//! Point-cloud obstacles, the cylindrical robot model, and pose validity.
//!
//! The robot is a set of world-vertical cylinders expressed in the base frame.
//! Every cylinder is an independent collision entity: a pose is valid when no
//! obstacle point lies inside any of them. Body and sensor cylinders carry
//! their own vertical extents, so a low sensor housing may slide under a
//! table top that would stop the taller body.
//!
//! Two obstacle backends implement [`ObstacleSet`]: the raw [`PointCloud`]
//! (brute force, the reference definition) and [`IndexedCloud`] (binned in
//! the plane). Both evaluate exactly the same predicate, so their answers are
//! identical.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Default height below which cloud points are treated as floor returns.
pub const DEFAULT_Z_FLOOR: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Axis-aligned bounds of a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

/// Obstacle points in the world frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    bounds: Option<Aabb>,
}

impl PointCloud {
    /// Builds a cloud, rejecting non-finite coordinates.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(bad) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Config(format!("point {bad} has a non-finite coordinate")));
        }
        let bounds = compute_bounds(&points);
        Ok(Self { points, bounds })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        self.bounds
    }

    /// Drops points strictly below `z_floor` (floor returns).
    pub fn without_floor(self, z_floor: f64) -> Self {
        let points: Vec<Point3> = self.points.into_iter().filter(|p| p.z >= z_floor).collect();
        let bounds = compute_bounds(&points);
        Self { points, bounds }
    }

    /// Union of two clouds, `self` first.
    pub fn merged(&self, other: &PointCloud) -> Self {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let bounds = compute_bounds(&points);
        Self { points, bounds }
    }
}

fn compute_bounds(points: &[Point3]) -> Option<Aabb> {
    let first = *points.first()?;
    let mut b = Aabb { min: first, max: first };
    for p in &points[1..] {
        b.min.x = b.min.x.min(p.x);
        b.min.y = b.min.y.min(p.y);
        b.min.z = b.min.z.min(p.z);
        b.max.x = b.max.x.max(p.x);
        b.max.y = b.max.y.max(p.y);
        b.max.z = b.max.z.max(p.z);
    }
    Some(b)
}

/// Whether a cylinder belongs to the robot body or to the detector assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CylinderTag {
    Body,
    Sensor,
}

impl CylinderTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CylinderTag::Body => "BODY",
            CylinderTag::Sensor => "SENSOR",
        }
    }
}

/// A vertical collision cylinder in the robot base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionCylinder {
    pub offset_x: f64,
    pub offset_y: f64,
    pub radius: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl CollisionCylinder {
    pub fn new(offset_x: f64, offset_y: f64, radius: f64, z_min: f64, z_max: f64) -> Result<Self> {
        let all = [offset_x, offset_y, radius, z_min, z_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("cylinder has a non-finite field".into()));
        }
        if radius <= 0.0 {
            return Err(Error::Config(format!("cylinder radius must be positive, got {radius}")));
        }
        if z_min >= z_max {
            return Err(Error::Config(format!("cylinder z_min ({z_min}) must be below z_max ({z_max})")));
        }
        Ok(Self { offset_x, offset_y, radius, z_min, z_max })
    }

    /// World position of the cylinder axis for a robot at `base`.
    #[inline]
    pub fn axis_at(&self, base: &Pose2D) -> (f64, f64) {
        let (s, c) = base.theta.sin_cos();
        (base.x + c * self.offset_x - s * self.offset_y, base.y + s * self.offset_x + c * self.offset_y)
    }

    /// The point test with a precomputed axis. Boundary points collide.
    #[inline]
    pub fn contains_with_axis(&self, axis: (f64, f64), p: &Point3) -> bool {
        if p.z < self.z_min || p.z > self.z_max {
            return false;
        }
        let dx = p.x - axis.0;
        let dy = p.y - axis.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// Rectangular detector footprint: `length` along the direction of travel
/// (robot x axis), `width` across it. Meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFootprint {
    pub length: f64,
    pub width: f64,
}

/// Planar robot pose. `theta` is kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: normalize_angle(theta) }
    }

    /// Maps a point from this pose's local frame into the world frame.
    #[inline]
    pub fn transform(&self, local: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (self.x + c * local.0 - s * local.1, self.y + s * local.0 + c * local.1)
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed shortest rotation from `from` to `to`, in `(-π, π]`.
pub fn shortest_rotation(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Cylinder decomposition of the robot plus its off-center detector.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    body: Vec<CollisionCylinder>,
    sensor: Vec<CollisionCylinder>,
    sensor_offset: (f64, f64),
    footprint: SensorFootprint,
    max_linear_speed: f64,
    max_angular_speed: f64,
}

impl RobotModel {
    /// Validates the decomposition: at least one cylinder of each kind, a
    /// positive footprint, and sensor/body disks that together cover the
    /// footprint rectangle (checked on a 9×9 lattice including its edges).
    pub fn new(
        body: Vec<CollisionCylinder>,
        sensor: Vec<CollisionCylinder>,
        sensor_offset: (f64, f64),
        footprint: SensorFootprint,
        max_linear_speed: f64,
        max_angular_speed: f64,
    ) -> Result<Self> {
        if body.is_empty() || sensor.is_empty() {
            return Err(Error::Config("robot needs at least one BODY and one SENSOR cylinder".into()));
        }
        if !(footprint.length > 0.0 && footprint.width > 0.0) {
            return Err(Error::Config("sensor footprint dimensions must be positive".into()));
        }
        if !(max_linear_speed > 0.0 && max_angular_speed > 0.0) {
            return Err(Error::Config("robot speed limits must be positive".into()));
        }
        let model = Self { body, sensor, sensor_offset, footprint, max_linear_speed, max_angular_speed };
        const N: usize = 9;
        for i in 0..N {
            for j in 0..N {
                let u = (i as f64 / (N - 1) as f64 - 0.5) * footprint.length;
                let v = (j as f64 / (N - 1) as f64 - 0.5) * footprint.width;
                let (px, py) = (sensor_offset.0 + u, sensor_offset.1 + v);
                let covered = model.cylinders().any(|(_, c)| {
                    let dx = px - c.offset_x;
                    let dy = py - c.offset_y;
                    dx * dx + dy * dy <= c.radius * c.radius + 1e-12
                });
                if !covered {
                    return Err(Error::Config(format!(
                        "cylinders do not cover the sensor footprint at ({px:.3}, {py:.3})"
                    )));
                }
            }
        }
        Ok(model)
    }

    /// The example decomposition shipped with the tool: five body cylinders
    /// (two chassis lobes, a tall mast, the detector arm, a rear bumper) and
    /// two sensor cylinders covering a 0.30 m × 0.30 m detector mounted
    /// 0.45 m ahead of the base. Not measured from any particular robot.
    pub fn default_magni_like() -> Self {
        let c = |x, y, r, z0, z1| CollisionCylinder::new(x, y, r, z0, z1).expect("valid default");
        Self::new(
            vec![
                c(0.08, 0.0, 0.20, 0.0, 0.40),
                c(-0.10, 0.0, 0.20, 0.0, 0.40),
                c(-0.05, 0.0, 0.08, 0.40, 1.00),
                c(0.27, 0.0, 0.06, 0.15, 0.30),
                c(-0.28, 0.0, 0.05, 0.02, 0.12),
            ],
            vec![c(0.45, 0.075, 0.17, 0.0, 0.30), c(0.45, -0.075, 0.17, 0.0, 0.30)],
            (0.45, 0.0),
            SensorFootprint { length: 0.30, width: 0.30 },
            0.5,
            1.0,
        )
        .expect("default robot is valid")
    }

    pub fn body_cylinders(&self) -> &[CollisionCylinder] {
        &self.body
    }

    pub fn sensor_cylinders(&self) -> &[CollisionCylinder] {
        &self.sensor
    }

    /// All cylinders, body first.
    pub fn cylinders(&self) -> impl Iterator<Item = (CylinderTag, &CollisionCylinder)> {
        self.body.iter().map(|c| (CylinderTag::Body, c)).chain(self.sensor.iter().map(|c| (CylinderTag::Sensor, c)))
    }

    pub fn sensor_offset(&self) -> (f64, f64) {
        self.sensor_offset
    }

    pub fn footprint(&self) -> SensorFootprint {
        self.footprint
    }

    pub fn max_linear_speed(&self) -> f64 {
        self.max_linear_speed
    }

    pub fn max_angular_speed(&self) -> f64 {
        self.max_angular_speed
    }

    /// Tallest body cylinder top.
    pub fn body_height(&self) -> f64 {
        self.body.iter().map(|c| c.z_max).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copy of this model whose sensor cylinders extend up to `z_max`.
    /// Used to ask what the robot could reach if the detector were as tall
    /// as the body.
    pub fn with_sensor_height(&self, z_max: f64) -> Result<Self> {
        let sensor = self
            .sensor
            .iter()
            .map(|c| CollisionCylinder::new(c.offset_x, c.offset_y, c.radius, c.z_min, z_max))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            self.body.clone(),
            sensor,
            self.sensor_offset,
            self.footprint,
            self.max_linear_speed,
            self.max_angular_speed,
        )
    }
}

/// Anything that can answer "is some obstacle point inside this cylinder".
pub trait ObstacleSet: Sync {
    fn hits_cylinder(&self, cyl: &CollisionCylinder, axis: (f64, f64)) -> bool;
}

impl ObstacleSet for PointCloud {
    fn hits_cylinder(&self, cyl: &CollisionCylinder, axis: (f64, f64)) -> bool {
        self.points.iter().any(|p| cyl.contains_with_axis(axis, p))
    }
}

/// A point cloud binned on a uniform planar grid.
///
/// Candidate points come from the bins overlapping the cylinder's bounding
/// square (padded by a micrometre), then the exact point test runs, so the
/// answer matches the brute-force cloud bit for bit.
#[derive(Debug, Clone)]
pub struct IndexedCloud {
    min_x: f64,
    min_y: f64,
    bin: f64,
    nx: usize,
    ny: usize,
    // CSR layout: points of bin k are points[starts[k]..starts[k + 1]].
    starts: Vec<usize>,
    points: Vec<Point3>,
}

impl IndexedCloud {
    pub const DEFAULT_BIN: f64 = 0.25;

    pub fn new(cloud: &PointCloud, bin: f64) -> Self {
        assert!(bin > 0.0, "bin size must be positive");
        let Some(b) = cloud.bounds() else {
            return Self { min_x: 0.0, min_y: 0.0, bin, nx: 0, ny: 0, starts: vec![0], points: Vec::new() };
        };
        let nx = (((b.max.x - b.min.x) / bin).floor() as usize) + 1;
        let ny = (((b.max.y - b.min.y) / bin).floor() as usize) + 1;
        let bin_of = |p: &Point3| {
            let ix = (((p.x - b.min.x) / bin).floor() as usize).min(nx - 1);
            let iy = (((p.y - b.min.y) / bin).floor() as usize).min(ny - 1);
            iy * nx + ix
        };
        let mut counts = vec![0usize; nx * ny + 1];
        for p in cloud.points() {
            counts[bin_of(p) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut points = vec![Point3::new(0.0, 0.0, 0.0); cloud.len()];
        for p in cloud.points() {
            let k = bin_of(p);
            points[fill[k]] = *p;
            fill[k] += 1;
        }
        Self { min_x: b.min.x, min_y: b.min.y, bin, nx, ny, starts, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn bin_range(&self, lo: f64, hi: f64, origin: f64, n: usize) -> Option<(usize, usize)> {
        const PAD: f64 = 1e-6;
        let a = ((lo - PAD - origin) / self.bin).floor();
        let b = ((hi + PAD - origin) / self.bin).floor();
        if b < 0.0 || a > (n - 1) as f64 {
            return None;
        }
        Some((a.max(0.0) as usize, (b as usize).min(n - 1)))
    }
}

impl From<&PointCloud> for IndexedCloud {
    fn from(cloud: &PointCloud) -> Self {
        Self::new(cloud, Self::DEFAULT_BIN)
    }
}

impl ObstacleSet for IndexedCloud {
    fn hits_cylinder(&self, cyl: &CollisionCylinder, axis: (f64, f64)) -> bool {
        if self.points.is_empty() {
            return false;
        }
        let r = cyl.radius;
        let Some((x0, x1)) = self.bin_range(axis.0 - r, axis.0 + r, self.min_x, self.nx) else {
            return false;
        };
        let Some((y0, y1)) = self.bin_range(axis.1 - r, axis.1 + r, self.min_y, self.ny) else {
            return false;
        };
        for iy in y0..=y1 {
            let row = iy * self.nx;
            let span = &self.points[self.starts[row + x0]..self.starts[row + x1 + 1]];
            if span.iter().any(|p| cyl.contains_with_axis(axis, p)) {
                return true;
            }
        }
        false
    }
}

/// True iff `p` lies inside `cyl` when the robot base sits at `base`.
pub fn point_in_cylinder(p: &Point3, cyl: &CollisionCylinder, base: &Pose2D) -> bool {
    cyl.contains_with_axis(cyl.axis_at(base), p)
}

/// True iff no obstacle point lies inside any robot cylinder at `base`.
pub fn pose_valid<O: ObstacleSet + ?Sized>(base: &Pose2D, robot: &RobotModel, obstacles: &O) -> bool {
    robot.cylinders().all(|(_, cyl)| !obstacles.hits_cylinder(cyl, cyl.axis_at(base)))
}

/// Base pose that puts the detector footprint center on `sensor_center`
/// with heading `theta`.
pub fn sensor_pose_to_base_pose(sensor_center: (f64, f64), theta: f64, robot: &RobotModel) -> Pose2D {
    let theta = normalize_angle(theta);
    let (s, c) = theta.sin_cos();
    let (ox, oy) = robot.sensor_offset;
    Pose2D { x: sensor_center.0 - (c * ox - s * oy), y: sensor_center.1 - (s * ox + c * oy), theta }
}

/// Forward map: where the detector footprint center sits for a base pose.
pub fn base_pose_to_sensor_pose(base: &Pose2D, robot: &RobotModel) -> Pose2D {
    let (x, y) = base.transform(robot.sensor_offset);
    Pose2D { x, y, theta: base.theta }
}

/// Corners of the detector footprint rectangle for a sensor pose,
/// counter-clockwise.
pub fn footprint_corners(sensor: &Pose2D, footprint: SensorFootprint) -> [(f64, f64); 4] {
    let hl = footprint.length / 2.0;
    let hw = footprint.width / 2.0;
    let local = [(-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)];
    local.map(|q| sensor.transform(q))
}
