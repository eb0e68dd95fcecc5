//! Declarative test scenes rasterized into obstacle point clouds.
//!
//! Boxes are sampled on the lattice of their six faces, pillars as stacked
//! rings plus filled end caps, tables as a top slab and four corner legs.
//! Primitives start slightly above the floor (`base`, default 0.03 m) so that
//! their bottom faces survive floor filtering and block low cylinders.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

pub const DEFAULT_DENSITY: f64 = 20.0;
pub const DEFAULT_BASE: f64 = 0.03;

fn default_density() -> f64 {
    DEFAULT_DENSITY
}

fn default_base() -> f64 {
    DEFAULT_BASE
}

fn default_table_height() -> f64 {
    0.75
}

fn default_top_thickness() -> f64 {
    0.04
}

fn default_leg_size() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Box {
        #[serde(default)]
        name: Option<String>,
        min: [f64; 3],
        max: [f64; 3],
    },
    Pillar {
        #[serde(default)]
        name: Option<String>,
        center: [f64; 2],
        radius: f64,
        height: f64,
        #[serde(default = "default_base")]
        base: f64,
    },
    Table {
        #[serde(default)]
        name: Option<String>,
        min: [f64; 2],
        max: [f64; 2],
        #[serde(default = "default_table_height")]
        height: f64,
        #[serde(default = "default_top_thickness")]
        top_thickness: f64,
        #[serde(default = "default_leg_size")]
        leg_size: f64,
        #[serde(default = "default_base")]
        base: f64,
    },
}

impl Primitive {
    fn label(&self, index: usize) -> String {
        let (kind, name) = match self {
            Primitive::Box { name, .. } => ("box", name),
            Primitive::Pillar { name, .. } => ("pillar", name),
            Primitive::Table { name, .. } => ("table", name),
        };
        name.clone().unwrap_or_else(|| format!("{kind}#{index}"))
    }

    /// Planar bounding box `(x0, y0, x1, y1)`.
    fn planar_extent(&self) -> (f64, f64, f64, f64) {
        match self {
            Primitive::Box { min, max, .. } => (min[0], min[1], max[0], max[1]),
            Primitive::Pillar { center, radius, .. } => {
                (center[0] - radius, center[1] - radius, center[0] + radius, center[1] + radius)
            }
            Primitive::Table { min, max, .. } => (min[0], min[1], max[0], max[1]),
        }
    }
}

/// Scene bounds `[x0, y0, x1, y1]`, sampling density (points per meter) and
/// primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub bounds: [f64; 4],
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default, rename = "primitive")]
    pub primitives: Vec<Primitive>,
}

impl SceneSpec {
    pub fn new(bounds: [f64; 4]) -> Self {
        Self { bounds, density: DEFAULT_DENSITY, primitives: Vec::new() }
    }

    pub fn with(mut self, p: Primitive) -> Self {
        self.primitives.push(p);
        self
    }

    /// Rasterizes every primitive in declaration order.
    pub fn rasterize(&self) -> Result<PointCloud> {
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::Config(format!("scene density must be positive, got {}", self.density)));
        }
        let [bx0, by0, bx1, by1] = self.bounds;
        let mut points = Vec::new();
        for (i, p) in self.primitives.iter().enumerate() {
            let label = p.label(i);
            let (x0, y0, x1, y1) = p.planar_extent();
            if x0 < bx0 || y0 < by0 || x1 > bx1 || y1 > by1 {
                return Err(Error::Scene {
                    name: label,
                    message: format!(
                        "extent [{x0}, {y0}]–[{x1}, {y1}] leaves scene bounds [{bx0}, {by0}]–[{bx1}, {by1}]"
                    ),
                });
            }
            let bad = |m: &str| Error::Scene { name: label.clone(), message: m.to_string() };
            match p {
                Primitive::Box { min, max, .. } => {
                    if (0..3).any(|k| max[k] <= min[k]) {
                        return Err(bad("box max must exceed min on every axis"));
                    }
                    points.extend(box_surface(*min, *max, self.density));
                }
                Primitive::Pillar { center, radius, height, base, .. } => {
                    if *radius <= 0.0 || *height <= 0.0 {
                        return Err(bad("pillar radius and height must be positive"));
                    }
                    points.extend(pillar_points((center[0], center[1]), *radius, *base, *base + *height, self.density));
                }
                Primitive::Table { min, max, height, top_thickness, leg_size, base, .. } => {
                    if max[0] <= min[0] || max[1] <= min[1] {
                        return Err(bad("table max must exceed min"));
                    }
                    if *top_thickness <= 0.0 || *leg_size <= 0.0 || *height - *top_thickness <= *base {
                        return Err(bad("table dimensions are inconsistent"));
                    }
                    if 2.0 * leg_size > (max[0] - min[0]).min(max[1] - min[1]) {
                        return Err(bad("table legs wider than the table"));
                    }
                    points.extend(table_points(*min, *max, *height, *top_thickness, *leg_size, *base, self.density));
                }
            }
        }
        PointCloud::new(points)
    }
}

/// A 3.6 m × 3.0 m room with one desk-height table whose top spans
/// `[1.2, 2.4] × [0.9, 2.1]`, i.e. cells x 4..=7, y 3..=6 of a 0.3 m grid.
/// The detector fits under the top; the robot's mast does not.
pub fn under_table_example() -> SceneSpec {
    SceneSpec::new([0.0, 0.0, 3.6, 3.0]).with(Primitive::Table {
        name: Some("table".into()),
        min: [1.2, 0.9],
        max: [2.4, 2.1],
        height: default_table_height(),
        top_thickness: default_top_thickness(),
        leg_size: default_leg_size(),
        base: DEFAULT_BASE,
    })
}

/// Lattice count along an edge of length `len`: at least two samples, spaced
/// no wider than `1 / density`.
pub fn lattice_count(len: f64, density: f64) -> usize {
    ((len * density - 1e-9).ceil().max(1.0) as usize) + 1
}

/// Closed-form number of points on a box surface lattice.
pub fn box_surface_count(min: [f64; 3], max: [f64; 3], density: f64) -> usize {
    let n: Vec<usize> = (0..3).map(|k| lattice_count(max[k] - min[k], density)).collect();
    n[0] * n[1] * n[2] - (n[0] - 2) * (n[1] - 2) * (n[2] - 2)
}

/// Surface lattice points of an axis-aligned box.
pub fn box_surface(min: [f64; 3], max: [f64; 3], density: f64) -> Vec<Point3> {
    let n: Vec<usize> = (0..3).map(|k| lattice_count(max[k] - min[k], density)).collect();
    let coord = |k: usize, i: usize| {
        if i == n[k] - 1 {
            max[k]
        } else {
            min[k] + (max[k] - min[k]) * i as f64 / (n[k] - 1) as f64
        }
    };
    let mut out = Vec::new();
    for iz in 0..n[2] {
        for iy in 0..n[1] {
            for ix in 0..n[0] {
                let on_face = ix == 0 || iy == 0 || iz == 0 || ix == n[0] - 1 || iy == n[1] - 1 || iz == n[2] - 1;
                if on_face {
                    out.push(Point3::new(coord(0, ix), coord(1, iy), coord(2, iz)));
                }
            }
        }
    }
    out
}

/// Side rings plus filled caps of a vertical cylinder.
pub fn pillar_points(center: (f64, f64), radius: f64, z0: f64, z1: f64, density: f64) -> Vec<Point3> {
    let ring = |r: f64, z: f64, out: &mut Vec<Point3>| {
        let m = ((TAU * r * density).ceil() as usize).max(8);
        for k in 0..m {
            let a = TAU * k as f64 / m as f64;
            out.push(Point3::new(center.0 + r * a.cos(), center.1 + r * a.sin(), z));
        }
    };
    let mut out = Vec::new();
    let nz = lattice_count(z1 - z0, density);
    for i in 0..nz {
        let z = if i == nz - 1 { z1 } else { z0 + (z1 - z0) * i as f64 / (nz - 1) as f64 };
        ring(radius, z, &mut out);
    }
    let nr = ((radius * density).ceil() as usize).max(1);
    for z in [z0, z1] {
        out.push(Point3::new(center.0, center.1, z));
        for k in 1..nr {
            ring(radius * k as f64 / nr as f64, z, &mut out);
        }
    }
    out
}

fn table_points(
    min: [f64; 2],
    max: [f64; 2],
    height: f64,
    top_thickness: f64,
    leg: f64,
    base: f64,
    density: f64,
) -> Vec<Point3> {
    let underside = height - top_thickness;
    let mut out = box_surface([min[0], min[1], underside], [max[0], max[1], height], density);
    let corners = [(min[0], min[1]), (max[0] - leg, min[1]), (min[0], max[1] - leg), (max[0] - leg, max[1] - leg)];
    for (x, y) in corners {
        out.extend(box_surface([x, y, base], [x + leg, y + leg, underside], density));
    }
    out
}
