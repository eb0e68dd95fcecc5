//! TOML run configuration.
//!
//! Angles in the file are degrees and lengths meters, except the detector
//! section which uses centimeters. Everything is converted to radians and
//! meters here, once, when the file is read.
//!
//! ```toml
//! seed = 7
//! dtheta_deg = 5.0
//! cloud = "room.xyz"        # relative to this file; omit to use [scene]
//! robot = "robot.txt"       # omit for the built-in example robot
//! out = "out"
//!
//! [grid]
//! origin = [0.0, 0.0]
//! cell_size = 0.3
//! nx = 10
//! ny = 10
//!
//! [planner]
//! algorithm = "bsa"         # or "path_transform"
//! start = [0.15, 0.15, 0.0] # detector x, y (m) and heading (deg)
//!
//! [detector]
//! detection_limit = 0.05    # dps/cm²
//! area_cm2 = 900.0
//! efficiency = 0.2
//! length_cm = 30.0
//!
//! [field]
//! background_emission = 0.0
//! [[field.disk]]
//! center = [1.5, 1.5]
//! radius = 0.1
//! rate = 0.5
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{Pose2D, DEFAULT_Z_FLOOR};
use crate::graph::DEFAULT_TURN_WEIGHT;
use crate::io;
use crate::partition::{GridSpec, DEFAULT_DTHETA};
use crate::planner::{Algorithm, PlannerConfig};
use crate::scene::SceneSpec;
use crate::survey::{DetectorConfig, SourceField};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    dtheta_deg: Option<f64>,
    z_floor: Option<f64>,
    cloud: Option<PathBuf>,
    robot: Option<PathBuf>,
    out: Option<PathBuf>,
    grid: Option<RawGrid>,
    #[serde(default)]
    planner: RawPlanner,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    field: SourceField,
    scene: Option<SceneSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    origin: [f64; 2],
    cell_size: f64,
    nx: usize,
    ny: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlanner {
    algorithm: Option<String>,
    start: Option<[f64; 3]>,
    obstacle_weight: Option<f64>,
    contamination_penalty: Option<f64>,
    revisit_penalty: Option<f64>,
    coverage_overlap: Option<f64>,
    velocity: Option<f64>,
    turn_weight: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    detection_limit: Option<f64>,
    area_cm2: Option<f64>,
    efficiency: Option<f64>,
    length_cm: Option<f64>,
    background_cps: Option<f64>,
    precision: Option<f64>,
}

/// Planner settings that depend on the loaded scene are left open here and
/// filled in by the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerSettings {
    pub algorithm: Algorithm,
    /// Detector start pose; the first coverable cell when absent.
    pub start: Option<Pose2D>,
    pub obstacle_weight: f64,
    pub contamination_penalty: f64,
    pub revisit_penalty: f64,
    pub coverage_overlap: f64,
    /// Survey speed, m/s; derived from the detector when absent.
    pub velocity: Option<f64>,
    pub turn_weight: f64,
}

impl PlannerSettings {
    pub fn to_config(&self, start: Pose2D, velocity: f64) -> PlannerConfig {
        PlannerConfig {
            algorithm: self.algorithm,
            start,
            obstacle_weight: self.obstacle_weight,
            contamination_penalty: self.contamination_penalty,
            revisit_penalty: self.revisit_penalty,
            coverage_overlap: self.coverage_overlap,
            velocity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
    pub cloud: Option<PathBuf>,
    pub robot: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub scene: Option<SceneSpec>,
    pub grid: Option<GridSpec>,
    pub z_floor: f64,
    /// Radians.
    pub dtheta: f64,
    pub planner: PlannerSettings,
    pub detector: DetectorConfig,
    pub field: SourceField,
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_text(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, path, &base)
    }

    /// Parses TOML text; `path` labels diagnostics and `base_dir` anchors
    /// relative paths.
    pub fn parse(text: &str, path: &Path, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(1);
            Error::Parse { path: path.to_path_buf(), line, message: e.message().to_string() }
        })?;
        let grid = raw.grid.map(|g| GridSpec::new((g.origin[0], g.origin[1]), g.cell_size, g.nx, g.ny)).transpose()?;
        let p = raw.planner;
        let algorithm = match p.algorithm.as_deref() {
            None => Algorithm::Bsa,
            Some(s) => s.parse()?,
        };
        let planner = PlannerSettings {
            algorithm,
            start: p.start.map(|[x, y, deg]| Pose2D::new(x, y, deg.to_radians())),
            obstacle_weight: p.obstacle_weight.unwrap_or(1.0),
            contamination_penalty: p.contamination_penalty.unwrap_or(0.0),
            revisit_penalty: p.revisit_penalty.unwrap_or(0.0),
            coverage_overlap: p.coverage_overlap.unwrap_or(crate::footprint::DEFAULT_COVERAGE_OVERLAP),
            velocity: p.velocity,
            turn_weight: p.turn_weight.unwrap_or(DEFAULT_TURN_WEIGHT),
        };
        if !(planner.turn_weight >= 0.0) {
            return Err(Error::Config("planner.turn_weight must be ≥ 0".into()));
        }
        let d = raw.detector;
        let dd = DetectorConfig::default();
        let detector = DetectorConfig {
            detection_limit: d.detection_limit.unwrap_or(dd.detection_limit),
            area_cm2: d.area_cm2.unwrap_or(dd.area_cm2),
            efficiency: d.efficiency.unwrap_or(dd.efficiency),
            length_cm: d.length_cm.unwrap_or(dd.length_cm),
            background_cps: d.background_cps.unwrap_or(dd.background_cps),
            precision: d.precision.unwrap_or(dd.precision),
        };
        detector.validate()?;
        raw.field.validate()?;
        let dtheta = raw.dtheta_deg.map(f64::to_radians).unwrap_or(DEFAULT_DTHETA);
        crate::partition::sample_count(dtheta)?;
        Ok(Self {
            base_dir: base_dir.to_path_buf(),
            cloud: raw.cloud,
            robot: raw.robot,
            out_dir: raw.out,
            scene: raw.scene,
            grid,
            z_floor: raw.z_floor.unwrap_or(DEFAULT_Z_FLOOR),
            dtheta,
            planner,
            detector,
            field: raw.field,
            seed: raw.seed,
        })
    }

    pub fn cloud_path(&self) -> Option<PathBuf> {
        self.cloud.as_deref().map(|p| io::resolve(&self.base_dir, p))
    }

    pub fn robot_path(&self) -> Option<PathBuf> {
        self.robot.as_deref().map(|p| io::resolve(&self.base_dir, p))
    }

    pub fn out_path(&self) -> Option<PathBuf> {
        self.out_dir.as_deref().map(|p| io::resolve(&self.base_dir, p))
    }

    pub fn require_grid(&self) -> Result<GridSpec> {
        self.grid.ok_or_else(|| Error::Config("missing [grid] section".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("run.toml"), Path::new("/tmp/base"))
    }

    #[test]
    fn units_convert_at_parse() {
        let cfg = parse(
            r#"
            dtheta_deg = 10
            cloud = "c.xyz"
            [grid]
            cell_size = 0.3
            nx = 4
            ny = 5
            [planner]
            algorithm = "path_transform"
            start = [0.15, 0.15, 90]
            [detector]
            length_cm = 20
            "#,
        )
        .unwrap();
        assert!((cfg.dtheta - 10f64.to_radians()).abs() < 1e-15);
        assert!((cfg.planner.start.unwrap().theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(cfg.planner.algorithm, Algorithm::PathTransform);
        assert_eq!(cfg.detector.length_cm, 20.0);
        assert_eq!(cfg.cloud_path().unwrap(), PathBuf::from("/tmp/base/c.xyz"));
        assert_eq!(cfg.require_grid().unwrap().nx, 4);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse("seed = 1\n[grid]\ncell_size = \"big\"\nnx = 1\nny = 1\n").unwrap_err();
        assert!(err.to_string().starts_with("run.toml:3:"), "{err}");
        assert!(parse("sede = 1\n").is_err());
        assert!(parse("dtheta_deg = 7\n").is_err());
        assert!(parse("[planner]\nalgorithm = \"zigzag\"\n").is_err());
        assert!(parse("[detector]\nefficiency = 2\n").is_err());
    }
}
