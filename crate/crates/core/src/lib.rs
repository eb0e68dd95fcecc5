//! Coverage survey planning for a ground robot carrying an off-center floor
//! detector.
//!
//! The robot is modelled as vertical collision cylinders checked against an
//! obstacle point cloud. For every grid cell the valid detector headings are
//! grouped into orientation ranges (partitions); kinematically feasible
//! moves between partitions form the navigation graph; coverage planners
//! walk that graph; the survey module replays a plan against a simulated
//! contamination field and produces a heat map.
//!
//! ```
//! use alphasurvey_core::*;
//!
//! let robot = RobotModel::default_magni_like();
//! let spec = GridSpec::new((0.0, 0.0), 0.3, 6, 6).unwrap();
//! let cloud = PointCloud::empty();
//! let grid = build_partition_grid(spec, &robot, &cloud, DEFAULT_DTHETA).unwrap();
//! let graph = build_nav_graph(&grid, &robot, &cloud, TransitionSteps::for_grid(&grid), DEFAULT_TURN_WEIGHT);
//! assert!(graph.node_count() > 0);
//! ```

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod footprint;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod partition;
pub mod pipeline;
pub mod planner;
pub mod scene;
pub mod survey;

pub use error::{Error, ErrorKind, Result};
pub use footprint::{body_cells, cell_overlap_fraction, footprint_cells, DEFAULT_COVERAGE_OVERLAP};
pub use geometry::{
    base_pose_to_sensor_pose, point_in_cylinder, pose_valid, sensor_pose_to_base_pose, CollisionCylinder, CylinderTag,
    IndexedCloud, ObstacleSet, Point3, PointCloud, Pose2D, RobotModel, SensorFootprint, DEFAULT_Z_FLOOR,
};
pub use graph::{
    build_nav_graph, feasible_edge, simulate_transition, EdgeAnnotation, NavGraph, NodeId, TransitionSteps,
    DEFAULT_TURN_WEIGHT,
};
pub use partition::{
    build_partition_grid, compute_cell_ranges, CellIndex, GridSpec, OrientationRange, Partition, PartitionGrid,
    DEFAULT_DTHETA,
};
pub use planner::{
    bsa_plan, coverage_metrics, path_transform_plan, plan_coverage, validate_contamination_safety, Algorithm,
    CoveragePlan, CoverageReport, PlanStep, PlannerConfig, Violation,
};
pub use scene::{Primitive, SceneSpec};
pub use survey::{
    compare_heatmaps, count_threshold, optimal_velocity, run_survey, simulate_measurement, DetectorConfig, DiskSource,
    HeatmapDiff, SourceField, SurveyHeatmap, Verdict,
};
