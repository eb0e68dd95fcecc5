//! End-to-end stages driven by a [`RunConfig`], each writing its exports to
//! an output directory. Re-running a stage overwrites identical bytes.

use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{IndexedCloud, PointCloud, Pose2D, RobotModel};
use crate::graph::{build_nav_graph, NavGraph, TransitionSteps};
use crate::io;
use crate::partition::{build_partition_grid, PartitionGrid};
use crate::planner::{coverage_metrics, plan_coverage, CoveragePlan, CoverageReport, PlannerConfig};
use crate::survey::{self, compare_heatmaps, count_threshold, optimal_velocity, HeatmapDiff, SurveyHeatmap};

pub const CLOUD_FILE: &str = "cloud.xyz";
pub const PARTITION_FILE: &str = "partitions.csv";
pub const GRAPH_FILE: &str = "graph.csv";
pub const PLAN_FILE: &str = "plan.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const HEATMAP_FILE: &str = "heatmap.csv";
pub const HEATMAP_META_FILE: &str = "heatmap.meta";
pub const HEATMAP_PGM_FILE: &str = "heatmap.pgm";
pub const DIFF_FILE: &str = "diff.txt";

/// Obstacle cloud: the configured file, else the rasterized scene, else
/// nothing.
pub fn load_cloud(cfg: &RunConfig) -> Result<PointCloud> {
    if let Some(path) = cfg.cloud_path() {
        return io::load_pointcloud(&path, cfg.z_floor);
    }
    match &cfg.scene {
        Some(scene) => Ok(scene.rasterize()?.without_floor(cfg.z_floor)),
        None => Ok(PointCloud::empty()),
    }
}

pub fn load_robot(cfg: &RunConfig) -> Result<RobotModel> {
    match cfg.robot_path() {
        Some(p) => io::load_robot(&p),
        None => Ok(RobotModel::default_magni_like()),
    }
}

/// Survey speed: configured, else the detector's precision-limited speed
/// capped at the robot's top speed.
pub fn survey_velocity(cfg: &RunConfig, robot: &RobotModel) -> Result<f64> {
    match cfg.planner.velocity {
        Some(v) => Ok(v),
        None => Ok(optimal_velocity(&cfg.detector)?.min(robot.max_linear_speed())),
    }
}

pub struct PartitionStage {
    pub robot: RobotModel,
    pub cloud: PointCloud,
    pub index: IndexedCloud,
    pub grid: PartitionGrid,
}

pub fn partition_stage(cfg: &RunConfig) -> Result<PartitionStage> {
    let robot = load_robot(cfg)?;
    let cloud = load_cloud(cfg)?;
    let index = IndexedCloud::from(&cloud);
    let grid = build_partition_grid(cfg.require_grid()?, &robot, &index, cfg.dtheta)?;
    Ok(PartitionStage { robot, cloud, index, grid })
}

pub struct PlanStage {
    pub partition: PartitionStage,
    pub graph: NavGraph,
    pub planner: PlannerConfig,
    pub plan: CoveragePlan,
    pub report: CoverageReport,
}

/// Start pose: configured, else the first heading of the first coverable
/// cell in row-major order.
fn default_start(grid: &PartitionGrid) -> Result<Pose2D> {
    let cell = grid
        .coverable_cells()
        .into_iter()
        .next()
        .ok_or_else(|| Error::Planning("no cell admits a detector placement; nothing to plan".into()))?;
    let (x, y) = grid.spec().cell_center(cell);
    Ok(Pose2D::new(x, y, grid.ranges(cell)[0].midpoint()))
}

pub fn plan_stage(cfg: &RunConfig) -> Result<PlanStage> {
    let partition = partition_stage(cfg)?;
    let graph = build_nav_graph(
        &partition.grid,
        &partition.robot,
        &partition.index,
        TransitionSteps::for_grid(&partition.grid),
        cfg.planner.turn_weight,
    );
    let start = match cfg.planner.start {
        Some(s) => s,
        None => default_start(&partition.grid)?,
    };
    let velocity = survey_velocity(cfg, &partition.robot)?;
    let planner = cfg.planner.to_config(start, velocity);
    let plan = plan_coverage(&graph, &partition.grid, &partition.robot, &planner)?;
    let report = coverage_metrics(&plan, &partition.grid, &graph, &partition.robot, &start);
    Ok(PlanStage { partition, graph, planner, plan, report })
}

pub struct SurveyStage {
    pub plan: PlanStage,
    pub heatmap: SurveyHeatmap,
    pub diff: Option<HeatmapDiff>,
}

pub fn survey_stage(cfg: &RunConfig, baseline: Option<&Path>) -> Result<SurveyStage> {
    let baseline = baseline.map(io::load_heatmap).transpose()?;
    let plan = plan_stage(cfg)?;
    let heatmap = survey::run_survey(&plan.plan, &cfg.field, &cfg.detector, cfg.seed)?;
    let diff = baseline.map(|b| compare_heatmaps(&b, &heatmap)).transpose()?;
    Ok(SurveyStage { plan, heatmap, diff })
}

/// Rasterizes the configured scene to `out/cloud.xyz`.
pub fn cmd_scene(cfg: &RunConfig, out: &Path) -> Result<(PathBuf, PointCloud)> {
    let scene = cfg.scene.as_ref().ok_or_else(|| Error::Config("missing [scene] section".into()))?;
    let cloud = scene.rasterize()?;
    let path = out.join(CLOUD_FILE);
    let [x0, y0, x1, y1] = scene.bounds;
    let comment = format!(
        "scene bounds [{x0}, {y0}]-[{x1}, {y1}], density {} points/m, {} primitives",
        scene.density,
        scene.primitives.len()
    );
    io::write_text(&path, &io::pointcloud_text(&cloud, &comment))?;
    Ok((path, cloud))
}

pub fn cmd_partition(cfg: &RunConfig, out: &Path) -> Result<PartitionStage> {
    let stage = partition_stage(cfg)?;
    io::write_text(&out.join(PARTITION_FILE), &io::partition_csv(&stage.grid))?;
    Ok(stage)
}

fn write_plan_outputs(stage: &PlanStage, out: &Path) -> Result<()> {
    io::write_text(&out.join(PARTITION_FILE), &io::partition_csv(&stage.partition.grid))?;
    io::write_text(&out.join(GRAPH_FILE), &io::graph_csv(&stage.graph))?;
    io::write_text(&out.join(PLAN_FILE), &io::plan_csv(&stage.plan))?;
    let mut report =
        format!("algorithm = {}\nconfig_hash = {}\n", stage.plan.algorithm.as_str(), stage.plan.config_hash);
    report.push_str(&stage.report.to_text());
    io::write_text(&out.join(REPORT_FILE), &report)
}

pub fn cmd_plan(cfg: &RunConfig, out: &Path) -> Result<PlanStage> {
    let stage = plan_stage(cfg)?;
    write_plan_outputs(&stage, out)?;
    Ok(stage)
}

pub fn cmd_survey(cfg: &RunConfig, out: &Path, baseline: Option<&Path>) -> Result<SurveyStage> {
    let stage = survey_stage(cfg, baseline)?;
    write_plan_outputs(&stage.plan, out)?;
    io::write_text(&out.join(HEATMAP_FILE), &io::heatmap_csv(&stage.heatmap))?;
    io::write_text(&out.join(HEATMAP_META_FILE), &io::heatmap_metadata(&stage.heatmap))?;
    io::write_bytes(&out.join(HEATMAP_PGM_FILE), &io::heatmap_pgm(&stage.heatmap, count_threshold(&cfg.detector)))?;
    if let Some(diff) = &stage.diff {
        io::write_text(&out.join(DIFF_FILE), &diff.to_text())?;
    }
    Ok(stage)
}
