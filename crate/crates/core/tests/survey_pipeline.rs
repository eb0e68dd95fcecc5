use std::path::Path;

use alphasurvey_core::config::RunConfig;
use alphasurvey_core::pipeline;
use alphasurvey_core::*;

fn open_room(nx: usize, ny: usize) -> (CoveragePlan, PartitionGrid) {
    let robot = RobotModel::default_magni_like();
    let spec = GridSpec::new((0.0, 0.0), 0.3, nx, ny).unwrap();
    let cloud = PointCloud::empty();
    let grid = build_partition_grid(spec, &robot, &cloud, DEFAULT_DTHETA).unwrap();
    let graph = build_nav_graph(&grid, &robot, &cloud, TransitionSteps::for_grid(&grid), DEFAULT_TURN_WEIGHT);
    let cfg = PlannerConfig::new(Algorithm::Bsa, Pose2D::new(0.15, 0.15, 0.0), 0.06);
    (plan_coverage(&graph, &grid, &robot, &cfg).unwrap(), grid)
}

#[test]
fn empty_plan_leaves_everything_unsurveyed() {
    let (mut plan, _) = open_room(3, 2);
    plan.steps.clear();
    let map = run_survey(&plan, &SourceField::default(), &DetectorConfig::default(), 0).unwrap();
    assert_eq!(map.count(Verdict::NotSurveyed), 6);
    assert!(map.cells.iter().all(|c| c.rate.is_none() && c.dwell == 0.0));
}

#[test]
fn identical_surveys_diff_to_nothing() {
    let (plan, _) = open_room(4, 4);
    let map = run_survey(&plan, &SourceField::default(), &DetectorConfig::default(), 9).unwrap();
    let diff = compare_heatmaps(&map, &map).unwrap();
    assert_eq!(diff.changed().count(), 0);
    assert_eq!(diff.transitions_between(Verdict::Clean, Verdict::Clean), 16);
    assert!(diff.cells.iter().all(|c| c.rate_delta == Some(0.0)));
}

#[test]
fn one_hot_cell_shows_as_one_transition() {
    let (plan, grid) = open_room(5, 5);
    let det = DetectorConfig::default();
    let hot = CellIndex::new(2, 3);
    let (x, y) = grid.spec().cell_center(hot);
    let clean = run_survey(&plan, &SourceField::default(), &det, 3).unwrap();
    let field = SourceField {
        disks: vec![DiskSource { center: [x, y], radius: 0.05, rate: 100.0 * det.detection_limit }],
        background_emission: 0.0,
    };
    let dirty = run_survey(&plan, &field, &det, 3).unwrap();
    let diff = compare_heatmaps(&clean, &dirty).unwrap();
    assert_eq!(diff.transitions_between(Verdict::Clean, Verdict::Contaminated), 1);
    let changed: Vec<_> = diff.changed().map(|c| c.cell).collect();
    assert_eq!(changed, vec![hot]);
    assert!(diff.to_text().contains("change.2:3 = CLEAN -> CONTAMINATED"));
}

#[test]
fn mismatched_grids_do_not_compare() {
    let (a, _) = open_room(3, 3);
    let (b, _) = open_room(3, 4);
    let det = DetectorConfig::default();
    let ma = run_survey(&a, &SourceField::default(), &det, 0).unwrap();
    let mb = run_survey(&b, &SourceField::default(), &det, 0).unwrap();
    assert_eq!(compare_heatmaps(&ma, &mb).unwrap_err().kind(), ErrorKind::Config);
}

#[test]
fn heatmap_csv_round_trips() {
    let (mut plan, _) = open_room(4, 3);
    plan.steps.truncate(5);
    let field = SourceField {
        disks: vec![DiskSource { center: [0.45, 0.15], radius: 0.1, rate: 1.0 }],
        background_emission: 0.002,
    };
    let map = run_survey(&plan, &field, &DetectorConfig::default(), 11).unwrap();
    assert!(map.count(Verdict::NotSurveyed) > 0);
    let back = io::parse_heatmap_csv(&io::heatmap_csv(&map), Path::new("m.csv")).unwrap();
    assert_eq!(back.grid, map.grid);
    assert_eq!(back.cells, map.cells);
    assert!(back.metadata.is_none());
}

const RUN: &str = r#"
seed = 5
out = "out"
[grid]
cell_size = 0.3
nx = 8
ny = 6
[planner]
algorithm = "path_transform"
[field]
[[field.disk]]
center = [1.2, 0.9]
radius = 0.1
rate = 1.0
[scene]
bounds = [0.0, 0.0, 2.4, 1.8]
[[scene.primitive]]
kind = "pillar"
center = [1.8, 1.2]
radius = 0.08
height = 1.0
"#;

fn run_config(dir: &Path) -> RunConfig {
    let path = dir.join("run.toml");
    std::fs::write(&path, RUN).unwrap();
    RunConfig::load(&path).unwrap()
}

#[test]
fn pipeline_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = run_config(dir.path());
    let out = cfg.out_path().unwrap();
    assert_eq!(out, dir.path().join("out"));

    let (cloud_path, cloud) = pipeline::cmd_scene(&cfg, &out).unwrap();
    let reread = io::load_pointcloud(&cloud_path, 0.0).unwrap();
    assert_eq!(reread.points(), cloud.points());

    let files = [
        pipeline::PARTITION_FILE,
        pipeline::GRAPH_FILE,
        pipeline::PLAN_FILE,
        pipeline::REPORT_FILE,
        pipeline::HEATMAP_FILE,
        pipeline::HEATMAP_META_FILE,
        pipeline::HEATMAP_PGM_FILE,
    ];
    let first = pipeline::cmd_survey(&cfg, &out, None).unwrap();
    assert!(first.diff.is_none());
    let before: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(out.join(f)).unwrap()).collect();
    pipeline::cmd_survey(&cfg, &out, None).unwrap();
    for (f, bytes) in files.iter().zip(&before) {
        assert_eq!(&std::fs::read(out.join(f)).unwrap(), bytes, "{f} changed between runs");
    }

    let report = String::from_utf8(before[3].clone()).unwrap();
    assert!(report.starts_with("algorithm = path_transform\n"));
    assert!(report.contains("coverage_fraction = "));
    let meta = String::from_utf8(before[5].clone()).unwrap();
    assert!(meta.contains("seed = 5"));
    let pgm = &before[6];
    assert!(pgm.starts_with(b"P5\n#"));
    let header = b"\n8 6\n255\n";
    let at = pgm.windows(header.len()).position(|w| w == header).unwrap();
    assert_eq!(pgm.len() - at - header.len(), 48);
    assert!(first.heatmap.count(Verdict::Contaminated) >= 1);
}

#[test]
fn survey_against_own_baseline_is_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = run_config(dir.path());
    let out = cfg.out_path().unwrap();
    pipeline::cmd_survey(&cfg, &out, None).unwrap();
    let baseline = out.join(pipeline::HEATMAP_FILE);
    let again = pipeline::cmd_survey(&cfg, &out, Some(&baseline)).unwrap();
    let diff = again.diff.unwrap();
    assert_eq!(diff.changed().count(), 0);
    assert!(diff.cells.iter().all(|c| c.rate_delta.is_none_or(|d| d == 0.0)));
    let text = std::fs::read_to_string(out.join(pipeline::DIFF_FILE)).unwrap();
    assert!(text.contains("changed_cells = 0"));
}

#[test]
fn missing_inputs_are_reported_by_kind() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "cloud = \"nope.xyz\"\n[grid]\ncell_size = 0.3\nnx = 2\nny = 2\n").unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    let err = pipeline::cmd_partition(&cfg, dir.path()).err().unwrap();
    assert_eq!(err.kind(), ErrorKind::Io);

    std::fs::write(&path, "[grid]\ncell_size = 0.3\nnx = 2\n").unwrap();
    let err = RunConfig::load(&path).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Config);
    assert!(err.to_string().contains("run.toml"));

    let no_grid = RunConfig::parse("seed = 1\n", Path::new("x.toml"), dir.path()).unwrap();
    assert_eq!(pipeline::cmd_plan(&no_grid, dir.path()).err().unwrap().kind(), ErrorKind::Config);
}
