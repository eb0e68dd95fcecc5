//! Text file formats: point clouds, robot models, and the CSV/key-value
//! exports of every pipeline stage.
//!
//! Writers are pure `-> String` functions so output bytes depend only on
//! their inputs. Floats that must survive a round trip are printed with
//! Rust's shortest exact representation (`{}`); derived quantities use six
//! decimals.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{CollisionCylinder, Point3, PointCloud, RobotModel, SensorFootprint};
use crate::graph::NavGraph;
use crate::partition::{CellIndex, GridSpec, PartitionGrid};
use crate::planner::CoveragePlan;
use crate::survey::{HeatCell, SurveyHeatmap, Verdict};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents`, creating parent directories as needed.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_bytes(path, contents.as_bytes())
}

pub fn write_bytes(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn parse_f64(path: &Path, line: usize, what: &str, tok: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| parse_err(path, line, format!("{what}: `{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("{what}: `{tok}` is not finite")));
    }
    Ok(v)
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses `x y z` lines. `path` only labels diagnostics.
pub fn parse_pointcloud(text: &str, path: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (n, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(path, n, format!("expected `x y z`, found {} fields", toks.len())));
        }
        points.push(Point3::new(
            parse_f64(path, n, "x", toks[0])?,
            parse_f64(path, n, "y", toks[1])?,
            parse_f64(path, n, "z", toks[2])?,
        ));
    }
    PointCloud::new(points)
}

/// Loads a cloud and drops floor returns below `z_floor`.
pub fn load_pointcloud(path: &Path, z_floor: f64) -> Result<PointCloud> {
    Ok(parse_pointcloud(&read_text(path)?, path)?.without_floor(z_floor))
}

pub fn pointcloud_text(cloud: &PointCloud, comment: &str) -> String {
    let mut s = String::with_capacity(cloud.len() * 24 + 64);
    for line in comment.lines() {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "# x y z (m), {} points", cloud.len());
    for p in cloud.points() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    s
}

/// Robot file: one cylinder per line as `BODY|SENSOR offset_x offset_y
/// radius z_min z_max`, plus `sensor_offset x y`, `footprint length width`
/// and optionally `max_speed linear angular` (m/s, deg/s).
pub fn parse_robot(text: &str, path: &Path) -> Result<RobotModel> {
    let mut body = Vec::new();
    let mut sensor = Vec::new();
    let mut offset = None;
    let mut footprint = None;
    let mut speeds = None;
    for (n, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let nums = |want: usize| -> Result<Vec<f64>> {
            if toks.len() != want + 1 {
                return Err(parse_err(path, n, format!("`{}` takes {want} values, found {}", toks[0], toks.len() - 1)));
            }
            toks[1..].iter().map(|t| parse_f64(path, n, toks[0], t)).collect()
        };
        match toks[0].to_ascii_uppercase().as_str() {
            "BODY" | "SENSOR" => {
                let v = nums(5)?;
                let cyl = CollisionCylinder::new(v[0], v[1], v[2], v[3], v[4])
                    .map_err(|e| parse_err(path, n, e.to_string()))?;
                if toks[0].eq_ignore_ascii_case("BODY") {
                    body.push(cyl);
                } else {
                    sensor.push(cyl);
                }
            }
            "SENSOR_OFFSET" => {
                let v = nums(2)?;
                offset = Some((v[0], v[1]));
            }
            "FOOTPRINT" => {
                let v = nums(2)?;
                footprint = Some(SensorFootprint { length: v[0], width: v[1] });
            }
            "MAX_SPEED" => {
                let v = nums(2)?;
                speeds = Some((v[0], v[1].to_radians()));
            }
            _ => return Err(parse_err(path, n, format!("unknown robot entry `{}`", toks[0]))),
        }
    }
    let last = text.lines().count().max(1);
    let offset = offset.ok_or_else(|| parse_err(path, last, "missing `sensor_offset x y`"))?;
    let footprint = footprint.ok_or_else(|| parse_err(path, last, "missing `footprint length width`"))?;
    let defaults = RobotModel::default_magni_like();
    let (lin, ang) = speeds.unwrap_or((defaults.max_linear_speed(), defaults.max_angular_speed()));
    RobotModel::new(body, sensor, offset, footprint, lin, ang).map_err(|e| parse_err(path, last, e.to_string()))
}

pub fn load_robot(path: &Path) -> Result<RobotModel> {
    parse_robot(&read_text(path)?, path)
}

pub fn robot_text(robot: &RobotModel) -> String {
    let mut s = String::from("# tag offset_x offset_y radius z_min z_max (m)\n");
    for (tag, c) in robot.cylinders() {
        let _ = writeln!(s, "{} {} {} {} {} {}", tag.as_str(), c.offset_x, c.offset_y, c.radius, c.z_min, c.z_max);
    }
    let (ox, oy) = robot.sensor_offset();
    let fp = robot.footprint();
    let _ = writeln!(s, "sensor_offset {ox} {oy}");
    let _ = writeln!(s, "footprint {} {}", fp.length, fp.width);
    let _ = writeln!(s, "max_speed {} {}", robot.max_linear_speed(), robot.max_angular_speed().to_degrees());
    s
}

fn grid_header(spec: &GridSpec) -> String {
    format!(
        "grid origin_x={} origin_y={} cell_size={} nx={} ny={}",
        spec.origin.0, spec.origin.1, spec.cell_size, spec.nx, spec.ny
    )
}

fn parse_grid_header(line: &str, path: &Path, n: usize) -> Result<GridSpec> {
    let mut fields = std::collections::BTreeMap::new();
    for kv in line.split_whitespace().skip(1) {
        let (k, v) = kv.split_once('=').ok_or_else(|| parse_err(path, n, format!("bad grid field `{kv}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| parse_err(path, n, format!("grid header lacks `{k}`")));
    let count = |k: &str| -> Result<usize> {
        get(k)?.parse().map_err(|_| parse_err(path, n, format!("grid `{k}` is not a count")))
    };
    GridSpec::new(
        (parse_f64(path, n, "origin_x", get("origin_x")?)?, parse_f64(path, n, "origin_y", get("origin_y")?)?),
        parse_f64(path, n, "cell_size", get("cell_size")?)?,
        count("nx")?,
        count("ny")?,
    )
    .map_err(|e| parse_err(path, n, e.to_string()))
}

/// `x_index,y_index,i,phi1_deg,phi2_deg`, one row per partition.
pub fn partition_csv(grid: &PartitionGrid) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} dtheta_deg={:.6}", grid_header(grid.spec()), grid.dtheta().to_degrees());
    s.push_str("x_index,y_index,i,phi1_deg,phi2_deg\n");
    for p in grid.all_partitions() {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6}",
            p.cell.x,
            p.cell.y,
            p.index,
            p.range.phi1().to_degrees(),
            p.range.phi2().to_degrees()
        );
    }
    s
}

pub fn graph_csv(graph: &NavGraph) -> String {
    let mut s = String::from(
        "from_cell_x,from_cell_y,from_i,to_cell_x,to_cell_y,to_i,theta_from_deg,theta_to_deg,length_m,turn_rad\n",
    );
    for e in graph.edges() {
        let a = graph.node(e.from);
        let b = graph.node(e.to);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            a.cell.x,
            a.cell.y,
            a.index,
            b.cell.x,
            b.cell.y,
            b.index,
            e.annotation.theta_from.to_degrees(),
            e.annotation.theta_to.to_degrees(),
            e.annotation.length,
            e.annotation.turn
        );
    }
    s
}

pub fn plan_csv(plan: &CoveragePlan) -> String {
    let mut s = String::from("step,cell_x,cell_y,i,sensor_x,sensor_y,theta_deg,base_x,base_y,velocity_mps\n");
    for (k, st) in plan.steps.iter().enumerate() {
        let _ = writeln!(
            s,
            "{k},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            st.cell.x,
            st.cell.y,
            st.partition,
            st.sensor.x,
            st.sensor.y,
            st.sensor.theta.to_degrees(),
            st.base.x,
            st.base.y,
            st.velocity
        );
    }
    s
}

/// Heat map CSV. Rates and dwell times are printed exactly so a saved heat
/// map compares equal to the in-memory one it came from.
pub fn heatmap_csv(map: &SurveyHeatmap) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}", grid_header(&map.grid));
    s.push_str("cell_x,cell_y,rate_cps,dwell_s,verdict\n");
    for (k, cell) in map.cells.iter().enumerate() {
        let c = map.grid.cell_at(k);
        let rate = cell.rate.map(|r| r.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", c.x, c.y, rate, cell.dwell, cell.verdict);
    }
    s
}

/// Parses a heat map CSV written by [`heatmap_csv`]. Metadata lives in the
/// sidecar file and is not restored.
pub fn parse_heatmap_csv(text: &str, path: &Path) -> Result<SurveyHeatmap> {
    let mut grid = None;
    let mut cells: Vec<Option<HeatCell>> = Vec::new();
    let mut saw_header = false;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim();
            if c.starts_with("grid ") {
                let spec = parse_grid_header(c, path, n)?;
                cells = vec![None; spec.cell_count()];
                grid = Some(spec);
            }
            continue;
        }
        if !saw_header {
            if line != "cell_x,cell_y,rate_cps,dwell_s,verdict" {
                return Err(parse_err(path, n, "expected heat map column header"));
            }
            saw_header = true;
            continue;
        }
        let spec = grid.ok_or_else(|| parse_err(path, n, "missing `# grid ...` header line"))?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(parse_err(path, n, format!("expected 5 fields, found {}", f.len())));
        }
        let idx = |t: &str| -> Result<usize> {
            t.parse().map_err(|_| parse_err(path, n, format!("`{t}` is not a cell index")))
        };
        let c = CellIndex::new(idx(f[0])?, idx(f[1])?);
        if c.x >= spec.nx || c.y >= spec.ny {
            return Err(parse_err(path, n, format!("cell {c} lies outside the grid")));
        }
        let rate = if f[2].is_empty() { None } else { Some(parse_f64(path, n, "rate_cps", f[2])?) };
        let dwell = parse_f64(path, n, "dwell_s", f[3])?;
        let verdict: Verdict = f[4].parse().map_err(|e: Error| parse_err(path, n, e.to_string()))?;
        if (verdict == Verdict::NotSurveyed) != rate.is_none() {
            return Err(parse_err(path, n, "only NOT_SURVEYED cells may omit the rate"));
        }
        cells[spec.linear(c)] = Some(HeatCell { rate, dwell, verdict });
    }
    let last = text.lines().count().max(1);
    let grid = grid.ok_or_else(|| parse_err(path, last, "missing `# grid ...` header line"))?;
    let cells = cells
        .into_iter()
        .enumerate()
        .map(|(k, c)| c.ok_or_else(|| parse_err(path, last, format!("no row for cell {}", grid.cell_at(k)))))
        .collect::<Result<Vec<_>>>()?;
    Ok(SurveyHeatmap { grid, cells, metadata: None })
}

pub fn load_heatmap(path: &Path) -> Result<SurveyHeatmap> {
    parse_heatmap_csv(&read_text(path)?, path)
}

/// Sidecar `key = value` metadata for a heat map.
pub fn heatmap_metadata(map: &SurveyHeatmap) -> String {
    let mut s = String::new();
    let g = &map.grid;
    let _ = writeln!(s, "grid.origin_x = {}", g.origin.0);
    let _ = writeln!(s, "grid.origin_y = {}", g.origin.1);
    let _ = writeln!(s, "grid.cell_size = {}", g.cell_size);
    let _ = writeln!(s, "grid.nx = {}", g.nx);
    let _ = writeln!(s, "grid.ny = {}", g.ny);
    if let Some(m) = &map.metadata {
        let d = &m.detector;
        let _ = writeln!(s, "seed = {}", m.seed);
        let _ = writeln!(s, "plan_hash = {}", m.plan_hash);
        let _ = writeln!(s, "count_threshold_cps = {}", m.count_threshold);
        let _ = writeln!(s, "detection_limit_dps_cm2 = {}", d.detection_limit);
        let _ = writeln!(s, "detector_area_cm2 = {}", d.area_cm2);
        let _ = writeln!(s, "detector_efficiency = {}", d.efficiency);
        let _ = writeln!(s, "detector_length_cm = {}", d.length_cm);
        let _ = writeln!(s, "background_cps = {}", d.background_cps);
        let _ = writeln!(s, "precision = {}", d.precision);
        if let Some(t) = &m.timestamp {
            let _ = writeln!(s, "timestamp = {t}");
        }
    }
    for v in [Verdict::Clean, Verdict::Contaminated, Verdict::NotSurveyed] {
        let _ = writeln!(s, "cells.{v} = {}", map.count(v));
    }
    s
}

/// Binary 8-bit PGM, north up. Gray is linear in rate and saturates at
/// twice the count threshold; unsurveyed cells are black like zero rate.
pub fn heatmap_pgm(map: &SurveyHeatmap, count_threshold: f64) -> Vec<u8> {
    let g = &map.grid;
    let mut out =
        format!("P5\n# gray = 255 * min(rate, 2 CT) / (2 CT), CT = {count_threshold}\n{} {}\n255\n", g.nx, g.ny)
            .into_bytes();
    let top = 2.0 * count_threshold;
    for y in (0..g.ny).rev() {
        for x in 0..g.nx {
            let rate = map.cell(CellIndex::new(x, y)).rate.unwrap_or(0.0);
            let level = if top > 0.0 {
                (255.0 * rate.min(top) / top).round()
            } else if rate > 0.0 {
                255.0
            } else {
                0.0
            };
            out.push(level as u8);
        }
    }
    out
}

/// Resolves `p` against `base` unless it is absolute.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CylinderTag;

    fn p() -> PathBuf {
        PathBuf::from("test.xyz")
    }

    #[test]
    fn cloud_comments_and_diagnostics() {
        let c = parse_pointcloud("# header\n1 2 3\n\n  # indented comment\n4.5 -1 0.25\n", &p()).unwrap();
        assert_eq!(c.len(), 2);
        let err = parse_pointcloud("1 2 3\n1 2\n", &p()).unwrap_err();
        assert!(err.to_string().starts_with("test.xyz:2:"), "{err}");
        let err = parse_pointcloud("1 2 3\n1 two 3\n", &p()).unwrap_err();
        assert!(err.to_string().contains("test.xyz:2"), "{err}");
        assert!(parse_pointcloud("nan 0 0\n", &p()).is_err());
    }

    #[test]
    fn cloud_round_trip_is_exact() {
        let pts = vec![Point3::new(0.1, 0.2 + 1e-17, 1.0 / 3.0), Point3::new(-5e-9, 12345.678, 0.03)];
        let cloud = PointCloud::new(pts).unwrap();
        let text = pointcloud_text(&cloud, "demo");
        assert_eq!(parse_pointcloud(&text, &p()).unwrap(), cloud);
    }

    #[test]
    fn robot_round_trip() {
        let r = RobotModel::default_magni_like();
        let text = robot_text(&r);
        let back = parse_robot(&text, Path::new("robot.txt")).unwrap();
        assert_eq!(back.body_cylinders(), r.body_cylinders());
        assert_eq!(back.sensor_cylinders(), r.sensor_cylinders());
        assert_eq!(back.footprint(), r.footprint());
        assert!((back.max_angular_speed() - r.max_angular_speed()).abs() < 1e-12);
    }

    #[test]
    fn robot_errors_have_line_numbers() {
        let err = parse_robot("BODY 0 0 0.2 0 0.4\nWHEEL 1 2\n", Path::new("r.txt")).unwrap_err();
        assert!(err.to_string().starts_with("r.txt:2:"), "{err}");
        let err = parse_robot("BODY 0 0 -0.2 0 0.4\n", Path::new("r.txt")).unwrap_err();
        assert!(err.to_string().starts_with("r.txt:1:"), "{err}");
        assert!(parse_robot("BODY 0 0 0.2 0 0.4\n", Path::new("r.txt")).is_err());
    }

    #[test]
    fn cylinder_tags_print_upper_case() {
        assert_eq!(CylinderTag::Body.as_str(), "BODY");
        assert!(robot_text(&RobotModel::default_magni_like()).contains("\nSENSOR "));
    }
}
