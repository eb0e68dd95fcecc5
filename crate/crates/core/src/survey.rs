//! Count thresholds, survey speed, simulated detector readings, and heat maps.
//!
//! Detector quantities use centimeters and decays per second per cm², like
//! the facility limits they come from. Positions stay in meters.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose2D;
use crate::partition::{CellIndex, GridSpec};
use crate::planner::CoveragePlan;

/// Manual swipe-reading speed, 2 in/s, for comparison with the robot.
pub const MANUAL_SWIPE_SPEED: f64 = 2.0 * 0.0254;

/// Quadrature cell edge for footprint integrals, cm.
pub const QUADRATURE_STEP_CM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Facility detection limit `L_D`, dps/cm².
    pub detection_limit: f64,
    /// Detector area `A_d`, cm².
    pub area_cm2: f64,
    /// Detector efficiency `ε_d`.
    pub efficiency: f64,
    /// Detector length along travel `L_t`, cm.
    pub length_cm: f64,
    /// Counts per second with no source present.
    pub background_cps: f64,
    /// Target relative standard deviation of a reading at the threshold.
    pub precision: f64,
}

impl Default for DetectorConfig {
    /// Example values only; no facility or instrument is implied.
    fn default() -> Self {
        Self {
            detection_limit: 0.05,
            area_cm2: 900.0,
            efficiency: 0.2,
            length_cm: 30.0,
            background_cps: 0.5,
            precision: 0.1,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("detector: {m}")));
        if !(self.area_cm2 > 0.0) {
            return bad("area must be positive");
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad("efficiency must lie in (0, 1]");
        }
        if !(self.detection_limit >= 0.0) {
            return bad("detection limit must be ≥ 0");
        }
        if !(self.length_cm > 0.0) {
            return bad("length along travel must be positive");
        }
        if !(self.background_cps >= 0.0) {
            return bad("background rate must be ≥ 0");
        }
        if !(self.precision > 0.0 && self.precision < 1.0) {
            return bad("precision target must lie in (0, 1)");
        }
        Ok(())
    }

    /// Detector width across travel, cm (`A_d / L_t`).
    pub fn width_cm(&self) -> f64 {
        self.area_cm2 / self.length_cm
    }
}

/// `CT = L_D · A_d · ε_d`, counts per second.
pub fn count_threshold(cfg: &DetectorConfig) -> f64 {
    cfg.detection_limit * cfg.area_cm2 * cfg.efficiency
}

/// Fastest speed (m/s) at which a reading at the threshold rate still meets
/// the precision target.
///
/// A point stays under the detector for `t = L_t / v`. At rate `CT` the
/// expected count is `CT · t` and its Poisson relative spread is
/// `1 / √(CT · t)`, so the target needs `t ≥ 1 / (CT · ε²)`, giving
/// `v = L_t · CT · ε²`. Callers cap the result at the robot's top speed.
pub fn optimal_velocity(cfg: &DetectorConfig) -> Result<f64> {
    cfg.validate()?;
    let ct = count_threshold(cfg);
    if !(ct > 0.0) {
        return Err(Error::Config(format!(
            "count threshold is {ct}; survey speed is undefined without a positive threshold"
        )));
    }
    Ok(cfg.length_cm / 100.0 * ct * cfg.precision * cfg.precision)
}

/// Disk of surface contamination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSource {
    pub center: [f64; 2],
    /// Meters.
    pub radius: f64,
    /// dps/cm².
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceField {
    #[serde(default, rename = "disk")]
    pub disks: Vec<DiskSource>,
    /// Uniform surface emission everywhere, dps/cm².
    #[serde(default)]
    pub background_emission: f64,
}

impl SourceField {
    pub fn validate(&self) -> Result<()> {
        if !(self.background_emission >= 0.0) {
            return Err(Error::Config("background emission must be ≥ 0".into()));
        }
        for d in &self.disks {
            if !(d.radius > 0.0) || !(d.rate >= 0.0) {
                return Err(Error::Config("disk sources need radius > 0 and rate ≥ 0".into()));
            }
        }
        Ok(())
    }

    /// Local emission at a floor point, dps/cm².
    pub fn emission_at(&self, x: f64, y: f64) -> f64 {
        let mut e = self.background_emission;
        for d in &self.disks {
            let dx = x - d.center[0];
            let dy = y - d.center[1];
            if dx * dx + dy * dy <= d.radius * d.radius {
                e += d.rate;
            }
        }
        e
    }
}

/// Expected count rate for the detector at `sensor`: efficiency times the
/// emission integrated over the footprint (midpoint rule on `step_cm`
/// cells), plus background.
pub fn true_count_rate_with_step(sensor: &Pose2D, field: &SourceField, cfg: &DetectorConfig, step_cm: f64) -> f64 {
    let len = cfg.length_cm;
    let wid = cfg.width_cm();
    let nl = (len / step_cm).ceil().max(1.0) as usize;
    let nw = (wid / step_cm).ceil().max(1.0) as usize;
    let hl = len / nl as f64;
    let hw = wid / nw as f64;
    let (s, c) = sensor.theta.sin_cos();
    let mut integral = 0.0;
    for i in 0..nl {
        let u = (-len / 2.0 + (i as f64 + 0.5) * hl) / 100.0;
        for j in 0..nw {
            let v = (-wid / 2.0 + (j as f64 + 0.5) * hw) / 100.0;
            integral += field.emission_at(sensor.x + c * u - s * v, sensor.y + s * u + c * v);
        }
    }
    cfg.efficiency * integral * hl * hw + cfg.background_cps
}

pub fn true_count_rate(sensor: &Pose2D, field: &SourceField, cfg: &DetectorConfig) -> f64 {
    true_count_rate_with_step(sensor, field, cfg, QUADRATURE_STEP_CM)
}

fn draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as u64
}

/// One simulated reading: a Poisson draw with mean `true rate · dwell`.
pub fn simulate_measurement(
    sensor: &Pose2D,
    field: &SourceField,
    cfg: &DetectorConfig,
    dwell: f64,
    seed: u64,
) -> Result<u64> {
    if !(dwell > 0.0) {
        return Err(Error::Config(format!("dwell must be positive, got {dwell}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(draw(&mut rng, true_count_rate(sensor, field, cfg) * dwell))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Clean,
    Contaminated,
    NotSurveyed,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Clean => "CLEAN",
            Verdict::Contaminated => "CONTAMINATED",
            Verdict::NotSurveyed => "NOT_SURVEYED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CLEAN" => Ok(Verdict::Clean),
            "CONTAMINATED" => Ok(Verdict::Contaminated),
            "NOT_SURVEYED" => Ok(Verdict::NotSurveyed),
            other => Err(Error::Config(format!("unknown verdict `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatCell {
    /// Highest measured rate over the visits, counts/s.
    pub rate: Option<f64>,
    /// Total time under the detector, s.
    pub dwell: f64,
    pub verdict: Verdict,
}

impl HeatCell {
    pub(crate) const UNSURVEYED: HeatCell = HeatCell { rate: None, dwell: 0.0, verdict: Verdict::NotSurveyed };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyMetadata {
    pub seed: u64,
    pub detector: DetectorConfig,
    pub plan_hash: String,
    pub count_threshold: f64,
    /// Caller supplied; left empty for reproducible output.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyHeatmap {
    pub grid: GridSpec,
    /// Row-major.
    pub cells: Vec<HeatCell>,
    /// Absent for heat maps read back from CSV.
    pub metadata: Option<SurveyMetadata>,
}

impl SurveyHeatmap {
    pub fn cell(&self, c: CellIndex) -> &HeatCell {
        &self.cells[self.grid.linear(c)]
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.cells.iter().filter(|c| c.verdict == v).count()
    }
}

/// Stable digest of a plan's steps.
pub fn plan_hash(plan: &CoveragePlan) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(crate::io::plan_csv(plan).as_bytes());
    hex::encode(&h.finalize()[..8])
}

/// Replays the plan with one reading per step. Each reading's rate is
/// assigned to every cell of that step's footprint; a cell keeps the highest
/// rate it saw.
pub fn run_survey(plan: &CoveragePlan, field: &SourceField, cfg: &DetectorConfig, seed: u64) -> Result<SurveyHeatmap> {
    cfg.validate()?;
    field.validate()?;
    let grid = plan.grid;
    let ct = count_threshold(cfg);
    let dwell_len = cfg.length_cm / 100.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = vec![HeatCell::UNSURVEYED; grid.cell_count()];
    for (k, step) in plan.steps.iter().enumerate() {
        if !(step.velocity > 0.0) {
            return Err(Error::Config(format!("plan step {k} has non-positive velocity")));
        }
        let dwell = dwell_len / step.velocity;
        let counts = draw(&mut rng, true_count_rate(&step.sensor, field, cfg) * dwell);
        let rate = counts as f64 / dwell;
        for c in &step.footprint {
            let cell = &mut cells[grid.linear(*c)];
            cell.dwell += dwell;
            cell.rate = Some(cell.rate.map_or(rate, |r| r.max(rate)));
        }
    }
    for cell in &mut cells {
        if let Some(r) = cell.rate {
            cell.verdict = if r > ct { Verdict::Contaminated } else { Verdict::Clean };
        }
    }
    Ok(SurveyHeatmap {
        grid,
        cells,
        metadata: Some(SurveyMetadata {
            seed,
            detector: *cfg,
            plan_hash: plan_hash(plan),
            count_threshold: ct,
            timestamp: None,
        }),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellChange {
    pub cell: CellIndex,
    pub before: Verdict,
    pub after: Verdict,
    /// `after − before` when both surveys measured the cell.
    pub rate_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapDiff {
    pub cells: Vec<CellChange>,
    pub transitions: BTreeMap<(Verdict, Verdict), usize>,
}

impl HeatmapDiff {
    pub fn transitions_between(&self, before: Verdict, after: Verdict) -> usize {
        self.transitions.get(&(before, after)).copied().unwrap_or(0)
    }

    /// Cells whose verdict changed.
    pub fn changed(&self) -> impl Iterator<Item = &CellChange> {
        self.cells.iter().filter(|c| c.before != c.after)
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        for ((a, b), n) in &self.transitions {
            let _ = writeln!(s, "transition.{a}->{b} = {n}");
        }
        let max_delta = self.cells.iter().filter_map(|c| c.rate_delta).fold(0.0f64, |m, d| m.max(d.abs()));
        let _ = writeln!(s, "changed_cells = {}", self.changed().count());
        let _ = writeln!(s, "max_abs_rate_delta_cps = {max_delta:.6}");
        for c in self.changed() {
            let _ = writeln!(s, "change.{}:{} = {} -> {}", c.cell.x, c.cell.y, c.before, c.after);
        }
        s
    }
}

pub fn compare_heatmaps(a: &SurveyHeatmap, b: &SurveyHeatmap) -> Result<HeatmapDiff> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    let mut cells = Vec::with_capacity(a.cells.len());
    let mut transitions = BTreeMap::new();
    for (k, (ca, cb)) in a.cells.iter().zip(&b.cells).enumerate() {
        let rate_delta = match (ca.rate, cb.rate) {
            (Some(x), Some(y)) => Some(y - x),
            _ => None,
        };
        *transitions.entry((ca.verdict, cb.verdict)).or_insert(0) += 1;
        cells.push(CellChange { cell: a.grid.cell_at(k), before: ca.verdict, after: cb.verdict, rate_delta });
    }
    Ok(HeatmapDiff { cells, transitions })
}
