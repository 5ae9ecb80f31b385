//! File formats and run statistics.
//!
//! Every artifact is pretty-printed JSON with a versioned `schema` tag and
//! SI units throughout:
//!
//! | file            | schema                | body                                  |
//! |-----------------|-----------------------|---------------------------------------|
//! | scenario        | `disip.scenario/1`    | `scenario`: structures and configs    |
//! | coverage path   | `disip.coverage/1`    | `structure_id`, `is_cycle`, `total_duration`, `records` |
//! | plan            | `disip.plan/1`        | `t_max`, `plan`, `path`               |
//! | report          | `disip.report/1`      | `report`                              |
//!
//! Coverage records are `{x, y, z, psi, cumulative_time, covered_face_indices}`
//! with an optional `generating_face`. Plot data is written as CSV.
//!
//! Wall-clock timings only ever go to the CSV tables, so plan and report
//! files are byte-identical across reruns with the same inputs.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::coverage::{ingest_coverage_path, CoveragePath, CoverageRecord, IngestedPath};
use crate::error::{Error, Result};
use crate::model::{Structure, VehicleConfig};
use crate::motion::segment_time;
use crate::planner::{AssembledPath, IterationRecord, Planner, RunOutput, SampledPlan, SegmentLabel};
use crate::scenario::Scenario;

pub const SCENARIO_SCHEMA: &str = "disip.scenario/1";
pub const COVERAGE_SCHEMA: &str = "disip.coverage/1";
pub const PLAN_SCHEMA: &str = "disip.plan/1";
pub const REPORT_SCHEMA: &str = "disip.report/1";

/// Tolerance for re-timing checks on stored paths, seconds.
pub const RETIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema: String,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageFile {
    pub schema: String,
    pub structure_id: String,
    pub is_cycle: bool,
    pub total_duration: f64,
    pub records: Vec<CoverageRecord>,
}

impl CoverageFile {
    pub fn from_path(path: &CoveragePath) -> Self {
        CoverageFile {
            schema: COVERAGE_SCHEMA.into(),
            structure_id: path.structure_id.clone(),
            is_cycle: path.is_cycle,
            total_duration: path.total_duration,
            records: CoverageRecord::from_path(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub schema: String,
    pub t_max: f64,
    pub plan: SampledPlan,
    pub path: AssembledPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema: String,
    pub report: RunReport,
}

trait Tagged {
    const SCHEMA: &'static str;
    fn schema(&self) -> &str;
}

macro_rules! tagged {
    ($t:ty, $s:expr) => {
        impl Tagged for $t {
            const SCHEMA: &'static str = $s;
            fn schema(&self) -> &str {
                &self.schema
            }
        }
    };
}

tagged!(ScenarioFile, SCENARIO_SCHEMA);
tagged!(CoverageFile, COVERAGE_SCHEMA);
tagged!(PlanFile, PLAN_SCHEMA);
tagged!(ReportFile, REPORT_SCHEMA);

/// Parses JSON, reporting failures with the path of the offending field.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

fn read_tagged<T: DeserializeOwned + Tagged>(path: &Path) -> Result<T> {
    let value: T = from_json(&fs::read_to_string(path)?)?;
    if value.schema() != T::SCHEMA {
        return Err(Error::Schema {
            path: "schema".into(),
            message: format!("expected '{}', found '{}'", T::SCHEMA, value.schema()),
        });
    }
    Ok(value)
}

pub fn write_scenario(path: &Path, scenario: &Scenario) -> Result<()> {
    let file = ScenarioFile {
        schema: SCENARIO_SCHEMA.into(),
        scenario: scenario.clone(),
    };
    Ok(fs::write(path, to_json(&file))?)
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    Ok(read_tagged::<ScenarioFile>(path)?.scenario)
}

pub fn write_coverage(path: &Path, coverage: &CoveragePath) -> Result<()> {
    Ok(fs::write(path, to_json(&CoverageFile::from_path(coverage)))?)
}

pub fn read_coverage_file(path: &Path) -> Result<CoverageFile> {
    read_tagged(path)
}

/// Loads a coverage file for `structure`, validating and re-timing it.
pub fn read_coverage(path: &Path, structure: &Structure, vehicle: &VehicleConfig) -> Result<IngestedPath> {
    let file = read_coverage_file(path)?;
    if file.structure_id != structure.id {
        return Err(Error::Schema {
            path: "structure_id".into(),
            message: format!("file is for '{}', expected '{}'", file.structure_id, structure.id),
        });
    }
    ingest_coverage_path(structure, &file.records, file.is_cycle, vehicle)
}

pub fn coverage_file_name(structure_id: &str) -> String {
    format!("coverage_{structure_id}.json")
}

pub fn write_plan(path: &Path, plan: &SampledPlan, assembled: &AssembledPath, t_max: f64) -> Result<()> {
    let file = PlanFile {
        schema: PLAN_SCHEMA.into(),
        t_max,
        plan: plan.clone(),
        path: assembled.clone(),
    };
    Ok(fs::write(path, to_json(&file))?)
}

pub fn read_plan(path: &Path) -> Result<PlanFile> {
    read_tagged(path)
}

pub fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    let file = ReportFile {
        schema: REPORT_SCHEMA.into(),
        report: report.clone(),
    };
    Ok(fs::write(path, to_json(&file))?)
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    Ok(read_tagged::<ReportFile>(path)?.report)
}

/// Outcome of re-timing a stored plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanCheck {
    /// Duration recomputed from the path geometry, seconds.
    pub retimed_duration: f64,
    /// Largest per-segment deviation from the stored times, seconds.
    pub max_segment_error: f64,
}

/// Re-times the stored path with the scenario's vehicle and checks it
/// against the stored durations and the mission budget.
pub fn validate_plan(file: &PlanFile, scenario: &Scenario) -> Result<PlanCheck> {
    let v = &scenario.vehicle;
    let points = &file.path.points;
    if points.is_empty() {
        return Err(Error::PlanValidation("empty path".into()));
    }
    if points[0].time != 0.0 {
        return Err(Error::PlanValidation("path does not start at t = 0".into()));
    }
    let mut retimed = 0.0;
    let mut max_err: f64 = 0.0;
    for (k, w) in points.windows(2).enumerate() {
        let speed = match &w[1].segment {
            SegmentLabel::Transit => v.v_travel,
            SegmentLabel::Inspect { structure_id } => {
                if !scenario.structures.iter().any(|s| &s.id == structure_id) {
                    return Err(Error::PlanValidation(format!("unknown structure '{structure_id}'")));
                }
                v.v_inspect
            }
            SegmentLabel::Start => {
                return Err(Error::PlanValidation(format!("second start label at point {}", k + 1)))
            }
        };
        let seg = segment_time(&w[0].pose, &w[1].pose, speed, v.yaw_rate_max);
        retimed += seg;
        max_err = max_err.max(((w[1].time - w[0].time) - seg).abs());
    }
    if max_err > RETIME_TOLERANCE {
        return Err(Error::PlanValidation(format!(
            "stored segment times deviate by {max_err:e} s"
        )));
    }
    let checks = [
        ("path total", file.path.total_duration),
        ("plan total", file.plan.total_time),
    ];
    for (what, stored) in checks {
        if (stored - retimed).abs() > RETIME_TOLERANCE {
            return Err(Error::PlanValidation(format!(
                "{what} {stored} s differs from re-timed {retimed} s"
            )));
        }
    }
    if retimed > file.t_max + RETIME_TOLERANCE {
        return Err(Error::PlanValidation(format!(
            "re-timed duration {retimed} s exceeds budget {} s",
            file.t_max
        )));
    }
    Ok(PlanCheck {
        retimed_duration: retimed,
        max_segment_error: max_err,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSummary {
    pub id: String,
    pub weight: f64,
    pub visited: bool,
    /// Seconds spent on the structure's subpath.
    pub inspection_time: f64,
    /// m²
    pub covered_area: f64,
    /// m²
    pub coverable_area: f64,
    pub coverage_ratio: f64,
    pub reward: f64,
}

/// Per-iteration figures that do not depend on wall-clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub feasible: bool,
    pub total_reward: f64,
    pub total_time: f64,
    pub tour_cost: f64,
    pub sampled_count: usize,
}

impl From<&IterationRecord> for IterationSummary {
    fn from(r: &IterationRecord) -> Self {
        IterationSummary {
            iteration: r.iteration,
            feasible: r.feasible,
            total_reward: r.total_reward,
            total_time: r.total_time,
            tour_cost: r.tour_cost,
            sampled_count: r.sampled_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub best_iteration: usize,
    pub total_reward: f64,
    /// Seconds.
    pub total_time: f64,
    pub tour_cost: f64,
    pub t_max: f64,
    pub structures: Vec<StructureSummary>,
    pub visited_percent: f64,
    /// Collected reward over the reward of covering every structure fully.
    pub reward_percent: f64,
    /// Covered area over coverable area, summed over all structures.
    pub coverage_percent: f64,
    /// Mean distance over all pairs of structures, meters.
    pub mean_pairwise_distance: f64,
    pub iterations: Vec<IterationSummary>,
}

fn percent(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        (100.0 * part / whole).clamp(0.0, 100.0)
    } else {
        0.0
    }
}

pub fn build_report(scenario: &Scenario, planner: &Planner, output: &RunOutput, t_max: f64) -> RunReport {
    let best = &output.best;
    let structures: Vec<StructureSummary> = scenario
        .structures
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let coverable_area = planner.coverable_area(i);
            match best.visits.iter().find(|v| v.structure == i) {
                Some(v) => StructureSummary {
                    id: s.id.clone(),
                    weight: s.weight,
                    visited: true,
                    inspection_time: v.subpath.duration,
                    covered_area: v.reward.covered_area,
                    coverable_area,
                    coverage_ratio: v.reward.coverage_ratio,
                    reward: v.reward.reward,
                },
                None => StructureSummary {
                    id: s.id.clone(),
                    weight: s.weight,
                    visited: false,
                    inspection_time: 0.0,
                    covered_area: 0.0,
                    coverable_area,
                    coverage_ratio: 0.0,
                    reward: 0.0,
                },
            }
        })
        .collect();
    let n = structures.len() as f64;
    let visited = structures.iter().filter(|s| s.visited).count() as f64;
    let covered: f64 = structures.iter().map(|s| s.covered_area).sum();
    let coverable: f64 = structures.iter().map(|s| s.coverable_area).sum();
    RunReport {
        best_iteration: best.iteration,
        total_reward: best.total_reward,
        total_time: best.total_time,
        tour_cost: best.tour.cost,
        t_max,
        visited_percent: percent(visited, n),
        reward_percent: percent(best.total_reward, planner.reward_upper_bound()),
        coverage_percent: percent(covered, coverable),
        mean_pairwise_distance: scenario.mean_pairwise_distance(),
        structures,
        iterations: output.history.iter().map(IterationSummary::from).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub iteration: usize,
    pub feasible: bool,
    pub subset_sampling: f64,
    pub cost_matrix: f64,
    pub tsp: f64,
    pub time_sampling: f64,
    pub reward: f64,
    pub step_sum: f64,
    pub wall_time: f64,
    pub total_reward: f64,
    pub best_so_far: f64,
}

/// Seconds rounded to microseconds.
fn micros(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

pub fn timing_rows(history: &[IterationRecord]) -> Vec<TimingRow> {
    let mut best = 0.0f64;
    history
        .iter()
        .map(|r| {
            best = best.max(r.total_reward);
            let t = &r.timings;
            TimingRow {
                iteration: r.iteration,
                feasible: r.feasible,
                subset_sampling: micros(t.subset_sampling),
                cost_matrix: micros(t.cost_matrix),
                tsp: micros(t.tsp),
                time_sampling: micros(t.time_sampling),
                reward: micros(t.reward),
                step_sum: micros(t.sum()),
                wall_time: micros(r.wall_time),
                total_reward: r.total_reward,
                best_so_far: best,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub id: String,
    pub weight: f64,
    pub visited: bool,
    pub coverage_percent: f64,
    pub reward: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub const TIMING_CSV: &str = "timing.csv";
pub const STRUCTURE_COVERAGE_CSV: &str = "structure_coverage.csv";
pub const COVERAGE_VS_COUNT_CSV: &str = "coverage_vs_count.csv";
pub const RUNS_CSV: &str = "runs.csv";
pub const BATCH_TIMING_CSV: &str = "batch_timing.csv";

/// Writes the per-iteration step times and the per-structure coverage table into `dir`.
pub fn emit_plot_data(report: &RunReport, history: &[IterationRecord], dir: &Path) -> Result<()> {
    write_csv(&dir.join(TIMING_CSV), &timing_rows(history))?;
    let coverage: Vec<CoverageRow> = report
        .structures
        .iter()
        .map(|s| CoverageRow {
            id: s.id.clone(),
            weight: s.weight,
            visited: s.visited,
            coverage_percent: 100.0 * s.coverage_ratio,
            reward: s.reward,
        })
        .collect();
    write_csv(&dir.join(STRUCTURE_COVERAGE_CSV), &coverage)
}

/// Headline numbers of one run, as aggregated by a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub structure_count: usize,
    pub seed: u64,
    pub best_iteration: usize,
    pub total_time: f64,
    pub coverage_percent: f64,
    pub reward_percent: f64,
    pub visited_percent: f64,
    pub mean_pairwise_distance: f64,
}

impl RunSummary {
    pub fn new(structure_count: usize, seed: u64, report: &RunReport) -> Self {
        RunSummary {
            structure_count,
            seed,
            best_iteration: report.best_iteration,
            total_time: report.total_time,
            coverage_percent: report.coverage_percent,
            reward_percent: report.reward_percent,
            visited_percent: report.visited_percent,
            mean_pairwise_distance: report.mean_pairwise_distance,
        }
    }
}

/// Wall-clock profile of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub structure_count: usize,
    pub seed: u64,
    /// Mean seconds per iteration.
    pub mean_iteration_time: f64,
    /// Fraction of step time spent solving tours.
    pub tsp_share: f64,
}

impl RunTiming {
    pub fn new(structure_count: usize, seed: u64, history: &[IterationRecord]) -> Self {
        let iterations = history.len().max(1) as f64;
        let wall: f64 = history.iter().map(|r| r.wall_time).sum();
        let steps: f64 = history.iter().map(|r| r.timings.sum()).sum();
        let tsp: f64 = history.iter().map(|r| r.timings.tsp).sum();
        RunTiming {
            structure_count,
            seed,
            mean_iteration_time: micros(wall / iterations),
            tsp_share: if steps > 0.0 { tsp / steps } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub structure_count: usize,
    pub runs: usize,
    pub mean_coverage_percent: f64,
    pub mean_reward_percent: f64,
    pub mean_visited_percent: f64,
    pub mean_pairwise_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchTimingRow {
    pub structure_count: usize,
    pub runs: usize,
    pub mean_iteration_time: f64,
    pub mean_tsp_share: f64,
}

/// Groups by structure count in order of first appearance.
fn grouped<T>(items: &[T], count: impl Fn(&T) -> usize) -> Vec<(usize, Vec<&T>)> {
    let mut groups: Vec<(usize, Vec<&T>)> = Vec::new();
    for item in items {
        let c = count(item);
        match groups.iter_mut().find(|(k, _)| *k == c) {
            Some((_, g)) => g.push(item),
            None => groups.push((c, vec![item])),
        }
    }
    groups
}

fn mean<T>(group: &[&T], f: impl Fn(&T) -> f64) -> f64 {
    group.iter().map(|x| f(x)).sum::<f64>() / group.len() as f64
}

/// One row per structure count, in order of first appearance.
pub fn aggregate_runs(runs: &[RunSummary]) -> Vec<BatchRow> {
    grouped(runs, |r| r.structure_count)
        .into_iter()
        .map(|(count, g)| BatchRow {
            structure_count: count,
            runs: g.len(),
            mean_coverage_percent: mean(&g, |r| r.coverage_percent),
            mean_reward_percent: mean(&g, |r| r.reward_percent),
            mean_visited_percent: mean(&g, |r| r.visited_percent),
            mean_pairwise_distance: mean(&g, |r| r.mean_pairwise_distance),
        })
        .collect()
}

pub fn aggregate_timing(runs: &[RunTiming]) -> Vec<BatchTimingRow> {
    grouped(runs, |r| r.structure_count)
        .into_iter()
        .map(|(count, g)| BatchTimingRow {
            structure_count: count,
            runs: g.len(),
            mean_iteration_time: micros(mean(&g, |r| r.mean_iteration_time)),
            mean_tsp_share: mean(&g, |r| r.tsp_share),
        })
        .collect()
}

/// Writes `rows` as a CSV table with a header line.
pub fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_csv(path, rows)
}

#[cfg(test)]
mod tests;
