//! Pipeline steps behind the `disip` command: scenario generation, coverage
//! planning, mission planning and batch experiments.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use disip_core::coverage::{coverable_faces, plan_coverage, CoveragePath};
use disip_core::io::{self, PlanCheck, RunReport, RunSummary, RunTiming};
use disip_core::model::MissionConfig;
use disip_core::planner::{IterationRecord, Planner};
use disip_core::scenario::{builtin_archetypes, generate, Archetype, Scenario, DEFAULT_MARGIN};
use disip_core::Error;

pub const PLAN_FILE: &str = "plan.json";
pub const REPORT_FILE: &str = "report.json";
pub const PROTOCOL_SCHEMA: &str = "disip.protocol/1";

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Internal = 1,
    Usage = 2,
    Infeasible = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: ExitKind::Usage,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::NothingCoverable(_) | Error::NoFeasibleIteration(_) | Error::PlacementFailed { .. } => {
                ExitKind::Infeasible
            }
            Error::PlanValidation(_) | Error::Io(_) | Error::Csv(_) => ExitKind::Internal,
            _ => ExitKind::Usage,
        };
        Failure {
            kind,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Picks archetypes by name; an empty selection means all of them.
pub fn select_archetypes(names: &[String]) -> CliResult<Vec<Archetype>> {
    let all = builtin_archetypes();
    if names.is_empty() {
        return Ok(all);
    }
    names
        .iter()
        .map(|n| {
            all.iter().find(|a| &a.name == n).cloned().ok_or_else(|| {
                let known: Vec<&str> = all.iter().map(|a| a.name.as_str()).collect();
                Failure::usage(format!("unknown archetype '{n}' (known: {})", known.join(", ")))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenOptions {
    pub count: usize,
    pub bounds: [f64; 3],
    #[serde(default = "default_margin")]
    pub margin: f64,
    pub seed: u64,
    #[serde(default)]
    pub archetypes: Vec<String>,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

pub fn gen_scenario(opts: &GenOptions) -> CliResult<Scenario> {
    let archetypes = select_archetypes(&opts.archetypes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    Ok(generate(&archetypes, opts.count, opts.bounds, opts.margin, &mut rng)?)
}

/// Plans a full-coverage path for every structure and checks that each path
/// covers exactly the structure's coverable faces.
pub fn cover_scenario(scenario: &Scenario, seed: u64) -> CliResult<Vec<CoveragePath>> {
    scenario
        .structures
        .iter()
        .map(|s| {
            let path = plan_coverage(s, &scenario.sensor, &scenario.vehicle, seed)?;
            let expected: BTreeSet<usize> = coverable_faces(&s.mesh, &scenario.sensor).into_iter().collect();
            if path.covered_union() != expected {
                return Err(Failure {
                    kind: ExitKind::Internal,
                    message: format!("coverage path for '{}' misses coverable faces", s.id),
                });
            }
            Ok(path)
        })
        .collect()
}

pub fn write_coverage_dir(dir: &Path, paths: &[CoveragePath]) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(Error::from)?;
    for p in paths {
        io::write_coverage(&dir.join(io::coverage_file_name(&p.structure_id)), p)?;
    }
    Ok(())
}

/// Loads one coverage file per structure, returning the paths and any
/// re-timing warnings.
pub fn read_coverage_dir(dir: &Path, scenario: &Scenario) -> CliResult<(Vec<CoveragePath>, Vec<String>)> {
    let mut paths = Vec::with_capacity(scenario.structures.len());
    let mut warnings = Vec::new();
    for s in &scenario.structures {
        let file = dir.join(io::coverage_file_name(&s.id));
        if !file.is_file() {
            return Err(Failure::usage(format!(
                "missing coverage file {} for '{}'",
                file.display(),
                s.id
            )));
        }
        let ingested = io::read_coverage(&file, s, &scenario.vehicle)?;
        warnings.extend(ingested.warnings);
        paths.push(ingested.path);
    }
    Ok((paths, warnings))
}

/// Mission parameters that replace the scenario's own when set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionOverrides {
    pub t_max: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub closed_route: Option<bool>,
    pub inclusion_probability: Option<f64>,
}

impl MissionOverrides {
    pub fn apply(&self, base: MissionConfig) -> CliResult<MissionConfig> {
        let m = MissionConfig {
            t_max: self.t_max.unwrap_or(base.t_max),
            iterations: self.iterations.unwrap_or(base.iterations),
            rng_seed: self.seed.unwrap_or(base.rng_seed),
            closed_route: self.closed_route.unwrap_or(base.closed_route),
            inclusion_probability: self.inclusion_probability.unwrap_or(base.inclusion_probability),
        };
        Ok(m.validated()?)
    }
}

pub struct PlanRun {
    pub mission: MissionConfig,
    pub report: RunReport,
    pub history: Vec<IterationRecord>,
}

/// Runs the planner and writes the plan, the report and the plot tables
/// into `out`, then re-validates the written plan.
pub fn plan_to_dir(
    scenario: &Scenario,
    paths: &[CoveragePath],
    mission: MissionConfig,
    out: &Path,
) -> CliResult<(PlanRun, PlanCheck)> {
    let run = plan_scenario(scenario, paths, mission)?;
    fs::create_dir_all(out).map_err(Error::from)?;
    let plan_file = out.join(PLAN_FILE);
    io::write_plan(&plan_file, &run.0.best, &run.0.path, mission.t_max)?;
    io::write_report(&out.join(REPORT_FILE), &run.1.report)?;
    io::emit_plot_data(&run.1.report, &run.1.history, out)?;
    let check = io::validate_plan(&io::read_plan(&plan_file)?, scenario)?;
    Ok((run.1, check))
}

fn plan_scenario(
    scenario: &Scenario,
    paths: &[CoveragePath],
    mission: MissionConfig,
) -> CliResult<(disip_core::planner::RunOutput, PlanRun)> {
    let planner = Planner::new(scenario, paths)?;
    let output = planner.run(&mission)?;
    let report = io::build_report(scenario, &planner, &output, mission.t_max);
    let history = output.history.clone();
    Ok((
        output,
        PlanRun {
            mission,
            report,
            history,
        },
    ))
}

/// A batch experiment: `runs` scenarios for every entry of `counts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    pub schema: String,
    pub counts: Vec<usize>,
    pub runs: usize,
    /// Run `r` uses seed `seed + r` for generation, coverage and planning.
    #[serde(default)]
    pub seed: u64,
    pub bounds: [f64; 3],
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub archetypes: Vec<String>,
    #[serde(default)]
    pub mission: MissionOverrides,
}

impl Protocol {
    pub fn read(path: &Path) -> CliResult<Protocol> {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let p: Protocol = io::from_json(&text)?;
        if p.schema != PROTOCOL_SCHEMA {
            return Err(Failure::usage(format!(
                "protocol schema '{}' is not '{PROTOCOL_SCHEMA}'",
                p.schema
            )));
        }
        Ok(p)
    }

    /// `(count, seed)` for every run, in protocol order.
    pub fn jobs(&self) -> Vec<(usize, u64)> {
        self.counts
            .iter()
            .flat_map(|&c| (0..self.runs as u64).map(move |r| (c, self.seed + r)))
            .collect()
    }
}

pub struct BatchOutput {
    pub runs: Vec<RunSummary>,
    pub timing: Vec<RunTiming>,
}

/// Generates, covers and plans every run of the protocol in parallel.
/// Results keep protocol order.
pub fn run_batch(protocol: &Protocol) -> CliResult<BatchOutput> {
    let jobs = protocol.jobs();
    if jobs.is_empty() {
        return Err(Failure::usage("protocol has no runs"));
    }
    select_archetypes(&protocol.archetypes)?;
    let results: Vec<CliResult<(RunSummary, RunTiming)>> = jobs
        .par_iter()
        .map(|&(count, seed)| {
            let scenario = gen_scenario(&GenOptions {
                count,
                bounds: protocol.bounds,
                margin: protocol.margin,
                seed,
                archetypes: protocol.archetypes.clone(),
            })?;
            let paths = cover_scenario(&scenario, seed)?;
            let overrides = MissionOverrides {
                seed: protocol.mission.seed.or(Some(seed)),
                ..protocol.mission.clone()
            };
            let mission = overrides.apply(scenario.mission)?;
            let (_, run) = plan_scenario(&scenario, &paths, mission).map_err(|f| Failure {
                kind: f.kind,
                message: format!("run with {count} structures, seed {seed}: {}", f.message),
            })?;
            Ok((
                RunSummary::new(count, seed, &run.report),
                RunTiming::new(count, seed, &run.history),
            ))
        })
        .collect();
    let mut out = BatchOutput {
        runs: Vec::with_capacity(results.len()),
        timing: Vec::with_capacity(results.len()),
    };
    for r in results {
        let (summary, timing) = r?;
        out.runs.push(summary);
        out.timing.push(timing);
    }
    Ok(out)
}

/// Writes the per-run table, the coverage-vs-count aggregate and the
/// wall-clock profile into `dir`.
pub fn write_batch(dir: &Path, batch: &BatchOutput) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(Error::from)?;
    let files = [
        dir.join(io::RUNS_CSV),
        dir.join(io::COVERAGE_VS_COUNT_CSV),
        dir.join(io::BATCH_TIMING_CSV),
    ];
    io::write_table(&files[0], &batch.runs)?;
    io::write_table(&files[1], &io::aggregate_runs(&batch.runs))?;
    io::write_table(&files[2], &io::aggregate_timing(&batch.timing))?;
    Ok(files.to_vec())
}
