//! The randomized three-step planner.
//!
//! Every iteration is an independent restart: sample a subset of
//! structures and an entry point on each coverage path, tour the subset,
//! split what is left of the time budget into inspection times, slice the
//! coverage paths accordingly and score the covered area. The best
//! iteration by total reward wins (earliest on ties) and is assembled into
//! a single timed path.

pub mod assembly;
pub mod sampling;
pub mod subpath;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use assembly::{assemble_path, AssembledPath, PathPoint, SegmentLabel};
pub use sampling::{assign_inspection_times, sample_structure_subset, water_fill};
pub use subpath::{compute_reward, extract_subpath, Reward, SubPath, TimedPose};

use crate::coverage::CoveragePath;
use crate::error::{Error, Result};
use crate::model::{MissionConfig, Pose};
use crate::scenario::Scenario;
use crate::tsp::{build_cost_matrix, solve_tsp, Tour};
use subpath::reward_with_denominator;

/// Rounds of proportional shrinking allowed after the exit-pose refinement.
const MAX_REPAIR_ROUNDS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    /// Index into the scenario's structures.
    pub structure: usize,
    pub structure_id: String,
    /// Seconds assigned to this structure.
    pub inspection_time: f64,
    pub subpath: SubPath,
    pub reward: Reward,
}

/// One feasible iteration: which structures, in which order, for how long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPlan {
    pub iteration: usize,
    /// Sampled structure indices, ascending.
    pub subset: Vec<usize>,
    /// Tour over positions in `subset`.
    pub tour: Tour,
    /// In tour order.
    pub visits: Vec<Visit>,
    pub closed_route: bool,
    pub total_reward: f64,
    /// Inspection plus travel, seconds.
    pub total_time: f64,
}

impl SampledPlan {
    pub fn inspection_time(&self) -> f64 {
        self.visits.iter().map(|v| v.subpath.duration).sum()
    }
}

/// Wall-clock seconds spent in each step of an iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepTimings {
    pub subset_sampling: f64,
    pub cost_matrix: f64,
    pub tsp: f64,
    pub time_sampling: f64,
    pub reward: f64,
}

impl StepTimings {
    pub fn sum(&self) -> f64 {
        self.subset_sampling + self.cost_matrix + self.tsp + self.time_sampling + self.reward
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Discard {
    /// Travel alone does not fit the budget.
    TourOverBudget { tour_cost: f64 },
    /// Shrinking inspection times did not restore feasibility.
    RepairFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Feasible(SampledPlan),
    Discarded(Discard),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    pub outcome: Outcome,
    pub timings: StepTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub feasible: bool,
    pub total_reward: f64,
    pub total_time: f64,
    pub tour_cost: f64,
    pub sampled_count: usize,
    pub timings: StepTimings,
    /// Whole-iteration wall clock, seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub best: SampledPlan,
    pub path: AssembledPath,
    pub history: Vec<IterationRecord>,
}

/// RNG stream for one iteration, independent of every other iteration.
pub fn iteration_rng(seed: u64, iteration: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);
    rng
}

/// A scenario paired with one coverage path per structure.
pub struct Planner<'a> {
    scenario: &'a Scenario,
    paths: &'a [CoveragePath],
    coverable_area: Vec<f64>,
}

impl<'a> Planner<'a> {
    pub fn new(scenario: &'a Scenario, paths: &'a [CoveragePath]) -> Result<Self> {
        if scenario.structures.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        if paths.len() != scenario.structures.len() {
            return Err(Error::invalid(
                "coverage_paths",
                format!("{} paths for {} structures", paths.len(), scenario.structures.len()),
            ));
        }
        for (s, p) in scenario.structures.iter().zip(paths) {
            if s.id != p.structure_id {
                return Err(Error::invalid(
                    "coverage_paths",
                    format!("path for '{}' given for structure '{}'", p.structure_id, s.id),
                ));
            }
            if p.is_empty() {
                return Err(Error::InvalidCoveragePath {
                    id: s.id.clone(),
                    reason: "no points".into(),
                });
            }
            if let Some(&bad) = p.covered_union().iter().find(|&&f| f >= s.mesh.face_count()) {
                return Err(Error::FaceIndex {
                    index: bad,
                    count: s.mesh.face_count(),
                });
            }
        }
        let coverable_area = scenario
            .structures
            .iter()
            .zip(paths)
            .map(|(s, p)| s.mesh.area_of(&p.covered_union()))
            .collect();
        Ok(Planner {
            scenario,
            paths,
            coverable_area,
        })
    }

    /// Largest reward any plan could collect: every structure fully covered.
    pub fn reward_upper_bound(&self) -> f64 {
        self.scenario
            .structures
            .iter()
            .zip(&self.coverable_area)
            .map(|(s, a)| s.weight * a)
            .sum()
    }

    pub fn coverable_area(&self, structure: usize) -> f64 {
        self.coverable_area[structure]
    }

    pub fn run_iteration(
        &self,
        mission: &MissionConfig,
        iteration: usize,
        rng: &mut impl Rng,
    ) -> Result<IterationResult> {
        let vehicle = &self.scenario.vehicle;
        let closed = mission.closed_route;
        let mut timings = StepTimings::default();

        let clock = Instant::now();
        let subset = sample_structure_subset(
            self.scenario.structures.len(),
            mission.inclusion_probability,
            rng,
        )?;
        let entries: Vec<usize> = subset
            .iter()
            .map(|&s| rng.gen_range(0..self.paths[s].len()))
            .collect();
        let entry_poses: Vec<Pose> = subset
            .iter()
            .zip(&entries)
            .map(|(&s, &a)| self.paths[s].points[a].pose)
            .collect();
        timings.subset_sampling = clock.elapsed().as_secs_f64();

        // First pass: exits not known yet, assume each subpath ends where it starts.
        let clock = Instant::now();
        let nodes: Vec<(Pose, Pose)> = entry_poses.iter().map(|p| (*p, *p)).collect();
        let matrix = build_cost_matrix(&nodes, vehicle);
        timings.cost_matrix += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let tour = solve_tsp(&matrix, closed, rng.gen());
        timings.tsp += clock.elapsed().as_secs_f64();
        if tour.cost > mission.t_max {
            return Ok(IterationResult {
                outcome: Outcome::Discarded(Discard::TourOverBudget {
                    tour_cost: tour.cost,
                }),
                timings,
            });
        }

        let clock = Instant::now();
        let full: Vec<f64> = subset.iter().map(|&s| self.paths[s].total_duration).collect();
        let times = assign_inspection_times(&full, mission.t_max - tour.cost, rng)?;
        let mut subpaths = self.slices(&subset, &entries, &times)?;
        timings.time_sampling += clock.elapsed().as_secs_f64();

        // Refinement: rebuild the matrix with the realized exits and re-solve once.
        let clock = Instant::now();
        let matrix = build_cost_matrix(&realized_nodes(&subpaths), vehicle);
        timings.cost_matrix += clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let mut tour = solve_tsp(&matrix, closed, rng.gen());
        timings.tsp += clock.elapsed().as_secs_f64();

        // Exits moved, so travel may have grown: shrink inspection times with
        // the tour order held fixed until the budget holds.
        let clock = Instant::now();
        let mut feasible = false;
        for _ in 0..MAX_REPAIR_ROUNDS {
            let used: f64 = subpaths.iter().map(|s| s.duration).sum();
            if used + tour.cost <= mission.t_max {
                feasible = true;
                break;
            }
            let budget = mission.t_max - tour.cost;
            if budget < 0.0 {
                timings.time_sampling += clock.elapsed().as_secs_f64();
                return Ok(IterationResult {
                    outcome: Outcome::Discarded(Discard::TourOverBudget {
                        tour_cost: tour.cost,
                    }),
                    timings,
                });
            }
            let scale = budget / used * (1.0 - 1e-12);
            let shrunk: Vec<f64> = subpaths.iter().map(|s| s.duration * scale).collect();
            subpaths = self.slices(&subset, &entries, &shrunk)?;
            let matrix = build_cost_matrix(&realized_nodes(&subpaths), vehicle);
            tour = Tour::new(tour.order, &matrix, closed);
        }
        timings.time_sampling += clock.elapsed().as_secs_f64();
        if !feasible {
            return Ok(IterationResult {
                outcome: Outcome::Discarded(Discard::RepairFailed),
                timings,
            });
        }

        let clock = Instant::now();
        let mut visits = Vec::with_capacity(subset.len());
        for &pos in &tour.order {
            let s = subset[pos];
            let structure = &self.scenario.structures[s];
            let subpath = subpaths[pos].clone();
            visits.push(Visit {
                structure: s,
                structure_id: structure.id.clone(),
                inspection_time: times[pos],
                reward: reward_with_denominator(structure, self.coverable_area[s], &subpath),
                subpath,
            });
        }
        let total_reward = visits.iter().map(|v| v.reward.reward).sum();
        let inspection: f64 = visits.iter().map(|v| v.subpath.duration).sum();
        timings.reward = clock.elapsed().as_secs_f64();

        let total_time = inspection + tour.cost;
        Ok(IterationResult {
            outcome: Outcome::Feasible(SampledPlan {
                iteration,
                subset,
                tour,
                visits,
                closed_route: closed,
                total_reward,
                total_time,
            }),
            timings,
        })
    }

    fn slices(&self, subset: &[usize], entries: &[usize], times: &[f64]) -> Result<Vec<SubPath>> {
        subset
            .iter()
            .zip(entries)
            .zip(times)
            .map(|((&s, &a), &t)| extract_subpath(&self.paths[s], a, t.min(self.paths[s].total_duration)))
            .collect()
    }

    /// Runs `mission.iterations` independent iterations and assembles the best.
    pub fn run(&self, mission: &MissionConfig) -> Result<RunOutput> {
        let mission = mission.validated()?;
        let mut best: Option<SampledPlan> = None;
        let mut history = Vec::with_capacity(mission.iterations);
        for k in 0..mission.iterations {
            let clock = Instant::now();
            let mut rng = iteration_rng(mission.rng_seed, k);
            let result = self.run_iteration(&mission, k, &mut rng)?;
            let wall_time = clock.elapsed().as_secs_f64();
            let record = match &result.outcome {
                Outcome::Feasible(plan) => IterationRecord {
                    iteration: k,
                    feasible: true,
                    total_reward: plan.total_reward,
                    total_time: plan.total_time,
                    tour_cost: plan.tour.cost,
                    sampled_count: plan.subset.len(),
                    timings: result.timings,
                    wall_time,
                },
                Outcome::Discarded(d) => IterationRecord {
                    iteration: k,
                    feasible: false,
                    total_reward: 0.0,
                    total_time: 0.0,
                    tour_cost: match d {
                        Discard::TourOverBudget { tour_cost } => *tour_cost,
                        Discard::RepairFailed => 0.0,
                    },
                    sampled_count: 0,
                    timings: result.timings,
                    wall_time,
                },
            };
            history.push(record);
            if let Outcome::Feasible(plan) = result.outcome {
                if best.as_ref().is_none_or(|b| plan.total_reward > b.total_reward) {
                    best = Some(plan);
                }
            }
        }
        let best = best.ok_or(Error::NoFeasibleIteration(mission.iterations))?;
        let path = assemble_path(&best, &self.scenario.vehicle);
        Ok(RunOutput {
            best,
            path,
            history,
        })
    }
}

fn realized_nodes(subpaths: &[SubPath]) -> Vec<(Pose, Pose)> {
    subpaths.iter().map(|s| (s.entry_pose(), s.exit_pose())).collect()
}

/// One iteration with the scenario's vehicle and the given mission settings.
pub fn run_iteration(
    scenario: &Scenario,
    paths: &[CoveragePath],
    mission: &MissionConfig,
    rng: &mut impl Rng,
) -> Result<IterationResult> {
    Planner::new(scenario, paths)?.run_iteration(mission, 0, rng)
}

pub fn run(scenario: &Scenario, paths: &[CoveragePath], mission: &MissionConfig) -> Result<RunOutput> {
    Planner::new(scenario, paths)?.run(mission)
}
