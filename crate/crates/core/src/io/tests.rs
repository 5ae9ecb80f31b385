use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::coverage::plan_coverage;
use crate::model::MissionConfig;
use crate::scenario::{builtin_archetypes, generate, DEFAULT_MARGIN};

fn small_run() -> (Scenario, Vec<CoveragePath>, MissionConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scenario = generate(&builtin_archetypes(), 3, [150.0, 150.0, 50.0], DEFAULT_MARGIN, &mut rng).unwrap();
    let paths = scenario
        .structures
        .iter()
        .map(|s| plan_coverage(s, &scenario.sensor, &scenario.vehicle, 0).unwrap())
        .collect();
    let mission = MissionConfig {
        t_max: 600.0,
        iterations: 8,
        ..MissionConfig::default()
    };
    (scenario, paths, mission)
}

#[test]
fn scenario_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (scenario, _, _) = small_run();
    let file = dir.join("s.json");
    write_scenario(&file, &scenario).unwrap();
    assert_eq!(read_scenario(&file).unwrap(), scenario);
}

#[test]
fn coverage_round_trip_keeps_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (scenario, paths, _) = small_run();
    let s = &scenario.structures[0];
    let file = dir.join(coverage_file_name(&s.id));
    write_coverage(&file, &paths[0]).unwrap();
    let ingested = read_coverage(&file, s, &scenario.vehicle).unwrap();
    assert!(ingested.warnings.is_empty());
    assert_eq!(ingested.path.len(), paths[0].len());
    assert!((ingested.path.total_duration - paths[0].total_duration).abs() < 1e-9);
    assert!(read_coverage(&file, &scenario.structures[1], &scenario.vehicle).is_err());
}

#[test]
fn truncated_file_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (scenario, _, _) = small_run();
    let file = dir.join("s.json");
    write_scenario(&file, &scenario).unwrap();
    let text = fs::read_to_string(&file).unwrap();
    fs::write(&file, &text[..text.len() / 2]).unwrap();
    assert!(matches!(read_scenario(&file), Err(Error::Schema { .. })));
}

#[test]
fn missing_field_names_its_path() {
    let text = r#"{"schema": "disip.scenario/1", "scenario": {"structures": [{"id": "a", "weight": 1.0}]}}"#;
    match from_json::<ScenarioFile>(text) {
        Err(Error::Schema { path, message }) => {
            assert!(path.starts_with("scenario.structures[0]"), "{path}");
            assert!(message.contains("mesh"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn wrong_schema_tag_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (scenario, _, _) = small_run();
    let file = dir.join("s.json");
    write_scenario(&file, &scenario).unwrap();
    let text = fs::read_to_string(&file).unwrap().replace(SCENARIO_SCHEMA, "disip.scenario/9");
    fs::write(&file, text).unwrap();
    match read_scenario(&file) {
        Err(Error::Schema { path, .. }) => assert_eq!(path, "schema"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn plan_and_report_round_trip_and_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (scenario, paths, mission) = small_run();
    let planner = Planner::new(&scenario, &paths).unwrap();
    let out = planner.run(&mission).unwrap();
    let plan_file = dir.join("plan.json");
    write_plan(&plan_file, &out.best, &out.path, mission.t_max).unwrap();
    let loaded = read_plan(&plan_file).unwrap();
    assert_eq!(loaded.plan, out.best);
    let check = validate_plan(&loaded, &scenario).unwrap();
    assert!((check.retimed_duration - out.best.total_time).abs() < 1e-6);

    let report = build_report(&scenario, &planner, &out, mission.t_max);
    let report_file = dir.join("report.json");
    write_report(&report_file, &report).unwrap();
    assert_eq!(read_report(&report_file).unwrap(), report);
    assert_eq!(report.structures.len(), scenario.structures.len());
    assert_eq!(report.iterations.len(), mission.iterations);
}

#[test]
fn validation_catches_tampering() {
    let (scenario, paths, mission) = small_run();
    let planner = Planner::new(&scenario, &paths).unwrap();
    let out = planner.run(&mission).unwrap();
    let file = PlanFile {
        schema: PLAN_SCHEMA.into(),
        t_max: mission.t_max,
        plan: out.best.clone(),
        path: out.path.clone(),
    };
    let mut moved = file.clone();
    let k = moved.path.points.len() / 2;
    moved.path.points[k].pose.x += 50.0;
    assert!(matches!(validate_plan(&moved, &scenario), Err(Error::PlanValidation(_))));

    let mut tight = file.clone();
    tight.t_max = file.plan.total_time * 0.5;
    assert!(matches!(validate_plan(&tight, &scenario), Err(Error::PlanValidation(_))));
}

#[test]
fn report_percentages() {
    let (scenario, paths, mission) = small_run();
    let planner = Planner::new(&scenario, &paths).unwrap();
    let out = planner.run(&mission).unwrap();
    let r = build_report(&scenario, &planner, &out, mission.t_max);
    let visited = r.structures.iter().filter(|s| s.visited).count();
    assert!((r.visited_percent - 100.0 * visited as f64 / 3.0).abs() < 1e-9);
    let upper: f64 = r.structures.iter().map(|s| s.weight * s.coverable_area).sum();
    assert!((r.reward_percent - 100.0 * r.total_reward / upper).abs() < 1e-9);
    let sum: f64 = r.structures.iter().map(|s| s.reward).sum();
    assert!((sum - r.total_reward).abs() < 1e-9 * sum.max(1.0));
}

#[test]
fn plot_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (scenario, paths, mission) = small_run();
    let planner = Planner::new(&scenario, &paths).unwrap();
    let out = planner.run(&mission).unwrap();
    let report = build_report(&scenario, &planner, &out, mission.t_max);
    emit_plot_data(&report, &out.history, dir).unwrap();
    let timing: Vec<TimingRow> = read_csv(&dir.join(TIMING_CSV)).unwrap();
    assert_eq!(timing.len(), mission.iterations);
    assert!(timing.windows(2).all(|w| w[1].best_so_far >= w[0].best_so_far));
    let coverage: Vec<CoverageRow> = read_csv(&dir.join(STRUCTURE_COVERAGE_CSV)).unwrap();
    assert_eq!(coverage.len(), 3);
}

#[test]
fn aggregation_keeps_first_appearance_order() {
    let run = |count, coverage| RunSummary {
        structure_count: count,
        seed: 0,
        best_iteration: 0,
        total_time: 100.0,
        coverage_percent: coverage,
        reward_percent: coverage,
        visited_percent: 100.0,
        mean_pairwise_distance: 10.0,
    };
    let rows = aggregate_runs(&[run(16, 20.0), run(8, 60.0), run(16, 30.0)]);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].structure_count, rows[0].runs), (16, 2));
    assert!((rows[0].mean_coverage_percent - 25.0).abs() < 1e-12);
    assert_eq!(rows[1].structure_count, 8);

    let timing = |count, t| RunTiming {
        structure_count: count,
        seed: 0,
        mean_iteration_time: t,
        tsp_share: 0.5,
    };
    let rows = aggregate_timing(&[timing(8, 0.2), timing(8, 0.4)]);
    assert_eq!(rows.len(), 1);
    assert!((rows[0].mean_iteration_time - 0.3).abs() < 1e-12);
}
