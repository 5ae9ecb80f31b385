use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use disip_core::coverage::plan_coverage;
use disip_core::io;
use disip_core::model::MissionConfig;
use disip_core::planner::{Planner, SegmentLabel};
use disip_core::scenario::{builtin_archetypes, generate, DEFAULT_MARGIN};

#[test]
fn generate_cover_plan_and_reload() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let scenario = generate(&builtin_archetypes(), 5, [200.0, 200.0, 50.0], DEFAULT_MARGIN, &mut rng).unwrap();
    let scenario_file = tmp.path().join("scenario.json");
    io::write_scenario(&scenario_file, &scenario).unwrap();
    let scenario = io::read_scenario(&scenario_file).unwrap();

    let mut paths = Vec::new();
    for s in &scenario.structures {
        let path = plan_coverage(s, &scenario.sensor, &scenario.vehicle, 0).unwrap();
        let file = tmp.path().join(io::coverage_file_name(&s.id));
        io::write_coverage(&file, &path).unwrap();
        let ingested = io::read_coverage(&file, s, &scenario.vehicle).unwrap();
        assert!(ingested.warnings.is_empty());
        paths.push(ingested.path);
    }

    let mission = MissionConfig {
        t_max: 900.0,
        closed_route: false,
        iterations: 20,
        ..MissionConfig::default()
    };
    let planner = Planner::new(&scenario, &paths).unwrap();
    let out = planner.run(&mission).unwrap();
    assert!(out.best.total_time <= mission.t_max + 1e-6);
    assert!(!out.best.visits.is_empty());
    // open route: one transit per visit after the first, no return leg
    let transits = out.path.points.iter().filter(|p| p.segment == SegmentLabel::Transit).count();
    assert_eq!(transits, out.best.visits.len() - 1);

    let plan_file = tmp.path().join("plan.json");
    io::write_plan(&plan_file, &out.best, &out.path, mission.t_max).unwrap();
    let check = io::validate_plan(&io::read_plan(&plan_file).unwrap(), &scenario).unwrap();
    assert!((check.retimed_duration - out.best.total_time).abs() < 1e-6);

    let report = io::build_report(&scenario, &planner, &out, mission.t_max);
    assert!((0.0..=100.0).contains(&report.coverage_percent));
    assert!((0.0..=100.0).contains(&report.reward_percent));
    assert!((0.0..=100.0).contains(&report.visited_percent));
    assert!(report.mean_pairwise_distance > 0.0);
}
