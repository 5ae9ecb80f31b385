use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use disip_cli::{
    cover_scenario, gen_scenario, plan_to_dir, read_coverage_dir, run_batch, write_batch, write_coverage_dir,
    CliResult, ExitKind, Failure, GenOptions, MissionOverrides, Protocol, PLAN_FILE, REPORT_FILE,
};
use disip_core::io;

/// Time-budgeted inspection planning over distributed structures.
///
/// Exit status: 0 success, 1 internal error, 2 usage or input error,
/// 3 infeasible (placement failed, nothing coverable, no feasible plan).
#[derive(Parser)]
#[command(name = "disip", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random scenario file.
    Gen(GenArgs),
    /// Plan a full-coverage path for every structure of a scenario.
    Cover(CoverArgs),
    /// Plan a mission over a scenario and its coverage paths.
    Plan(PlanArgs),
    /// Run a protocol of generated scenarios and aggregate the results.
    Batch(BatchArgs),
    /// Re-time a plan file against its scenario.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    count: usize,
    /// Area extent in meters.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], default_values_t = [200.0, 200.0, 50.0])]
    bounds: Vec<f64>,
    /// Minimum clearance between footprints, meters.
    #[arg(long, default_value_t = disip_core::scenario::DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict to these archetypes (repeatable).
    #[arg(long = "archetype")]
    archetypes: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MissionArgs {
    /// Mission time budget, seconds.
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Return to the starting pose.
    #[arg(long, conflicts_with = "open")]
    closed: bool,
    /// Omit the return leg.
    #[arg(long)]
    open: bool,
    /// Per-structure subset inclusion probability.
    #[arg(long)]
    inclusion_prob: Option<f64>,
}

impl MissionArgs {
    fn overrides(&self) -> MissionOverrides {
        MissionOverrides {
            t_max: self.t_max,
            iterations: self.iterations,
            seed: self.seed,
            closed_route: match (self.closed, self.open) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            },
            inclusion_probability: self.inclusion_prob,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Directory holding one coverage file per structure.
    #[arg(long)]
    coverage_dir: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    mission: MissionArgs,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    protocol: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    plan: PathBuf,
}

fn gen(args: GenArgs) -> CliResult<()> {
    if args.count == 0 {
        return Err(Failure::usage("--count must be at least 1"));
    }
    let opts = GenOptions {
        count: args.count,
        bounds: [args.bounds[0], args.bounds[1], args.bounds[2]],
        margin: args.margin,
        seed: args.seed,
        archetypes: args.archetypes,
    };
    let scenario = gen_scenario(&opts)?;
    io::write_scenario(&args.out, &scenario)?;
    println!(
        "wrote {} structures to {} (mean pairwise distance {:.1} m)",
        scenario.structures.len(),
        args.out.display(),
        scenario.mean_pairwise_distance()
    );
    Ok(())
}

fn cover(args: CoverArgs) -> CliResult<()> {
    let scenario = io::read_scenario(&args.scenario)?;
    scenario.validate()?;
    let paths = cover_scenario(&scenario, args.seed)?;
    write_coverage_dir(&args.out_dir, &paths)?;
    for p in &paths {
        println!(
            "{}: {} viewpoints, {:.1} s, {} faces",
            p.structure_id,
            p.len(),
            p.total_duration,
            p.covered_union().len()
        );
    }
    Ok(())
}

fn plan(args: PlanArgs) -> CliResult<()> {
    let scenario = io::read_scenario(&args.scenario)?;
    scenario.validate()?;
    let mission = args.mission.overrides().apply(scenario.mission)?;
    let (paths, warnings) = read_coverage_dir(&args.coverage_dir, &scenario)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let (run, check) = plan_to_dir(&scenario, &paths, mission, &args.out_dir)?;
    let r = &run.report;
    println!(
        "best iteration {} of {}: reward {:.2} ({:.1}%), coverage {:.1}%, visited {:.1}%, time {:.1} / {:.1} s",
        r.best_iteration,
        run.history.len(),
        r.total_reward,
        r.reward_percent,
        r.coverage_percent,
        r.visited_percent,
        check.retimed_duration,
        mission.t_max
    );
    println!("wrote {PLAN_FILE}, {REPORT_FILE}, {}, {} to {}", io::TIMING_CSV, io::STRUCTURE_COVERAGE_CSV, args.out_dir.display());
    Ok(())
}

fn batch(args: BatchArgs) -> CliResult<()> {
    let protocol = Protocol::read(&args.protocol)?;
    if let Some(n) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let out = run_batch(&protocol)?;
    write_batch(&args.out_dir, &out)?;
    for row in io::aggregate_runs(&out.runs) {
        println!(
            "{} structures, {} runs: coverage {:.1}%, reward {:.1}%, visited {:.1}%",
            row.structure_count, row.runs, row.mean_coverage_percent, row.mean_reward_percent, row.mean_visited_percent
        );
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> CliResult<()> {
    let scenario = io::read_scenario(&args.scenario)?;
    let plan = io::read_plan(&args.plan)?;
    let check = io::validate_plan(&plan, &scenario)?;
    println!(
        "ok: {:.6} s of {:.6} s, max segment error {:.2e} s",
        check.retimed_duration, plan.t_max, check.max_segment_error
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Cover(a) => cover(a),
        Command::Plan(a) => plan(a),
        Command::Batch(a) => batch(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let label = match f.kind {
                ExitKind::Infeasible => "infeasible",
                ExitKind::Usage => "error",
                ExitKind::Internal => "internal error",
            };
            eprintln!("{label}: {f}");
            ExitCode::from(f.kind as u8)
        }
    }
}
