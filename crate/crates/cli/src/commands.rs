use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use swarm_entrap::geometry::Obstacle;
use swarm_entrap::io::record::{self, RunRecord, ENGINE_VERSION};
use swarm_entrap::io::scenario::{parse_scenario, scenario_digest, serialize_scenario, sha256_hex};
use swarm_entrap::io::svg;
use swarm_entrap::io::trajectory_csv::{parse_trajectory_str, trajectory_to_string};
use swarm_entrap::metrics::{self, MetricsReport};
use swarm_entrap::simulator::{self, Scenario};

pub const THREADS_ENV: &str = "SWARM_ENTRAP_THREADS";

const TRAJECTORY_FILE: &str = "trajectory.csv";
const METRICS_FILE: &str = "metrics.json";
const RECORD_FILE: &str = "run.json";
const LOG_FILE: &str = "run.log";
const SCENARIO_FILE: &str = "scenario.json";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Scenario(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Scenario(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn runtime(context: impl fmt::Display, e: impl fmt::Display) -> CliError {
    CliError::Runtime(format!("{context}: {e}"))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| runtime(format!("cannot read {}", path.display()), e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| runtime(format!("cannot write {}", path.display()), e))
}

fn load_scenario(path: &Path) -> Result<(Scenario, Vec<String>), CliError> {
    let parsed = parse_scenario(path).map_err(|e| CliError::Scenario(format!("{}: {e}", path.display())))?;
    Ok((parsed.scenario, parsed.applied_defaults))
}

fn worker_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

pub struct RunArgs {
    pub scenario: PathBuf,
    pub seeds: u64,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub baseline: bool,
}

struct Replicate {
    seed: u64,
    dir: PathBuf,
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let (mut scenario, applied_defaults) = load_scenario(&args.scenario)?;
    if let Some(steps) = args.steps {
        if steps == 0 {
            return Err(CliError::Scenario("--steps must be at least 1".into()));
        }
        scenario.steps = steps;
    }
    if args.baseline {
        scenario.baseline = true;
    }
    let base_seed = args.seed.unwrap_or(scenario.seed);
    scenario
        .validate()
        .map_err(|e| CliError::Scenario(format!("{}: {e}", args.scenario.display())))?;
    let last_seed = base_seed
        .checked_add(args.seeds - 1)
        .ok_or_else(|| CliError::Usage("seed range overflows u64".into()))?;

    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(&scenario.name));
    let replicates: Vec<Replicate> = (base_seed..=last_seed)
        .map(|seed| Replicate {
            seed,
            dir: out.join(format!("seed_{seed}")),
        })
        .collect();

    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = worker_count()? {
            builder = builder.num_threads(n);
        }
        builder.build().map_err(|e| runtime("cannot start worker pool", e))?
    };
    eprintln!(
        "running {} replicate(s) of `{}` ({} steps) into {}",
        replicates.len(),
        scenario.name,
        scenario.steps,
        out.display()
    );
    let results: Vec<Result<(), CliError>> = pool.install(|| {
        replicates
            .par_iter()
            .map(|r| run_replicate(&scenario, &args.scenario, &applied_defaults, r))
            .collect()
    });

    let failures: Vec<&CliError> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    for f in &failures {
        eprintln!("swarm-entrap: {f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} of {} replicate(s) failed",
            failures.len(),
            replicates.len()
        )))
    }
}

fn run_replicate(base: &Scenario, source: &Path, applied_defaults: &[String], rep: &Replicate) -> Result<(), CliError> {
    let scenario = Scenario {
        seed: rep.seed,
        ..base.clone()
    };
    let trajectory = simulator::run(&scenario).map_err(|e| runtime(format!("seed {}", rep.seed), e))?;
    let report = metrics::compute(&trajectory, &scenario.obstacles, &scenario.metrics);
    let csv = trajectory_to_string(&trajectory);
    let metrics_json = record::metrics_to_json(&report);
    let digest = scenario_digest(&scenario);

    fs::create_dir_all(&rep.dir).map_err(|e| runtime(format!("cannot create {}", rep.dir.display()), e))?;
    write_text(&rep.dir.join(TRAJECTORY_FILE), &csv)?;
    write_text(&rep.dir.join(METRICS_FILE), &metrics_json)?;
    write_text(&rep.dir.join(SCENARIO_FILE), &serialize_scenario(&scenario))?;
    let rec = RunRecord {
        engine_version: ENGINE_VERSION.to_string(),
        scenario_name: scenario.name.clone(),
        scenario_digest: digest.clone(),
        seed: rep.seed,
        baseline: scenario.baseline,
        trajectory_file: TRAJECTORY_FILE.to_string(),
        trajectory_digest: sha256_hex(csv.as_bytes()),
        metrics: report.clone(),
    };
    write_text(&rep.dir.join(RECORD_FILE), &record::record_to_json(&rec))?;
    write_text(&rep.dir.join(LOG_FILE), &run_log(&scenario, source, &digest, applied_defaults, &report))?;
    eprintln!(
        "seed {}: all targets entrapped at {}",
        rep.seed,
        report.entrap_time_all.map_or("never".to_string(), |s| format!("step {s}"))
    );
    Ok(())
}

fn run_log(
    scenario: &Scenario,
    source: &Path,
    digest: &str,
    applied_defaults: &[String],
    report: &MetricsReport,
) -> String {
    let never = |t: Option<usize>| t.map_or("never".to_string(), |s| s.to_string());
    let mut log = String::new();
    log.push_str(&format!("engine_version: {ENGINE_VERSION}\n"));
    log.push_str(&format!("scenario: {} ({})\n", scenario.name, source.display()));
    log.push_str(&format!("scenario_digest: {digest}\n"));
    log.push_str(&format!("seed: {}\n", scenario.seed));
    log.push_str(&format!("steps: {}\n", scenario.steps));
    log.push_str(&format!("baseline: {}\n", scenario.baseline));
    log.push_str(&format!("applied defaults: {}\n", applied_defaults.len()));
    for d in applied_defaults {
        log.push_str(&format!("  {d}\n"));
    }
    let per_target: Vec<String> = report.entrap_time_per_target.iter().map(|t| never(*t)).collect();
    log.push_str(&format!("entrap_time_per_target: [{}]\n", per_target.join(", ")));
    log.push_str(&format!("entrap_time_all: {}\n", never(report.entrap_time_all)));
    if let Some(d) = report.run_min_pairwise_distance {
        log.push_str(&format!("run_min_pairwise_distance: {d:.6}\n"));
    }
    log.push_str(&format!("collision_events: {}\n", report.collision_events));
    log
}

fn load_trajectory(path: &Path) -> Result<(swarm_entrap::simulator::Trajectory, String), CliError> {
    let text = read_text(path)?;
    let trajectory = parse_trajectory_str(&text).map_err(|e| runtime(path.display(), e))?;
    Ok((trajectory, text))
}

fn sidecar(trajectory: &Path, name: &str) -> PathBuf {
    trajectory.parent().unwrap_or_else(|| Path::new(".")).join(name)
}

/// Warns when the trajectory no longer matches the digest recorded beside it.
fn check_digest(trajectory: &Path, text: &str) {
    let path = sidecar(trajectory, RECORD_FILE);
    let Ok(raw) = fs::read_to_string(&path) else {
        return;
    };
    let Ok(rec) = record::parse_record(&raw) else {
        eprintln!("warning: {} is not a valid run record, digest not checked", path.display());
        return;
    };
    let name = trajectory.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    if rec.trajectory_file != name {
        return;
    }
    let actual = sha256_hex(text.as_bytes());
    if actual != rec.trajectory_digest {
        eprintln!(
            "warning: digest mismatch for {}: run record has {}, file hashes to {actual}",
            trajectory.display(),
            rec.trajectory_digest
        );
    }
}

pub fn metrics(trajectory_path: &Path, scenario_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let (scenario, _) = load_scenario(scenario_path)?;
    let (trajectory, text) = load_trajectory(trajectory_path)?;
    check_digest(trajectory_path, &text);
    let report = metrics::compute(&trajectory, &scenario.obstacles, &scenario.metrics);
    let json = record::metrics_to_json(&report);
    match out {
        Some(path) => write_text(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

pub fn plot(trajectory_path: &Path, metrics_path: &Path, out: &Path, scenario: Option<&Path>) -> Result<(), CliError> {
    let (trajectory, _) = load_trajectory(trajectory_path)?;
    let report = record::parse_metrics(&read_text(metrics_path)?).map_err(|e| runtime(metrics_path.display(), e))?;
    if !trajectory.is_empty()
        && (report.agent_count != trajectory.agent_count() || report.target_count != trajectory.target_count())
    {
        return Err(CliError::Runtime(format!(
            "{} describes {} agents and {} targets but the trajectory has {} and {}",
            metrics_path.display(),
            report.agent_count,
            report.target_count,
            trajectory.agent_count(),
            trajectory.target_count()
        )));
    }

    let scenario_path = scenario.map(Path::to_path_buf).unwrap_or_else(|| sidecar(trajectory_path, SCENARIO_FILE));
    let (side, obstacles): (f64, Vec<Obstacle>) = if scenario.is_some() || scenario_path.exists() {
        let (s, _) = load_scenario(&scenario_path)?;
        (s.arena.side, s.obstacles)
    } else {
        eprintln!("warning: no scenario given or found beside the trajectory; drawing without obstacles");
        let extent = trajectory
            .frames
            .iter()
            .flat_map(|f| f.agents.iter().map(|a| a.pos).chain(f.targets.iter().map(|t| t.pos)))
            .fold(1.0f64, |m, p| m.max(p.x).max(p.y));
        (extent.ceil(), Vec::new())
    };

    let charts = svg::render_all(&trajectory, &report, side, &obstacles)
        .map_err(|e| runtime(trajectory_path.display(), e))?;
    fs::create_dir_all(out).map_err(|e| runtime(format!("cannot create {}", out.display()), e))?;
    for (name, doc) in charts {
        write_text(&out.join(name), &doc)?;
    }
    Ok(())
}
