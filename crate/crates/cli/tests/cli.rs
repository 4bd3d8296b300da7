use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_swarm-entrap"));
    c.env_remove("SWARM_ENTRAP_THREADS");
    c
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(scenario("paper_comparison.json"))
        .arg("--out")
        .arg(dir)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn run_writes_one_directory_per_seed() {
    let tmp = TempDir::new().unwrap();
    let out = run_into(tmp.path(), &["--seeds", "20", "--seed", "100", "--steps", "50"]);
    ok(&out);
    assert!(out.stdout.is_empty(), "run must keep stdout clean");
    for seed in 100..120 {
        let dir = tmp.path().join(format!("seed_{seed}"));
        for file in ["trajectory.csv", "metrics.json", "run.json", "run.log", "scenario.json"] {
            assert!(dir.join(file).is_file(), "{}", dir.join(file).display());
        }
    }
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 20);
}

#[test]
fn steps_override_sets_trajectory_length() {
    let tmp = TempDir::new().unwrap();
    ok(&run_into(tmp.path(), &["--steps", "240"]));
    let csv = fs::read_to_string(tmp.path().join("seed_1/trajectory.csv")).unwrap();
    let last_step: usize = csv.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(last_step + 1, 241);
    assert_eq!(csv.lines().count(), 1 + 241 * 14);
}

#[test]
fn worker_cap_does_not_change_results() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    ok(&run_into(a.path(), &["--seeds", "3", "--steps", "120"]));
    let out = bin()
        .env("SWARM_ENTRAP_THREADS", "1")
        .arg("run")
        .arg(scenario("paper_comparison.json"))
        .args(["--seeds", "3", "--steps", "120", "--out"])
        .arg(b.path())
        .output()
        .unwrap();
    ok(&out);
    for seed in 1..4 {
        for file in ["trajectory.csv", "metrics.json", "run.json"] {
            let rel = format!("seed_{seed}/{file}");
            assert_eq!(fs::read(a.path().join(&rel)).unwrap(), fs::read(b.path().join(&rel)).unwrap(), "{rel}");
        }
    }
}

#[test]
fn baseline_flag_is_recorded() {
    let tmp = TempDir::new().unwrap();
    ok(&run_into(tmp.path(), &["--steps", "20", "--baseline"]));
    let record = fs::read_to_string(tmp.path().join("seed_1/run.json")).unwrap();
    assert!(record.contains("\"baseline\": true"));
}

#[test]
fn applied_defaults_are_logged() {
    let tmp = TempDir::new().unwrap();
    ok(&run_into(tmp.path(), &["--steps", "5"]));
    let log = fs::read_to_string(tmp.path().join("seed_1/run.log")).unwrap();
    assert!(log.contains("controller.agent_repulsion_range = 24.0"), "{log}");
    assert!(!log.contains("controller.speed_limit"), "explicit values are not defaults");
}

#[test]
fn metrics_recompute_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    ok(&run_into(tmp.path(), &["--steps", "300"]));
    let dir = tmp.path().join("seed_1");
    let out = bin()
        .arg("metrics")
        .arg(dir.join("trajectory.csv"))
        .arg(scenario("paper_comparison.json"))
        .output()
        .unwrap();
    ok(&out);
    assert_eq!(out.stdout, fs::read(dir.join("metrics.json")).unwrap());
    assert!(out.stderr.is_empty(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn metrics_on_truncated_trajectory_reports_never() {
    let tmp = TempDir::new().unwrap();
    ok(&run_into(tmp.path(), &["--steps", "30"]));
    let dir = tmp.path().join("seed_1");
    let csv = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    let cut: Vec<&str> = csv.lines().take(1 + 14 * 3).collect();
    let short = tmp.path().join("short.csv");
    fs::write(&short, cut.join("\n") + "\n").unwrap();
    let out = bin()
        .arg("metrics")
        .arg(&short)
        .arg(scenario("paper_comparison.json"))
        .output()
        .unwrap();
    ok(&out);
    let json = String::from_utf8(out.stdout).unwrap();
    assert!(json.contains("\"entrap_time_all\": null"), "{json}");
    assert!(json.contains("\"steps\": 2"));
}

#[test]
fn tampered_trajectory_triggers_digest_warning() {
    let tmp = TempDir::new().unwrap();
    ok(&run_into(tmp.path(), &["--steps", "30"]));
    let path = tmp.path().join("seed_1/trajectory.csv");
    let csv = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = csv.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[5].split(',').map(String::from).collect();
    fields[3] = "1.0000000000000000e1".into();
    lines[5] = fields.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let out = bin()
        .arg("metrics")
        .arg(&path)
        .arg(scenario("paper_comparison.json"))
        .output()
        .unwrap();
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("digest mismatch"));
}

#[test]
fn metrics_out_flag_writes_file() {
    let tmp = TempDir::new().unwrap();
    ok(&run_into(tmp.path(), &["--steps", "10"]));
    let dir = tmp.path().join("seed_1");
    let target = tmp.path().join("again.json");
    let out = bin()
        .arg("metrics")
        .arg(dir.join("trajectory.csv"))
        .arg(scenario("paper_comparison.json"))
        .arg("--out")
        .arg(&target)
        .output()
        .unwrap();
    ok(&out);
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read(target).unwrap(), fs::read(dir.join("metrics.json")).unwrap());
}

const CHARTS: [&str; 5] = [
    "trajectory.svg",
    "agents_per_target.svg",
    "sector_occupancy.svg",
    "min_distance.svg",
    "velocity_correlation.svg",
];

/// Minimal structural check: an XML prolog, one svg root in the SVG
/// namespace, and balanced open and close tags.
fn assert_svg(text: &str) {
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\""));
    assert!(text.trim_end().ends_with("</svg>"));
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let end = rest[start..].find('>').expect("unterminated tag") + start;
        let tag = &rest[start + 1..end];
        rest = &rest[end + 1..];
        if tag.starts_with('?') || tag.ends_with('/') {
            continue;
        }
        let name = tag.trim_start_matches('/').split_whitespace().next().unwrap().to_string();
        if tag.starts_with('/') {
            assert_eq!(stack.pop().as_deref(), Some(name.as_str()), "mismatched </{name}>");
        } else {
            stack.push(name);
        }
    }
    assert!(stack.is_empty(), "unclosed {stack:?}");
}

#[test]
fn plot_emits_five_well_formed_svgs() {
    let tmp = TempDir::new().unwrap();
    ok(&run_into(tmp.path(), &["--steps", "200"]));
    let dir = tmp.path().join("seed_1");
    let plots = tmp.path().join("plots");
    let out = bin()
        .arg("plot")
        .arg(dir.join("trajectory.csv"))
        .arg(dir.join("metrics.json"))
        .arg("--out")
        .arg(&plots)
        .output()
        .unwrap();
    ok(&out);
    assert_eq!(fs::read_dir(&plots).unwrap().count(), 5);
    for name in CHARTS {
        assert_svg(&fs::read_to_string(plots.join(name)).unwrap());
    }
}

#[test]
fn plot_rejects_empty_trajectory() {
    let tmp = TempDir::new().unwrap();
    ok(&run_into(tmp.path(), &["--steps", "5"]));
    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "step,kind,id,x,y,vx,vy,assignment\n").unwrap();
    let out = bin()
        .arg("plot")
        .arg(&empty)
        .arg(tmp.path().join("seed_1/metrics.json"))
        .arg("--out")
        .arg(tmp.path().join("plots"))
        .arg("--scenario")
        .arg(scenario("paper_comparison.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn exit_codes() {
    let missing = bin().args(["run", "no/such/scenario.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(missing.stdout.is_empty());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no/such/scenario.json"));

    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "").unwrap();
    let out = bin().arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte offset"));

    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["run"]).output().unwrap().status.code(), Some(1));
    assert_eq!(
        bin().arg("run").arg(scenario("scene1.json")).args(["--seeds", "0"]).output().unwrap().status.code(),
        Some(1)
    );
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("run"));

    let threads = bin()
        .env("SWARM_ENTRAP_THREADS", "zero")
        .arg("run")
        .arg(scenario("scene1.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(1));

    let zero_steps = bin()
        .arg("run")
        .arg(scenario("scene1.json"))
        .args(["--steps", "0", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(zero_steps.status.code(), Some(2));
}

#[test]
fn invariant_violation_names_both_fields() {
    let tmp = TempDir::new().unwrap();
    let text = fs::read_to_string(scenario("scene1.json"))
        .unwrap()
        .replace("\"steps\": 240", "\"controller\": {\"target_repulsion_range\": 15.0},\n  \"steps\": 240");
    let path = tmp.path().join("bad.json");
    fs::write(&path, text).unwrap();
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("target_repulsion_range") && err.contains("entrap_radius"), "{err}");
}
