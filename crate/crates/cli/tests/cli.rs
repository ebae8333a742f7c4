use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn evac() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_evac"));
    cmd.env_remove("EVAC_THREADS");
    cmd
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    evac().arg("--out").arg(out).args(args).output().expect("spawn evac")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| {
        panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&o.stderr))
    })
}

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn capacities_report_bridge_totals() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["capacities"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = stdout_json(&o);
    let r = &doc["result"]["report"];
    assert_eq!(r["total"].as_f64().unwrap(), 80_000.0);
    assert_eq!(r["formula_total"].as_f64().unwrap(), 75_200.0);
    assert!(r["bridges"].as_array().unwrap().len() >= 2);
    assert!(dir.path().join("capacities.json").is_file());
    assert_eq!(doc["provenance"]["tool"], "evac");
    assert_eq!(doc["provenance"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn invalid_config_is_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["--set", "zone.exit_angles_deg=[]", "--set", "scenarios=0", "capacities"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert_eq!(err["error"]["kind"], "invalid_config");
    let details = err["error"]["details"].as_array().unwrap();
    assert_eq!(details.len(), 2, "every violation is listed: {details:?}");
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "schema_version = 1\nseeed = 4\n").unwrap();
    let o = run_in(dir.path(), &["--config", cfg.to_str().unwrap(), "capacities"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert!(err["error"]["message"].as_str().unwrap().contains("seeed"));
}

#[test]
fn unknown_reproduce_target_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["reproduce", "figure-9"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "usage");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = evac().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "usage");
}

#[test]
fn set_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = run_in(dir.path(), &["capacities"]);
    let bumped = run_in(dir.path(), &["--set", "population.motorization=0.3", "capacities"]);
    let (a, b) = (stdout_json(&base), stdout_json(&bumped));
    let va = a["result"]["report"]["vehicles"].as_f64().unwrap();
    let vb = b["result"]["report"]["vehicles"].as_f64().unwrap();
    assert!((vb - va / 2.0).abs() < 1e-6, "{va} vs {vb}");
    assert_ne!(a["provenance"]["config_hash"], b["provenance"]["config_hash"]);
}

#[test]
fn config_round_trips_through_the_printer() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["--set", "seed=99", "config"]);
    assert!(o.status.success());
    let path = dir.path().join("printed.toml");
    std::fs::write(&path, &o.stdout).unwrap();
    let again = run_in(dir.path(), &["--config", path.to_str().unwrap(), "config"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn shipped_scenarios_load() {
    for name in ["amager.toml", "dumbbell.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let file = scenario_file(name);
        let o = run_in(dir.path(), &["--config", file.to_str().unwrap(), "config"]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn dumbbell_distribution_is_not_ifr() {
    let dir = tempfile::tempdir().unwrap();
    let file = scenario_file("dumbbell.toml");
    let o = run_in(dir.path(), &["--config", file.to_str().unwrap(), "distribution"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("\"ifr\": false"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("distribution.csv")).unwrap();
    assert!(csv.starts_with("# tool: evac"));
    assert!(csv.contains("# units:"));
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

const SMALL_OPTIMIZE: &[&str] = &[
    "--set", "scenarios=6",
    "--set", "search.grid_cutoff=6",
    "--set", "search.grid_switch=6",
    "--set", "search.max_evaluations=120",
    "optimize",
];

#[test]
fn same_seed_gives_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = run_in(dir.path(), SMALL_OPTIMIZE);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (artifacts(a.path()), artifacts(b.path()));
    assert!(!fa.is_empty());
    assert_eq!(fa, fb);
}

#[test]
fn seed_flag_changes_the_draws() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = run_in(a.path(), SMALL_OPTIMIZE);
    let ob = evac().arg("--out").arg(b.path()).args(["--seed", "12345"]).args(SMALL_OPTIMIZE).output().unwrap();
    assert!(oa.status.success() && ob.status.success());
    let (ja, jb) = (stdout_json(&oa), stdout_json(&ob));
    assert_ne!(ja["result"]["objective"], jb["result"]["objective"]);
    assert_eq!(jb["provenance"]["seed"].as_u64(), Some(12345));
}

#[test]
fn thread_count_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = evac().env("EVAC_THREADS", "1").arg("--out").arg(a.path()).args(SMALL_OPTIMIZE).output().unwrap();
    let four = evac().env("EVAC_THREADS", "4").arg("--out").arg(b.path()).args(SMALL_OPTIMIZE).output().unwrap();
    assert!(one.status.success() && four.status.success());
    assert_eq!(artifacts(a.path()), artifacts(b.path()));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = evac().env("EVAC_THREADS", "zero").arg("--out").arg(dir.path()).arg("capacities").output().unwrap();
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr_json(&o)["error"]["message"].as_str().unwrap().contains("EVAC_THREADS"));
}

#[test]
fn simulate_conserves_vehicles() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["simulate", "--cutoff", "4.6", "--switch-min", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &stdout_json(&o)["result"];
    assert!(r["max_conservation_gap_veh"].as_f64().unwrap() < 1e-3);
    assert!(r["clearance_min"].as_f64().unwrap() > 0.0);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.lines().filter(|l| !l.starts_with('#')).count() > 10);
    assert!(dir.path().join("trace.svg").is_file());
}

#[test]
fn failed_reproduction_checks_exit_with_three() {
    // The single-switch claim does not survive exhaustive enumeration.
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["reproduce", "propositions"]);
    assert_eq!(o.status.code(), Some(3));
    let doc = stdout_json(&o);
    assert_eq!(doc["result"]["grade"]["passed"], false);
    assert!(dir.path().join("reproduce_propositions.json").is_file());
}
