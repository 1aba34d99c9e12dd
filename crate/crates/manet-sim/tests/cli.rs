//! End-to-end checks of the command-line front end: each subcommand, the
//! manifest round trip, and byte-level reproducibility of everything a
//! run writes to disk.

use std::path::Path;
use std::process::{Command, Output};

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_manet-sim"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn manet-sim");
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout:\n{}\nstderr:\n{}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn run_writes_metrics_and_reproducible_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let again = dir.path().join("again");

    let out = run_ok(cli().args([
        "run",
        "--protocol", "aodv",
        "--nodes", "12",
        "--seed", "5",
        "--duration", "60",
        "--trace",
        "--out", first.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("aodv nodes=12 seed=5"), "stdout was: {stdout}");

    for name in ["manifest.toml", "metrics.csv", "events.log", "positions.csv", "energy.csv", "modes.csv"] {
        assert!(first.join(name).is_file(), "{name} missing from run output");
    }

    // Feeding the manifest back reproduces every artifact byte for byte.
    run_ok(cli().args([
        "run",
        "--config", first.join("manifest.toml").to_str().unwrap(),
        "--trace",
        "--out", again.to_str().unwrap(),
    ]));
    for name in ["manifest.toml", "metrics.csv", "events.log", "positions.csv", "energy.csv", "modes.csv"] {
        assert_eq!(
            read(&first.join(name)),
            read(&again.join(name)),
            "{name} differs when re-run from its own manifest"
        );
    }
}

#[test]
fn run_flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    run_ok(cli().args([
        "run",
        "--preset", "sim1",
        "--nodes", "8",
        "--seed", "9",
        "--duration", "30",
        "--protocol", "dsdv",
        "--out", out_dir.to_str().unwrap(),
    ]));
    let manifest = read(&out_dir.join("manifest.toml"));
    assert!(manifest.contains("nodes = 8"), "override not in manifest:\n{manifest}");
    assert!(manifest.contains("seed = 9"));
    assert!(manifest.contains("protocol = \"dsdv\""));
}

#[test]
fn run_reports_selection_for_hybrid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(cli().args([
        "run",
        "--protocol", "deerp",
        "--nodes", "15",
        "--seed", "2",
        "--duration", "20",
        "--out", dir.path().join("x").to_str().unwrap(),
    ]));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("selection: idle=dsr tx=dsdv rx=dsr"),
        "hybrid run should print its protocol selection; stdout was: {stdout}"
    );
}

#[test]
fn invalid_scenario_fails_with_diagnostic() {
    let out = cli()
        .args(["run", "--nodes", "1"])
        .output()
        .expect("spawn manet-sim");
    assert!(!out.status.success(), "a one-node scenario must be rejected");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error:"), "stderr was: {stderr}");
}

#[test]
fn preset_prints_parseable_toml_and_sim2_sweeps() {
    let out = run_ok(cli().args(["preset", "sim1"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("protocol"), "preset output looks wrong:\n{text}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim2.toml");
    run_ok(cli().args(["preset", "sim2", "--out", path.to_str().unwrap()]));
    let sweep = read(&path);
    assert!(sweep.contains("sweep"), "sim2 should define a node-count sweep:\n{sweep}");

    let bad = cli().args(["preset", "sim99"]).output().unwrap();
    assert!(!bad.status.success(), "unknown preset must fail");
}

#[test]
fn compare_writes_report_and_render_reproduces_charts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cmp");

    // Tiny grid: two protocols, two seeds, two sweep points.
    run_ok(cli().args([
        "compare",
        "--nodes", "8",
        "--duration", "30",
        "--sweep", "5:300",
        "--sweep", "8:400",
        "--protocols", "dsdv,aodv",
        "--seeds", "1,2",
        "--out", out_dir.to_str().unwrap(),
    ]));

    for name in [
        "manifest.toml",
        "pdr.csv",
        "mean_remaining_mj.csv",
        "mean_idle_mj.csv",
        "failures.csv",
        "chart_mean_idle_mj.svg",
        "chart_mean_remaining_mj.svg",
    ] {
        assert!(out_dir.join(name).is_file(), "{name} missing from comparison output");
    }
    let failures = read(&out_dir.join("failures.csv"));
    assert_eq!(failures.lines().count(), 1, "no cell should fail: {failures}");

    // Deface a chart, then render from the CSVs: the bytes must come back.
    let chart = out_dir.join("chart_mean_remaining_mj.svg");
    let original = read(&chart);
    std::fs::write(&chart, "vandalized").unwrap();
    run_ok(cli().args(["render", "--from", out_dir.to_str().unwrap()]));
    assert_eq!(read(&chart), original, "render must regenerate charts byte-identically");
}
