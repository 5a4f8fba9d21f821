//! End-to-end tests of the `entnet` binary: output shape, exit codes,
//! determinism, and the simulate -> analyze round trip.

use entnet::scenario::Scenario;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn entnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entnet"))
        .args(args)
        .output()
        .expect("spawn entnet")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn plan_prints_the_allocation_table() {
    let scenario = scenario_path("testbed_4user.toml");
    let out = entnet(&["plan", "--scenario", scenario.to_str().unwrap()]);
    let text = stdout_of(&out);
    assert!(text.contains("4 users, 12 wavelength channels"));
    assert!(text.contains("alice"));
    assert!(text.contains("1562.2327")); // ITU 19 wavelength
    assert!(text.contains("all channels"));
}

#[test]
fn plan_json_is_parseable_and_writes_allocation_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("allocation.csv");
    let scenario = scenario_path("testbed_4user.toml");
    let out = entnet(&[
        "--json",
        "plan",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(value["users"], 4);
    assert_eq!(value["channels_required"], 12);
    assert_eq!(value["rows"].as_array().unwrap().len(), 12);

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("user,itu_index,offset,partner_user"));
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn plan_exits_2_on_gap_violation() {
    // Park a classical carrier right next to a quantum channel.
    let mut scenario = Scenario::load(&scenario_path("testbed_4user.toml")).unwrap();
    scenario.classical_channels[0].itu_index = 20;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("violating.toml");
    scenario.save(&path).unwrap();

    let out = entnet(&["plan", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("violation"), "report should list the violations:\n{text}");
}

#[test]
fn invalid_physics_exits_3() {
    let toml = std::fs::read_to_string(scenario_path("testbed_4user.toml")).unwrap();
    let broken = toml.replace("efficiency = 0.25", "efficiency = 1.5");
    assert_ne!(toml, broken);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, broken).unwrap();

    let out = entnet(&["plan", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn missing_run_directory_exits_4() {
    let out = entnet(&["analyze", "--run", "/nonexistent/run-dir"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unknown_link_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_path("testbed_3user.toml");
    entnet(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--duration",
        "0.05",
        "--seed",
        "1",
        "--users",
        "alice,bob",
    ]);
    let out = entnet(&[
        "analyze",
        "--run",
        dir.path().to_str().unwrap(),
        "--link",
        "alice-zelda",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_analyze_round_trip_is_deterministic() {
    let scenario = scenario_path("testbed_3user.toml");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let out = entnet(&[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--duration",
            "0.5",
            "--seed",
            "11",
            "--users",
            "alice,bob",
        ]);
        stdout_of(&out);
    }
    // Identical seeds produce byte-identical runs.
    for file in ["run.json", "scenario.toml", "tags_alice_0.csv", "tags_bob_1.csv", "predicted_rates.csv"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap();
        let b = std::fs::read(dirs[1].path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identically seeded runs");
    }

    // The saved effective scenario reloads and re-serializes byte-identically.
    let saved = dirs[0].path().join("scenario.toml");
    let reloaded = Scenario::load(&saved).unwrap();
    assert_eq!(reloaded.to_toml_string().unwrap(), std::fs::read_to_string(&saved).unwrap());

    let analyze = |dir: &Path| {
        let out = entnet(&[
            "--json",
            "analyze",
            "--run",
            dir.to_str().unwrap(),
            "--window-center",
            "-180",
            "--link",
            "alice-bob",
        ]);
        stdout_of(&out)
    };
    let first = analyze(dirs[0].path());
    assert_eq!(first, analyze(dirs[1].path()));

    let value: serde_json::Value = serde_json::from_str(&first).unwrap();
    let row = &value.as_array().unwrap()[0];
    assert_eq!(row["link"], "alice-bob");
    assert_eq!(row["peak_delay_ps"], -180);
    let vis = row["visibility"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&vis));
    assert!(dirs[0].path().join("hist_alice-bob.csv").exists());
    assert!(dirs[0].path().join("link_statistics.csv").exists());
}

#[test]
fn simulate_respects_fiber_and_coexistence_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_path("testbed_4user.toml");
    let out = entnet(&[
        "--json",
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--duration",
        "0.01",
        "--seed",
        "3",
        "--coexistence",
        "off",
        "--fiber",
        "solid",
        "--users",
        "alice,bob",
        "--tags-format",
        "binary",
    ]);
    let manifest: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(manifest["coexistence"], false);
    assert_eq!(manifest["fiber"], "solid");
    assert_eq!(manifest["tags_format"], "binary");
    assert!(dir.path().join("tags_alice_0.bin").exists());

    // The persisted effective scenario reflects both overrides.
    let effective = Scenario::load(&dir.path().join("scenario.toml")).unwrap();
    assert!(!effective.coexistence.enabled);
    let path = effective.user_path(0).unwrap();
    assert!(path
        .elements
        .iter()
        .all(|e| !matches!(e, entnet::photonics::PathElement::Fiber(f)
            if f.kind == entnet::photonics::FiberKind::HollowCore)));
}

#[test]
fn compare_renders_all_three_variants() {
    let scenario = scenario_path("testbed_4user.toml");
    let out = entnet(&["compare", "--scenario", scenario.to_str().unwrap()]);
    let text = stdout_of(&out);
    for needle in ["[baseline]", "[coexistence-off]", "[solid-fiber]", "alice-bob", "chloe-dave"] {
        assert!(text.contains(needle), "missing {needle} in:\n{text}");
    }

    let json_out = entnet(&["--json", "compare", "--scenario", scenario.to_str().unwrap()]);
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&json_out)).unwrap();
    assert_eq!(value["variants"].as_array().unwrap().len(), 3);
}
