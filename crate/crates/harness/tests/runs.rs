use std::process::Command;

use sacre_harness::{
    aggregate, read_report, run_scenario, write_report, HarnessError, Outcome, RunMetadata, RunOptions, RunReport,
};
use sacre_vehicle::ScenarioKind;

fn options(scale: f64) -> RunOptions {
    RunOptions {
        seed: 42,
        scale,
        realtime: false,
    }
}

fn metadata(replications: u32, scale: f64) -> RunMetadata {
    RunMetadata {
        seed: 42,
        scale,
        replications,
        realtime: false,
    }
}

#[test]
fn zero_replications_give_no_results() {
    let dir = tempfile::tempdir().unwrap();
    let results = run_scenario(ScenarioKind::Us1, 0, options(0.1), dir.path()).unwrap();
    assert!(results.is_empty());
}

#[test]
fn too_small_a_scale_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_scenario(ScenarioKind::Us5, 1, options(0.0005), dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)), "{err}");
}

#[test]
fn active_set_restoration_makes_no_plans() {
    let dir = tempfile::tempdir().unwrap();
    let results = run_scenario(ScenarioKind::Us4b, 2, options(0.05), dir.path()).unwrap();
    for r in &results {
        assert_eq!(r.outcome, Outcome::Adapted);
        assert_eq!(r.change_plans, 0);
        assert_eq!(r.adaptations[0].operationalization, "+facePosition");
    }
}

#[test]
fn report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut results = run_scenario(ScenarioKind::Us1, 2, options(0.05), dir.path()).unwrap();
    results.extend(run_scenario(ScenarioKind::Us4b, 1, options(0.05), dir.path()).unwrap());
    assert!(results.iter().all(|r| r.outcome == Outcome::Adapted));
    assert!(results.iter().flat_map(|r| &r.adaptations).all(|a| a.response_time_ms >= 0.0));
    let metrics = aggregate(metadata(2, 0.05), &results);
    let us4b = metrics.scenarios.iter().find(|s| s.scenario_id == "us4b").unwrap();
    assert_eq!(us4b.stddev_response_ms, Some(0.0));
    assert!(us4b.note.is_some());
    // a single mining scenario gives a single pair: no correlation
    assert!(metrics.ppmcc.is_none() && metrics.ppmcc_note.is_some());

    let report = RunReport { results, metrics };
    write_report(&report, dir.path()).unwrap();
    let back = read_report(dir.path()).unwrap();
    assert_eq!(back, report);
    assert_eq!(aggregate(back.metrics.metadata.clone(), &back.results), report.metrics);
    let csv = std::fs::read_to_string(dir.path().join("adaptations.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + report.results.iter().map(|r| r.adaptations.len()).sum::<usize>());
}

fn sacre(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sacre"))
        .args(args)
        .env_remove("SACRE_LOG")
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let run = sacre(&["run", "--scenario", "us4a", "--replications", "2", "--seed", "3", "--scale", "0.05", "--out", out]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("us4a: 2/2 adapted"));
    assert!(dir.path().join("report.json").exists());

    let stats = sacre(&["stats", "--in", out]);
    assert_eq!(stats.status.code(), Some(0));
    let metrics: serde_json::Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!(metrics["metadata"]["replications"], 2);

    let gen_dir = dir.path().join("gen");
    let gen = sacre(&["gen", "--scenario", "us2", "--seed", "9", "--out", gen_dir.to_str().unwrap()]);
    assert_eq!(gen.status.code(), Some(0));
    assert!(gen_dir.join("sensors.csv").exists());

    assert_eq!(sacre(&["run", "--scenario", "us9", "--out", out]).status.code(), Some(2));
    assert_eq!(sacre(&["run", "--scenario", "us1", "--scale", "1.5", "--out", out]).status.code(), Some(2));
    assert_eq!(sacre(&["run", "--scenario", "us5", "--scale", "0.0005", "--out", out]).status.code(), Some(2));
    assert_eq!(sacre(&["stats", "--in", dir.path().join("missing").to_str().unwrap()]).status.code(), Some(2));

    let broken = dir.path().join("broken");
    std::fs::create_dir_all(&broken).unwrap();
    std::fs::write(broken.join("report.json"), "{").unwrap();
    assert_eq!(sacre(&["stats", "--in", broken.to_str().unwrap()]).status.code(), Some(1));

    let noisy = Command::new(env!("CARGO_BIN_EXE_sacre"))
        .args(["stats", "--in", out])
        .env("SACRE_LOG", "verbose")
        .output()
        .unwrap();
    assert_eq!(noisy.status.code(), Some(2));
}
