//! Runs every bundled scenario and checks the engine's own guarantees:
//! deterministic transcripts, JSON round-tripping, and snapshot replay.

use keynet::harness::scenario::{
    run_scenario, scenario_by_name, scenario_library, Scenario, ScenarioRun,
};
use keynet::harness::World;

fn run(name: &str) -> ScenarioRun {
    let scenario = scenario_by_name(name).expect("scenario exists");
    run_scenario(&scenario).expect("scenario runs")
}

#[test]
fn every_bundled_scenario_passes() {
    for scenario in scenario_library() {
        let run = run_scenario(&scenario).expect("scenario runs");
        for assertion in &run.report.assertions {
            assert!(
                assertion.passed,
                "[{}] failed: {} ({})",
                scenario.name, assertion.label, assertion.detail
            );
        }
        assert!(run.report.passed, "{} failed", scenario.name);
    }
}

#[test]
fn same_seed_gives_identical_transcripts() {
    let a = run("happy-path");
    let b = run("happy-path");
    assert_eq!(a.report.transcript_hash, b.report.transcript_hash);
    assert!(!a.report.transcript_hash.is_empty());

    // A different seed diverges.
    let mut variant = scenario_by_name("happy-path").unwrap();
    variant.world.seed ^= 1;
    let c = run_scenario(&variant).unwrap();
    assert_ne!(a.report.transcript_hash, c.report.transcript_hash);
}

#[test]
fn scenarios_roundtrip_through_json() {
    for scenario in scenario_library() {
        let json = serde_json::to_string_pretty(&scenario).unwrap();
        let back: Scenario = serde_json::from_str(&json).unwrap();
        let a = run_scenario(&scenario).unwrap();
        let b = run_scenario(&back).unwrap();
        assert_eq!(a.report.transcript_hash, b.report.transcript_hash);
    }
}

#[test]
fn unknown_behavior_mode_is_a_config_error() {
    let json = r#"{
        "name": "bad", "description": "",
        "world": { "seed": 1, "behaviors": { "1": "explode" } },
        "assertions": []
    }"#;
    assert!(serde_json::from_str::<Scenario>(json).is_err());
}

#[test]
fn partitions_reject_unknown_targets() {
    let run = run("happy-path");
    let mut world = run.world.unwrap();
    assert!(world.known_actor("node-1"));
    assert!(world.known_actor("gatekeeper-gk1"));
    assert!(world.known_actor("chain:near"));
    assert!(!world.known_actor("node-99"));
    let err = world
        .inject_partition(vec!["node-99".into()], vec!["controller".into()])
        .unwrap_err();
    assert_eq!(err.to_string(), "unknown fault target: node-99");
    world
        .inject_partition(vec!["node-1".into()], vec!["controller".into()])
        .unwrap();
}

#[test]
fn world_snapshot_roundtrips() {
    let run = run("happy-path");
    let world = run.world.expect("world available");
    let snapshot = world.snapshot_json();
    let restored = World::from_snapshot_json(&snapshot).expect("snapshot loads");
    assert_eq!(restored.snapshot_json(), snapshot);
    assert_eq!(
        restored.net.transcript_hash(),
        world.net.transcript_hash()
    );
}
