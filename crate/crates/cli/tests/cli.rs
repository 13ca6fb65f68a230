use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use pipebot_core::events::{parse_ndjson, EventKind};

fn fixture(name: &str) -> String {
    format!("{}/../core/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn pipebot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipebot")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn plan_prints_reference_listing_and_validates() {
    let kis = fixture("ais_test_env.kis");
    let mission = fixture("reference_mission.json");
    let out = pipebot(&["plan", &kis, &mission]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout.clone()).unwrap(), pipebot_core::fixtures::REFERENCE_PLAN);

    let plan = scratch("reference_plan.txt");
    fs::write(&plan, &out.stdout).unwrap();
    let out = pipebot(&["validate", &kis, &mission, plan.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "OK\n");
}

#[test]
fn validate_rejects_truncated_plan() {
    let text: String = pipebot_core::fixtures::REFERENCE_PLAN.lines().take(5).map(|l| format!("{l}\n")).collect();
    let plan = scratch("short_plan.txt");
    fs::write(&plan, text).unwrap();
    let out = pipebot(&["validate", &fixture("ais_test_env.kis"), &fixture("reference_mission.json"), plan.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("Violation: "));
}

#[test]
fn run_exit_codes_follow_terminal_status() {
    let cases = [("fault_free", 0), ("immovable_p8", 0), ("light_waste", 0), ("immovable_p5", 2), ("stuck_risk", 3)];
    for (name, code) in cases {
        let sc = fixture(&format!("scenarios/{name}.json"));
        let out = pipebot(&["run", &fixture("ais_test_env.kis"), &fixture("reference_mission.json"), "--scenario", &sc]);
        assert_eq!(out.status.code(), Some(code), "{name}");
    }
}

#[test]
fn immovable_p5_log_has_one_replan() {
    let log = scratch("p5.ndjson");
    let out = pipebot(&[
        "run",
        &fixture("ais_test_env.kis"),
        &fixture("reference_mission.json"),
        "--scenario",
        &fixture("scenarios/immovable_p5.json"),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let events = parse_ndjson(&fs::read_to_string(&log).unwrap()).unwrap();
    assert_eq!(events.iter().filter(|e| e.kind == EventKind::Replan).count(), 1);
    assert_eq!(events.last().unwrap().kind, EventKind::Terminal);
}

#[test]
fn same_seed_same_log() {
    let logs: Vec<String> = (0..2)
        .map(|i| {
            let log = scratch(&format!("seeded{i}.ndjson"));
            pipebot(&[
                "run",
                &fixture("ais_test_env.kis"),
                &fixture("reference_mission.json"),
                "--scenario",
                &fixture("scenarios/malfunction.json"),
                "--seed",
                "7",
                "--log",
                log.to_str().unwrap(),
            ]);
            fs::read_to_string(log).unwrap()
        })
        .collect();
    assert!(!logs[0].is_empty());
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn pddl_writes_domain_and_problem() {
    let dir = scratch("pddl");
    let out = pipebot(&["pddl", &fixture("ais_test_env.kis"), &fixture("reference_mission.json"), "--out-dir", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let problem = fs::read_to_string(dir.join("problem.pddl")).unwrap();
    assert!(problem.contains("(:goal (and"));
    assert!(fs::read_to_string(dir.join("domain.pddl")).unwrap().contains("(define (domain"));
}

#[test]
fn usage_and_input_errors_exit_nonzero() {
    let out = pipebot(&["plan"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
    let out = pipebot(&["plan", "missing.kis", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("missing.kis"));
}
