use std::path::PathBuf;

use arlang_core::runtime::{run_captured, StopReason};
use arlang_core::{load, Program, RuntimeOptions, SchedulerMode};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn program(name: &str) -> Program {
    load(&std::fs::read_to_string(corpus(name)).unwrap()).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(corpus("golden").join(name)).unwrap()
}

fn stdout(name: &str, max_turns: u64, scheduler: SchedulerMode) -> Vec<String> {
    let s = run_captured(
        &program(name),
        RuntimeOptions {
            scheduler,
            seed: Some(1),
            max_turns,
            ..Default::default()
        },
    );
    assert!(s.is_ok(), "{name}: {:?}", s.error);
    s.stdout
}

fn lines(text: &str) -> Vec<String> {
    text.lines().map(str::to_string).collect()
}

#[test]
fn hello_world() {
    assert_eq!(stdout("hello.arl", 0, SchedulerMode::Deterministic), ["Hello World!"]);
}

#[test]
fn reassignment_prints_no() {
    assert_eq!(stdout("basic-expressions.arl", 0, SchedulerMode::Deterministic), ["no"]);
}

#[test]
fn pair_routines_and_methods() {
    assert_eq!(
        stdout("pair.arl", 0, SchedulerMode::Deterministic),
        [
            "length: 3",
            "first: 1",
            "first after set-first!: 10",
            "dotted pair length: 2"
        ]
    );
}

#[test]
fn circular_list_is_rejected() {
    let s = run_captured(&program("circular-list.arl"), RuntimeOptions::default());
    let e = s.error.expect("termination violation");
    assert!(e.error.is_termination(), "{e}");
    assert_eq!(s.stop, StopReason::Error);
    assert_eq!(e.error.member.as_deref(), Some("Pair.length"));
}

#[test]
fn turbine_transcript_matches_golden() {
    let out = stdout("turbine-simulator.arl", 50, SchedulerMode::Deterministic);
    assert_eq!(out, lines(&golden("turbine-simulator.seed1.turns50.out")));
}

#[test]
fn wind_transcript_matches_golden() {
    let out = stdout("wind.arl", 30, SchedulerMode::Deterministic);
    assert_eq!(out, lines(&golden("wind.seed1.turns30.out")));
}

#[test]
fn schedulers_agree_on_monitor_output() {
    // One producer and one consumer: the interleaving cannot change the
    // printed sequence, only its timing.
    let a = stdout("wind.arl", 30, SchedulerMode::Deterministic);
    let b = stdout("wind.arl", 60, SchedulerMode::Concurrent);
    let n = a.len().min(b.len());
    assert!(n > 5);
    assert_eq!(a[..n], b[..n]);
}

#[test]
fn dag_dumps_match_golden() {
    let p = program("reactors.arl");
    for name in ["WindPower", "PowerOutput", "Turbine", "TurbinePowerOutput", "Id"] {
        assert_eq!(p.dag(name).unwrap().dump(), golden(&format!("{name}.dag")), "{name}");
    }
}

#[test]
fn every_compiled_graph_is_well_formed() {
    for file in ["reactors.arl", "turbine-simulator.arl"] {
        for dag in program(file).dags.values() {
            dag.validate().unwrap();
        }
    }
}
