use mslp_core::error::MslpError;
use mslp_core::fixtures::desk3_raw;
use mslp_core::io::{
    error_status, parse_instance, parse_str, run, write_str, Algorithm, ExitStatus, RunConfig, StateDump,
    SDLP_TRACE_HEADER,
};
use std::path::{Path, PathBuf};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk3.mslp")
}

fn config(algorithm: Algorithm, out: &Path) -> RunConfig {
    RunConfig {
        algorithm,
        instance: fixture(),
        out_dir: out.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn shipped_fixture_matches_the_builtin() {
    assert_eq!(write_str(&parse_instance(fixture()).unwrap()), write_str(&desk3_raw()));
}

#[test]
fn write_then_parse_round_trips() {
    let inst = desk3_raw();
    let text = write_str(&inst);
    assert_eq!(write_str(&parse_str("rt", &text).unwrap()), text);
}

#[test]
fn bad_probability_sum_names_the_stage_and_line() {
    let text = std::fs::read_to_string(fixture()).unwrap();
    let bad = text.replacen("observation 0.4\n", "observation 0.3\n", 1);
    let err = parse_str("bad.mslp", &bad).unwrap_err();
    let line = text.lines().position(|l| l == "support 1").unwrap() + 1;
    match &err {
        MslpError::Parse { file, line: l, msg } => {
            assert_eq!(file, "bad.mslp");
            assert_eq!(*l, line);
            assert!(msg.contains("stage 1"), "{}", msg);
        }
        e => panic!("unexpected {:?}", e),
    }
    assert_eq!(error_status(&err), ExitStatus::Validation);
}

#[test]
fn malformed_number_reports_its_line() {
    let text = std::fs::read_to_string(fixture()).unwrap();
    let bad = text.replacen("decision_cost 0.1 0.2 2", "decision_cost 0.1 zero 2", 1);
    let line = text.lines().position(|l| l.trim() == "decision_cost 0.1 0.2 2").unwrap() + 1;
    match parse_str("bad.mslp", &bad).unwrap_err() {
        MslpError::Parse { line: l, .. } => assert_eq!(l, line),
        e => panic!("unexpected {:?}", e),
    }
}

#[test]
fn extensive_reports_the_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config(Algorithm::Extensive, dir.path())).unwrap();
    assert_eq!(out.status, ExitStatus::Ok);
    let line = out.summary.lines().find(|l| l.starts_with("V* = ")).unwrap();
    let v: f64 = line["V* = ".len()..].parse().unwrap();
    assert!((v - 2.15175).abs() < 1e-9);
    let csv = std::fs::read_to_string(dir.path().join("extensive.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[0], "desk3");
    assert!((row[2].parse::<f64>().unwrap() + 6.04825).abs() < 1e-9);
    assert_eq!(row[3], "9");
}

#[test]
fn sdlp_traces_are_byte_identical_per_seed() {
    let read = |seed: u64| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            iterations: 10,
            seed,
            ..config(Algorithm::Sdlp, dir.path())
        };
        assert_eq!(run(&cfg).unwrap().status, ExitStatus::Ok);
        std::fs::read(dir.path().join("sdlp_trace.csv")).unwrap()
    };
    let a = read(1);
    assert_eq!(a, read(1));
    assert_ne!(a, read(2));
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().any(|l| l == SDLP_TRACE_HEADER));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 11);
}

#[test]
fn resumed_run_matches_an_uninterrupted_one() {
    let full = tempfile::tempdir().unwrap();
    run(&RunConfig {
        iterations: 40,
        ..config(Algorithm::Sdlp, full.path())
    })
    .unwrap();
    let split = tempfile::tempdir().unwrap();
    run(&RunConfig {
        iterations: 20,
        ..config(Algorithm::Sdlp, split.path())
    })
    .unwrap();
    let first = split.path().join("first.json");
    std::fs::rename(split.path().join("sdlp_state.json"), &first).unwrap();
    run(&RunConfig {
        iterations: 20,
        state: Some(first),
        ..config(Algorithm::Sdlp, split.path())
    })
    .unwrap();
    let a = StateDump::load(full.path().join("sdlp_state.json")).unwrap();
    let b = StateDump::load(split.path().join("sdlp_state.json")).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn dump_reload_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    run(&RunConfig {
        iterations: 30,
        ..config(Algorithm::Sdlp, dir.path())
    })
    .unwrap();
    let path = dir.path().join("sdlp_state.json");
    let dump = StateDump::load(&path).unwrap();
    let json = dump.to_json().unwrap();
    assert_eq!(StateDump::from_json(&json).unwrap().to_json().unwrap(), json);
}

#[test]
fn train_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    run(&RunConfig {
        iterations: 200,
        ..config(Algorithm::Sdlp, dir.path())
    })
    .unwrap();
    let out = run(&RunConfig {
        rollouts: 200,
        state: Some(dir.path().join("sdlp_state.json")),
        ..config(Algorithm::Evaluate, dir.path())
    })
    .unwrap();
    assert_eq!(out.status, ExitStatus::Ok);
    let csv = std::fs::read_to_string(dir.path().join("evaluate.csv")).unwrap();
    assert!(csv.lines().count() >= 3);
}

#[test]
fn sddp_writes_trace_and_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&RunConfig {
        compare_oracle: true,
        ..config(Algorithm::Sddp, dir.path())
    })
    .unwrap();
    assert_eq!(out.status, ExitStatus::Ok);
    assert!(dir.path().join("sddp_trace.csv").exists());
    let capped = run(&RunConfig {
        iterations: 3,
        ..config(Algorithm::Sddp, dir.path())
    })
    .unwrap();
    assert_eq!(capped.status, ExitStatus::NotConverged);
}

#[test]
fn configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [
        RunConfig {
            iterations: 0,
            ..config(Algorithm::Sdlp, dir.path())
        },
        RunConfig {
            q: 1.5,
            ..config(Algorithm::Sdlp, dir.path())
        },
        RunConfig {
            sigma: 0.0,
            ..config(Algorithm::Sdlp, dir.path())
        },
    ] {
        let e = run(&cfg).unwrap_err();
        assert_eq!(error_status(&e), ExitStatus::Validation, "{:?}", e);
    }
    let missing = RunConfig {
        instance: dir.path().join("absent.mslp"),
        ..config(Algorithm::Validate, dir.path())
    };
    assert_eq!(error_status(&run(&missing).unwrap_err()), ExitStatus::Solver);
}

#[test]
fn invalid_instance_exits_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture()).unwrap();
    // A zero transition at stage 1 still validates; a recourse matrix that
    // cannot cover every right-hand side does not.
    let bad = text.replacen("    -1 -1 -1\n  rhs 0 0 -3", "    0 0 0\n  rhs 0 0 -3", 1);
    let path = dir.path().join("bad.mslp");
    std::fs::write(&path, bad).unwrap();
    let out = run(&RunConfig {
        instance: path,
        ..config(Algorithm::Validate, dir.path())
    })
    .unwrap();
    assert_eq!(out.status, ExitStatus::Validation, "{}", out.summary);
}
