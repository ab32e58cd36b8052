mod common;

use std::path::Path;
use std::process::{Command, Output};

use coalshap::adapter::{AdapterSpec, Backend};
use coalshap::pipeline::RunRecord;
use common::study::{generate, small_config};

fn coalshap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coalshap")).args(args).env_remove("COALSHAP_CACHE_DIR").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn help_lists_every_subcommand() {
    let o = coalshap(&["--help"]);
    assert_eq!(code(&o), 0);
    let t = text(&o);
    for cmd in ["validate", "shapley", "stats", "cluster", "report"] {
        assert!(t.contains(cmd), "{t}");
    }
}

#[test]
fn full_run_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let study = generate(&small_config(), dir.path());
    let m = study.manifest_path.to_str().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();

    let o = coalshap(&["validate", "--manifest", m]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).contains("ok"));

    let o = coalshap(&["report", "--manifest", m, "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(text(&o).contains("\"shapley\""), "{}", text(&o));

    let o = coalshap(&["shapley", "--manifest", m, "--out", out, "--jobs", "2", "--strategy", "zero", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).contains("6 computed"), "{}", text(&o));
    let o = coalshap(&["stats", "--manifest", m, "--out", out, "--mode", "across_folds", "--alpha", "0.01", "--ci-level", "0.95"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let o = coalshap(&["cluster", "--manifest", m, "--out", out, "--k", "2", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let o = coalshap(&["report", "--manifest", m, "--out", out]);
    assert_eq!(code(&o), 0, "{}", text(&o));

    let records = RunRecord::read_all(Path::new(out)).unwrap();
    let commands: Vec<&str> = records.iter().map(|r| r.command.as_str()).collect();
    assert_eq!(commands, ["report", "shapley", "stats", "cluster", "report"]);
    assert_eq!(records[0].status, "error");
    assert!(records[1..].iter().all(|r| r.status == "ok" && r.manifest_hash.len() == 64));

    let o = coalshap(&["stats", "--manifest", m, "--out", out, "--alpha", "1.5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn validation_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let study = generate(&small_config(), dir.path());
    std::fs::remove_file(study.dir.join(&study.manifest.folds[0].subjects[0].gt)).unwrap();
    let o = coalshap(&["validate", "--manifest", study.manifest_path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(text(&o).contains("error[missing_file]"), "{}", text(&o));

    let o = coalshap(&["validate", "--manifest", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn cache_location_follows_environment() {
    let dir = tempfile::tempdir().unwrap();
    let study = generate(&small_config(), dir.path());
    let cache = dir.path().join("elsewhere");
    let out = dir.path().join("run");
    let o = Command::new(env!("CARGO_BIN_EXE_coalshap"))
        .args(["shapley", "--manifest", study.manifest_path.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("COALSHAP_CACHE_DIR", &cache)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(cache.join("union").is_dir());
    assert!(!out.join("cache").exists());
}

#[test]
fn partial_failure_exits_with_three_unless_tolerated() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    let stub = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/stub_adapter.py");
    cfg.models.push(AdapterSpec {
        model_id: "crashing".into(),
        backend: Backend::Subprocess {
            command: vec!["python3".into(), stub.to_string_lossy().into_owned(), "crash".into(), "1".into()],
            max_parallel: 1,
        },
        timeout_s: 20.0,
    });
    let study = generate(&cfg, dir.path());
    let m = study.manifest_path.to_str().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    let o = coalshap(&["shapley", "--manifest", m, "--out", out]);
    assert_eq!(code(&o), 3, "{}", text(&o));
    let o = coalshap(&["shapley", "--manifest", m, "--out", out, "--resume", "--fail-threshold", "0.5"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).contains("6 reused, 6 failed"), "{}", text(&o));
}
