use std::path::{Path, PathBuf};
use std::time::Duration;

use coalshap::adapter::{probe, AdapterError, AdapterSpec, Backend, Predictor, SubprocessPredictor, SyntheticModelKind, SyntheticPredictor};
use coalshap::shapley::Coalition;
use coalshap::synthetic::{generate_study, StudyConfig};
use coalshap::volume::{read_mcv, MultiContrastVolume};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn stub(mode: &str, timeout: Duration, max_parallel: usize) -> SubprocessPredictor {
    let command = ["python3", "stub_adapter.py", mode, "1"].map(String::from).to_vec();
    SubprocessPredictor::new("stub", command, max_parallel, timeout, &data_dir()).unwrap()
}

fn subject() -> (tempfile::TempDir, MultiContrastVolume) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = StudyConfig {
        folds: 1,
        subjects_per_fold: 1,
        base_hidden: 0.3,
        ..StudyConfig::default()
    };
    let study = generate_study(&cfg, dir.path()).unwrap();
    let input = read_mcv(dir.path().join(&study.manifest.folds[0].subjects[0].input)).unwrap();
    (dir, input)
}

#[test]
fn handshake_reports_protocol_and_parallelism() {
    let report = stub("ok", Duration::from_secs(10), 3).probe();
    assert!(report.reachable, "{report:?}");
    assert_eq!(report.protocol, Some(1));
    assert_eq!(report.max_parallel, Some(3));
}

#[test]
fn subprocess_matches_in_process_model_on_every_coalition() {
    let (_dir, input) = subject();
    let remote = stub("ok", Duration::from_secs(20), 2);
    let local = SyntheticPredictor::new("local", SyntheticModelKind::UnionReveal, 0, vec![1]).unwrap();
    for c in Coalition::all(4) {
        let a = remote.predict("s", &input, c).unwrap();
        let b = local.predict("s", &input, c).unwrap();
        assert_eq!(a, b, "coalition {:04b}", c.bits());
    }
}

#[test]
fn concurrent_requests_share_a_bounded_pool() {
    let (_dir, input) = subject();
    let remote = stub("ok", Duration::from_secs(20), 2);
    let local = SyntheticPredictor::new("local", SyntheticModelKind::UnionReveal, 0, vec![1]).unwrap();
    std::thread::scope(|s| {
        for bits in 0..8u32 {
            let (remote, local, input) = (&remote, &local, &input);
            s.spawn(move || {
                let c = Coalition::new(bits * 2 + 1, 4).unwrap();
                assert_eq!(remote.predict("s", input, c).unwrap(), local.predict("s", input, c).unwrap());
            });
        }
    });
}

#[test]
fn slow_adapter_times_out() {
    let (_dir, input) = subject();
    let err = stub("slow", Duration::from_millis(500), 1).predict("s", &input, Coalition::full(4)).unwrap_err();
    assert!(matches!(err, AdapterError::AdapterTimeout(_)), "{err}");
}

#[test]
fn crash_surfaces_exit_code_and_stderr() {
    let (_dir, input) = subject();
    let err = stub("crash", Duration::from_secs(10), 1).predict("s", &input, Coalition::full(4)).unwrap_err();
    match err {
        AdapterError::NonzeroExit { code, stderr } => {
            assert_eq!(code, Some(3));
            assert!(stderr.contains("simulated crash"), "{stderr}");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn remote_error_is_reported_and_worker_stays_usable() {
    let (_dir, input) = subject();
    let remote = stub("error", Duration::from_secs(10), 1);
    for _ in 0..2 {
        let err = remote.predict("s", &input, Coalition::full(4)).unwrap_err();
        assert!(matches!(&err, AdapterError::Remote(m) if m == "engine refused"), "{err}");
    }
}

#[test]
fn protocol_mismatch_is_rejected() {
    let (_dir, input) = subject();
    let remote = stub("protocol2", Duration::from_secs(10), 1);
    let report = remote.probe();
    assert!(!report.reachable);
    assert!(report.reason.unwrap().contains("protocol version 2"));
    let err = remote.predict("s", &input, Coalition::full(4)).unwrap_err();
    assert!(matches!(err, AdapterError::ProtocolViolation(_)), "{err}");
}

#[test]
fn malformed_reply_is_a_protocol_violation() {
    let (_dir, input) = subject();
    let err = stub("garbage", Duration::from_secs(10), 1).predict("s", &input, Coalition::full(4)).unwrap_err();
    assert!(matches!(err, AdapterError::ProtocolViolation(_)), "{err}");
}

#[test]
fn wrong_geometry_is_rejected() {
    let (_dir, input) = subject();
    let err = stub("bad_dims", Duration::from_secs(10), 1).predict("s", &input, Coalition::full(4)).unwrap_err();
    assert!(matches!(err, AdapterError::GeometryMismatch { .. }), "{err}");
}

#[test]
fn unreachable_command_probes_without_raising() {
    let spec = AdapterSpec {
        model_id: "missing".into(),
        backend: Backend::Subprocess {
            command: vec!["/nonexistent/engine".into()],
            max_parallel: 1,
        },
        timeout_s: 1.0,
    };
    let report = probe(&spec, &data_dir(), &[1]);
    assert!(!report.reachable);
    assert!(report.reason.unwrap().contains("cannot launch"));
}
