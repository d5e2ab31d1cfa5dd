use std::path::PathBuf;

use surplus::importance::{smssm, SmssmConfig};
use surplus::learner::{cv_loss, ExternalSpec};
use surplus::{CoalitionMask, Dataset, DgpId, DgpSpec, Error, LearnerSpec, LossMetric, SplitPlan};

fn mock(mode: Option<&str>) -> LearnerSpec {
    let script: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", "mock_learner.py"].iter().collect();
    let mut cmd = vec!["python3".to_string(), script.display().to_string()];
    cmd.extend(mode.map(str::to_string));
    let mut spec = ExternalSpec::new(cmd);
    spec.timeout_secs = 20;
    LearnerSpec::external(spec)
}

fn small(n: usize) -> Dataset {
    DgpSpec::new(DgpId::DS5, n, 4).generate().unwrap()
}

#[test]
fn predictions_match_builtin_ols() {
    let ds = small(60);
    let mask = CoalitionMask::from_indices(3, [0, 2]);
    let ext = mock(None).fit(&ds, &mask).unwrap();
    let ols = LearnerSpec::ols().fit(&ds, &mask).unwrap();
    let a = ext.predict_dataset(&ds).unwrap();
    let b = ols.predict_dataset(&ds).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
    assert!((ext.train_loss() - ols.train_loss()).abs() < 1e-8);
}

#[test]
fn masked_columns_cannot_leak() {
    let ds = small(40);
    let model = mock(None).fit(&ds, &CoalitionMask::from_indices(3, [0])).unwrap();
    let base = ds.columns().to_vec();
    let mut other = base.clone();
    other[1] = vec![1e6; ds.n()];
    other[2] = vec![-3.0; ds.n()];
    assert_eq!(model.predict(&base).unwrap(), model.predict(&other).unwrap());
}

#[test]
fn cross_validation_through_the_protocol() {
    let ds = small(80);
    let plan = SplitPlan::kfold(4, 1);
    let full = CoalitionMask::full(3);
    let ext = cv_loss(&mock(None), &ds, &full, &plan, LossMetric::Mse).unwrap();
    let ols = cv_loss(&LearnerSpec::ols(), &ds, &full, &plan, LossMetric::Mse).unwrap();
    assert!((ext - ols).abs() < 1e-8);
}

#[test]
fn smssm_runs_unchanged_over_an_external_learner() {
    let ds = small(60);
    let mut cfg = SmssmConfig::new(mock(None));
    cfg.k = 4;
    cfg.cv = SplitPlan::kfold(3, 2);
    let ext = smssm(&ds, &cfg).unwrap();
    cfg.learner = LearnerSpec::ols();
    let ols = smssm(&ds, &cfg).unwrap();
    for (a, b) in ext.phi.iter().zip(&ols.phi) {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
}

fn protocol_failure(mode: &str, timeout: Option<u64>) -> (String, String) {
    let ds = small(20);
    let mut spec = mock(Some(mode));
    if let (Some(t), surplus::LearnerKind::External(e)) = (timeout, &mut spec.kind) {
        e.timeout_secs = t;
    }
    let err = spec
        .fit(&ds, &CoalitionMask::full(3))
        .and_then(|m| m.predict_dataset(&ds))
        .expect_err(mode);
    match err {
        Error::Protocol { message, transcript } => (message, transcript),
        other => panic!("{mode}: unexpected error {other}"),
    }
}

#[test]
fn protocol_violations_are_reported_with_transcript() {
    let (msg, transcript) = protocol_failure("--wrong-id", None);
    assert!(msg.contains("does not match"), "{msg}");
    assert!(transcript.contains("> {") && transcript.contains("< {"), "{transcript}");

    let (msg, _) = protocol_failure("--garbage", None);
    assert!(msg.contains("malformed"), "{msg}");

    let (msg, _) = protocol_failure("--exit", None);
    assert!(msg.contains("exited"), "{msg}");

    let (msg, _) = protocol_failure("--fail-fit", None);
    assert!(msg.contains("refused"), "{msg}");

    let (msg, _) = protocol_failure("--short", None);
    assert!(msg.contains("predictions"), "{msg}");
}

#[test]
fn unresponsive_learner_times_out() {
    let start = std::time::Instant::now();
    let (msg, _) = protocol_failure("--hang", Some(1));
    assert!(msg.contains("no reply"), "{msg}");
    assert!(start.elapsed().as_secs() < 10);
}

#[test]
fn missing_program_is_a_protocol_error() {
    let spec = LearnerSpec::external(ExternalSpec::new(vec!["/nonexistent/learner".into()]));
    let err = spec.fit(&small(20), &CoalitionMask::full(3)).unwrap_err();
    assert!(matches!(err, Error::Protocol { .. }));
    assert!(LearnerSpec::external(ExternalSpec::new(vec![])).validate().is_err());
}
