use conceptprobe_core::raven::io::{read_problem, write_problem, IoError};
use conceptprobe_core::raven::model::{Attribute, LayoutKind};
use conceptprobe_core::raven::oracle::solve;
use conceptprobe_core::raven::suites::{iid_specs, probe_specs};
use conceptprobe_core::raven::{sample_problem, Background, ConceptSpec, Family, Strategy, Verdict};
use proptest::prelude::*;

const FIXTURE: &str = include_str!("fixtures/problem_v1.json");

#[test]
fn version_one_fixture_still_reads_and_regenerates() {
    let stored = read_problem(FIXTURE).unwrap();
    let spec = ConceptSpec::new(Family::Arithmetic, &[Attribute::Position], LayoutKind::OutInGrid)
        .with_background(Background::Random);
    let regenerated = sample_problem(&spec, 2024).unwrap();
    assert_eq!(stored, regenerated);
    assert_eq!(write_problem(&regenerated), FIXTURE);
    assert_eq!(solve(&stored), Verdict::Unique(stored.correct_index));
}

#[test]
fn rejects_malformed_documents() {
    let mut v: serde_json::Value = serde_json::from_str(FIXTURE).unwrap();
    v["version"] = 2.into();
    assert!(read_problem(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(FIXTURE).unwrap();
    v["correct_index"] = 8.into();
    let IoError::SchemaViolation { path, .. } = read_problem(&v.to_string()).unwrap_err();
    assert_eq!(path, "correct_index");

    let mut v: serde_json::Value = serde_json::from_str(FIXTURE).unwrap();
    v["answers"][1] = v["answers"][0].clone();
    let IoError::SchemaViolation { path, .. } = read_problem(&v.to_string()).unwrap_err();
    assert_eq!(path, "answers[1]");

    let mut v: serde_json::Value = serde_json::from_str(FIXTURE).unwrap();
    v["context"].as_array_mut().unwrap().pop();
    let IoError::SchemaViolation { path, .. } = read_problem(&v.to_string()).unwrap_err();
    assert_eq!(path, "context");

    let mut v: serde_json::Value = serde_json::from_str(FIXTURE).unwrap();
    v["context"][2]["slots"][0]["angle"] = 30.into();
    let IoError::SchemaViolation { path, .. } = read_problem(&v.to_string()).unwrap_err();
    assert_eq!(path, "context[2].slots[0].angle");

    let mut v: serde_json::Value = serde_json::from_str(FIXTURE).unwrap();
    v["extra"] = true.into();
    assert!(read_problem(&v.to_string()).is_err());

    assert!(read_problem("").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn round_trip(index in 0usize..50, seed in any::<u64>()) {
        let mut specs = probe_specs();
        specs.extend(iid_specs(Strategy::BiasedPerturbation));
        let p = sample_problem(&specs[index], seed).unwrap();
        let text = write_problem(&p);
        let back = read_problem(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(write_problem(&back), text);
    }
}
