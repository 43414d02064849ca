mod common;

use std::fs;
use std::path::Path;

use abd_core::classifier::{train, Algorithm};
use abd_core::dataset::LabeledSet;
use abd_core::framing::FrameConfig;
use abd_tools::model_io::{load_model, parse_model, save_model, to_json_exact, ModelFile};

#[test]
fn every_model_round_trips_bit_for_bit() {
    let cohort = common::small_cohort(2, 9);
    let set = LabeledSet::from_records(&cohort, &FrameConfig::default()).unwrap();
    let configs = common::quick_configs();
    let dir = tempfile::tempdir().unwrap();
    for algo in Algorithm::ALL {
        let model = train(algo, &set, &configs, 5).unwrap();
        let file = ModelFile::new(model, configs.clone(), 15, 5, vec!["p01".into(), "p02".into()]);
        let path = dir.path().join(format!("{algo}.json"));
        save_model(&file, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, file, "{algo}");
        let a = file.model.predict(&set.x).unwrap();
        let b = back.model.predict(&set.x).unwrap();
        assert_eq!(a, b);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"format_version\": 1"));
        assert!(text.contains("\"lambda\": 1.0000000000000001e-1"));
        assert!(text.contains(&format!("\"algorithm\": \"{algo}\"")));
    }
}

#[test]
fn floats_carry_seventeen_digits() {
    let v = vec![0.1f64, -2.5e-300, 1.0 / 3.0, 12345.678];
    let text = String::from_utf8(to_json_exact(&v).unwrap()).unwrap();
    for line in text.lines().filter(|l| l.contains('e')) {
        let digits = line.trim().trim_end_matches(',').split('e').next().unwrap();
        let sig = digits.chars().filter(|c| c.is_ascii_digit()).count();
        assert_eq!(sig, 17, "{line}");
    }
    let back: Vec<f64> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, v);
}

#[test]
fn version_gate() {
    let src = Path::new("m.json");
    let e = parse_model(r#"{"format_version": 2}"#, src).unwrap_err();
    assert!(e.to_string().contains("unsupported format_version 2"));
    assert_eq!(e.exit_code(), 2);
    assert!(parse_model(r#"{"algorithm": "PLN"}"#, src).unwrap_err().to_string().contains("missing format_version"));
    assert!(parse_model("not json", src).is_err());
}
