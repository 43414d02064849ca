mod common;

use std::fs;

use abd_core::classifier::TrainedModel;
use abd_tools::model_io::load_model;
use common::{abd, p, read, QUICK_CONFIG};

#[test]
fn synth_writes_thirteen_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cohort");
    assert_eq!(abd(&["synth", "--patients", "13", "--minutes", "5760", "--seed", "42", "--out", p(&out)]), 0);
    let csvs = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 13);
    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "synth");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["config"]["synth"]["minutes_per_patient"], 5760);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 13);

    let again = dir.path().join("again");
    assert_eq!(abd(&["synth", "--patients", "13", "--minutes", "5760", "--seed", "42", "--out", p(&again)]), 0);
    for f in ["p01.csv", "p13.csv"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap());
    }
}

#[test]
fn train_evaluate_loo_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cohort = d.join("cohort");
    let cfg = d.join("quick.cfg");
    fs::write(&cfg, QUICK_CONFIG).unwrap();
    assert_eq!(abd(&["synth", "--patients", "3", "--minutes", "800", "--fraction", "0.006", "--easy", "--seed", "1", "--out", p(&cohort)]), 0);

    let model = d.join("models/pln.json");
    assert_eq!(abd(&["train", "--algo", "pln", "--cohort", p(&cohort), "--seed", "2", "--out", p(&model), "--config", p(&cfg)]), 0);
    let file = load_model(&model).unwrap();
    assert!(matches!(file.model, TrainedModel::Pln(_)));
    assert_eq!(file.configs.pln.n_max, 204);
    assert!(d.join("models/pln.json.manifest.json").exists());
    let files = [p(&cohort.join("p01.csv")).to_string(), p(&cohort.join("p02.csv")).to_string()];
    let svm = d.join("svm.json");
    assert_eq!(abd(&["train", "--algo", "svm", "--files", &files[0], &files[1], "--out", p(&svm)]), 0);
    assert_eq!(load_model(&svm).unwrap().trained_on, ["p01", "p02"]);
    assert_eq!(abd(&["evaluate", "--model", p(&svm), "--patient", p(&cohort.join("p03.csv"))]), 0);

    let mut outs = Vec::new();
    for algo in ["pln", "svm", "ann"] {
        let out = d.join(format!("loo_{algo}"));
        assert_eq!(abd(&["loo", "--algo", algo, "--cohort", p(&cohort), "--seed", "42", "--out", p(&out), "--config", p(&cfg)]), 0);
        for f in ["report.csv", "aggregate.csv", "failures.csv", "pr_plane.csv", "summary.txt", "manifest.json"] {
            assert!(out.join(f).exists(), "{algo}: {f}");
        }
        assert_eq!(read(&out.join("report.csv")).lines().count(), 1 + 3);
        outs.push(out);
    }
    let rep = d.join("report");
    assert_eq!(abd(&["report", "--inputs", p(&outs[0]), p(&outs[1]), p(&outs[2]), "--out", p(&rep)]), 0);
    let plane = read(&rep.join("pr_plane.csv"));
    assert_eq!(plane.lines().count(), 1 + 3 * 4);
    assert_eq!(plane.lines().next().unwrap(), "algorithm,scope,patient_id,recall,precision");
    let agg = read(&rep.join("aggregate.csv"));
    assert_eq!(agg.lines().next().unwrap(), "algorithm,fm_mean,fm_std,recall_mean,precision_mean,n_trials,n_failed");
    assert_eq!(agg.lines().count(), 4);
    assert!(read(&rep.join("summary.txt")).contains(" ± "));
}

#[test]
fn timing_flag_controls_train_seconds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cohort = d.join("cohort");
    assert_eq!(abd(&["synth", "--patients", "2", "--minutes", "600", "--fraction", "0.01", "--seed", "3", "--out", p(&cohort)]), 0);
    let plain = d.join("plain");
    let timed = d.join("timed");
    assert_eq!(abd(&["loo", "--algo", "svm", "--cohort", p(&cohort), "--out", p(&plain)]), 0);
    assert_eq!(abd(&["loo", "--algo", "svm", "--cohort", p(&cohort), "--out", p(&timed), "--timing"]), 0);
    let last = |s: String| s.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect::<Vec<_>>();
    assert!(last(read(&plain.join("report.csv"))).iter().all(|v| v == "0"));
    assert!(last(read(&timed.join("report.csv"))).iter().all(|v| v.parse::<f64>().unwrap() > 0.0));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("c.cfg");
    fs::write(&cfg, "seed = 7\nsynth.hr_baseline=140\n").unwrap();
    let a = d.join("a");
    let b = d.join("b");
    assert_eq!(abd(&["synth", "--patients", "1", "--minutes", "100", "--seed", "1", "--out", p(&a), "--config", p(&cfg)]), 0);
    assert_eq!(abd(&["synth", "--patients", "1", "--minutes", "100", "--seed", "7", "--out", p(&b), "--config", p(&cfg)]), 0);
    assert_eq!(fs::read(a.join("p01.csv")).unwrap(), fs::read(b.join("p01.csv")).unwrap());
    let m: serde_json::Value = serde_json::from_str(&read(&a.join("manifest.json"))).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["synth"]["hr_baseline"], 140.0);

    fs::write(&cfg, "pln.no_such_knob=1\n").unwrap();
    assert_eq!(abd(&["synth", "--out", p(&a), "--config", p(&cfg)]), 1);
    fs::write(&cfg, "just words\n").unwrap();
    assert_eq!(abd(&["synth", "--out", p(&a), "--config", p(&cfg)]), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(abd(&["--help"]), 0);
    assert_eq!(abd(&["frobnicate"]), 1);
    assert_eq!(abd(&["loo", "--algo", "pln"]), 1);
    assert_eq!(abd(&["loo", "--algo", "knn", "--cohort", "x", "--out", "y"]), 1);
    assert_eq!(abd(&["synth", "--minutes", "10", "--out", p(&d.join("s"))]), 1);

    assert_eq!(abd(&["loo", "--algo", "pln", "--cohort", p(&d.join("missing")), "--out", p(&d.join("o"))]), 4);

    let bad = d.join("bad");
    fs::create_dir(&bad).unwrap();
    fs::write(bad.join("p01.csv"), "minute,hr_bpm,spo2_pct,event\n0,150,97,0\n2,150,97,0\n").unwrap();
    assert_eq!(abd(&["train", "--algo", "svm", "--cohort", p(&bad), "--out", p(&d.join("m.json"))]), 2);

    let quiet = d.join("quiet");
    let cfg = d.join("z.cfg");
    fs::write(&cfg, "synth.target_minority_fraction=0\nsynth.min_events_per_patient=0\n").unwrap();
    assert_eq!(abd(&["synth", "--patients", "2", "--minutes", "300", "--out", p(&quiet), "--config", p(&cfg)]), 0);
    assert_eq!(abd(&["train", "--algo", "ann", "--cohort", p(&quiet), "--out", p(&d.join("m.json"))]), 3);
    assert_eq!(abd(&["loo", "--algo", "svm", "--cohort", p(&quiet), "--out", p(&d.join("q"))]), 3);
    assert!(d.join("q/failures.csv").exists());
}
