use abd_core::classifier::{train, Algorithm, TrainConfigs, TrainedModel};
use abd_core::dataset::LabeledSet;
use abd_core::framing::FrameConfig;
use abd_core::synth::{generate_cohort, SynthConfig};

// Floor pinned from a one-off calibration run (validation FM 0.7958, 4 layers).
const DEFAULT_COHORT_VAL_FM: f64 = 0.79;

#[test]
fn pln_grows_on_default_cohort() {
    let cohort = generate_cohort(&SynthConfig { seed: 42, ..SynthConfig::default() }).unwrap();
    let set = LabeledSet::from_records(&cohort, &FrameConfig::default()).unwrap();
    let TrainedModel::Pln(model) = train(Algorithm::Pln, &set, &TrainConfigs::default(), 42).unwrap() else {
        panic!("expected a PLN model");
    };
    assert!(model.depth() >= 1);
    let val = *model.val_fms.last().unwrap();
    assert!(val >= DEFAULT_COHORT_VAL_FM, "validation FM {val}");
    assert!(model.costs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn models_agree_on_easy_patients() {
    let cfg = SynthConfig {
        patients: 3,
        minutes_per_patient: 1500,
        target_minority_fraction: 0.005,
        seed: 8,
        ..SynthConfig::easy()
    };
    let cohort = generate_cohort(&cfg).unwrap();
    let frame = FrameConfig::default();
    let fit = LabeledSet::from_records(&cohort[..2], &frame).unwrap();
    let test = LabeledSet::from_records(&cohort[2..], &frame).unwrap();
    let mut configs = TrainConfigs::default();
    configs.pln.n_max = 204;
    configs.ann.hidden = 32;
    configs.ann.epochs = 20;
    for algo in Algorithm::ALL {
        let model = train(algo, &fit, &configs, 1).unwrap();
        let pred = model.predict(&test.x).unwrap();
        let counts = abd_core::metrics::confusion_counts(&test.labels(), &pred).unwrap();
        assert!(counts.tp > 0, "{algo}: {counts:?}");
        assert_eq!(train(algo, &fit, &configs, 1).unwrap(), model, "{algo} not deterministic");
    }
}
