#![allow(dead_code)]

use std::path::Path;

use abd_core::classifier::TrainConfigs;
use abd_core::signal::PatientRecord;
use abd_core::synth::{generate_cohort, SynthConfig};

/// Thirteen short patients with a handful of large events each.
pub fn small_cohort(patients: usize, seed: u64) -> Vec<PatientRecord> {
    let cfg = SynthConfig {
        patients,
        minutes_per_patient: 800,
        target_minority_fraction: 0.006,
        seed,
        ..SynthConfig::easy()
    };
    generate_cohort(&cfg).unwrap()
}

pub fn quick_configs() -> TrainConfigs {
    let mut c = TrainConfigs::default();
    c.pln.n_max = 204;
    c.pln.l_max = 2;
    c.ann.hidden = 16;
    c.ann.epochs = 3;
    c.svm.max_train_points = 600;
    c
}

pub fn abd(args: &[&str]) -> i32 {
    let mut argv = vec!["abd".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    abd_tools::cli::run_cli(argv)
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Config file that shrinks every trainer so CLI runs stay quick.
pub const QUICK_CONFIG: &str = "\
# small trainers for tests
pln.n_max=204
pln.l_max=2
ann.hidden=16
ann.epochs=3
svm.max_train_points=600
";
