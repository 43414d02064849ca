//! Patient-wise leave-one-out evaluation and its report files.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use abd_core::classifier::{train, Algorithm, TrainConfigs};
use abd_core::dataset::{loo_partitions, LabeledSet, Normalizer, Partition};
use abd_core::framing::{Class, FrameConfig};
use abd_core::metrics::{confusion_counts, fm_index, precision_recall, summarize_trials, ConfusionCounts};
use abd_core::rng::derive_seed_str;
use abd_core::signal::PatientRecord;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{csv_error, ToolError, ToolResult};

pub const REPORT_HEADER: [&str; 10] = [
    "algorithm",
    "patient_id",
    "tp",
    "fp",
    "fn",
    "tn",
    "precision",
    "recall",
    "fm",
    "train_seconds",
];
pub const AGGREGATE_HEADER: [&str; 7] = [
    "algorithm",
    "fm_mean",
    "fm_std",
    "recall_mean",
    "precision_mean",
    "n_trials",
    "n_failed",
];
pub const PR_PLANE_HEADER: [&str; 5] = ["algorithm", "scope", "patient_id", "recall", "precision"];
pub const FAILURES_HEADER: [&str; 3] = ["algorithm", "patient_id", "reason"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub test_patient: String,
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub fm: f64,
    pub train_seconds: f64,
    pub model_descriptor: String,
    /// Patients whose frames the model saw; empty when read back from CSV.
    pub train_patients: Vec<String>,
    /// Normalizer fitted in this trial; absent when read back from CSV.
    pub normalizer: Option<Normalizer>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub test_patient: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortReport {
    pub algorithm: Algorithm,
    pub trials: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
    pub fm_mean: f64,
    pub fm_std: f64,
    pub recall_mean: f64,
    pub precision_mean: f64,
}

impl CohortReport {
    /// Recomputes the aggregates from the successful trials (NaN if none).
    pub fn from_trials(algorithm: Algorithm, trials: Vec<TrialResult>, failures: Vec<TrialFailure>) -> Self {
        let fms: Vec<f64> = trials.iter().map(|t| t.fm).collect();
        let (fm_mean, fm_std) = summarize_trials(&fms).map_or((f64::NAN, f64::NAN), |s| (s.mean, s.std));
        let mean = |f: fn(&TrialResult) -> f64| {
            if trials.is_empty() {
                f64::NAN
            } else {
                trials.iter().map(f).sum::<f64>() / trials.len() as f64
            }
        };
        CohortReport {
            algorithm,
            recall_mean: mean(|t| t.recall),
            precision_mean: mean(|t| t.precision),
            trials,
            failures,
            fm_mean,
            fm_std,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LooOptions {
    pub frame: FrameConfig,
    pub configs: TrainConfigs,
    pub seed: u64,
    pub jobs: usize,
}

fn run_trial(
    cohort: &[PatientRecord],
    part: &Partition,
    algorithm: Algorithm,
    opts: &LooOptions,
) -> Result<TrialResult, String> {
    let test_record = cohort
        .iter()
        .find(|r| r.patient_id == part.test)
        .ok_or_else(|| format!("unknown patient {}", part.test))?;
    let test = LabeledSet::from_records([test_record], &opts.frame).map_err(|e| e.to_string())?;
    if test.class_counts().0 == 0 {
        return Err("no positive instances".into());
    }
    let train_records = cohort.iter().filter(|r| part.train.contains(&r.patient_id));
    let train_set = LabeledSet::from_records(train_records, &opts.frame).map_err(|e| e.to_string())?;
    if train_set.patients().iter().any(|p| **p == *part.test) {
        return Err("test patient frames leaked into training".into());
    }
    let seed = derive_seed_str(opts.seed, &part.test);
    let started = Instant::now();
    let model = train(algorithm, &train_set, &opts.configs, seed).map_err(|e| format!("training: {e}"))?;
    let train_seconds = started.elapsed().as_secs_f64();
    let pred: Vec<Class> = model.predict(&test.x).map_err(|e| e.to_string())?;
    let counts = confusion_counts(&test.labels(), &pred).map_err(|e| e.to_string())?;
    let (precision, recall) = precision_recall(&counts).map_err(|e| e.to_string())?;
    let fm = fm_index(&counts).map_err(|e| e.to_string())?;
    let descriptor = match algorithm {
        Algorithm::Pln => serde_json::to_string(&opts.configs.pln),
        Algorithm::Svm => serde_json::to_string(&opts.configs.svm),
        Algorithm::Ann => serde_json::to_string(&opts.configs.ann),
    }
    .unwrap_or_default();
    Ok(TrialResult {
        test_patient: part.test.clone(),
        counts,
        precision,
        recall,
        fm,
        train_seconds,
        model_descriptor: format!("{algorithm} {descriptor}"),
        train_patients: part.train.clone(),
        normalizer: Some(model.normalizer().clone()),
    })
}

/// Runs one trial per patient on a pool of `opts.jobs` threads. Failed
/// trials are listed in the report instead of aborting the run.
pub fn run_loo(cohort: &[PatientRecord], algorithm: Algorithm, opts: &LooOptions) -> ToolResult<CohortReport> {
    let parts = loo_partitions(cohort).map_err(|e| ToolError::Usage(format!("cohort: {e}")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| ToolError::Usage(format!("thread pool: {e}")))?;
    let outcomes: Vec<(String, Result<TrialResult, String>)> = pool.install(|| {
        parts
            .par_iter()
            .map(|p| (p.test.clone(), run_trial(cohort, p, algorithm, opts)))
            .collect()
    });
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for (patient, outcome) in outcomes {
        match outcome {
            Ok(t) => trials.push(t),
            Err(reason) => failures.push(TrialFailure {
                test_patient: patient,
                reason,
            }),
        }
    }
    Ok(CohortReport::from_trials(algorithm, trials, failures))
}

fn writer(path: &Path) -> ToolResult<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| ToolError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> ToolResult<()> {
    w.flush().map_err(|e| ToolError::io(path, e))
}

/// Per-trial rows. `train_seconds` is written as 0 unless `timing` is set,
/// so that reports stay byte-identical across runs by default.
pub fn write_report_csv(report: &CohortReport, path: &Path, timing: bool) -> ToolResult<()> {
    let mut w = writer(path)?;
    w.write_record(REPORT_HEADER).map_err(|e| csv_error(path, e))?;
    for t in &report.trials {
        let c = &t.counts;
        let secs = if timing { t.train_seconds } else { 0.0 };
        w.write_record([
            report.algorithm.to_string(),
            t.test_patient.clone(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            c.tn.to_string(),
            t.precision.to_string(),
            t.recall.to_string(),
            t.fm.to_string(),
            secs.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    finish(w, path)
}

pub fn write_failures_csv(report: &CohortReport, path: &Path) -> ToolResult<()> {
    let mut w = writer(path)?;
    w.write_record(FAILURES_HEADER).map_err(|e| csv_error(path, e))?;
    for f in &report.failures {
        w.write_record([report.algorithm.to_string(), f.test_patient.clone(), f.reason.clone()])
            .map_err(|e| csv_error(path, e))?;
    }
    finish(w, path)
}

pub fn write_aggregate_csv(reports: &[CohortReport], path: &Path) -> ToolResult<()> {
    let mut w = writer(path)?;
    w.write_record(AGGREGATE_HEADER).map_err(|e| csv_error(path, e))?;
    for r in reports {
        w.write_record([
            r.algorithm.to_string(),
            r.fm_mean.to_string(),
            r.fm_std.to_string(),
            r.recall_mean.to_string(),
            r.precision_mean.to_string(),
            r.trials.len().to_string(),
            r.failures.len().to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    finish(w, path)
}

/// Recall-precision plane: one `patient` row per trial and one `aggregate`
/// row (mean recall, mean precision) per algorithm.
pub fn emit_pr_plane(reports: &[CohortReport], path: &Path) -> ToolResult<()> {
    if reports.is_empty() {
        return Err(ToolError::Usage("no reports to plot".into()));
    }
    let mut w = writer(path)?;
    w.write_record(PR_PLANE_HEADER).map_err(|e| csv_error(path, e))?;
    for r in reports {
        for t in &r.trials {
            w.write_record([
                r.algorithm.to_string(),
                "patient".into(),
                t.test_patient.clone(),
                t.recall.to_string(),
                t.precision.to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.write_record([
            r.algorithm.to_string(),
            "aggregate".into(),
            String::new(),
            r.recall_mean.to_string(),
            r.precision_mean.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    finish(w, path)
}

/// Reads back a report written by [`write_report_csv`] (plus the failures
/// file next to it, if present) and recomputes the aggregates.
pub fn read_report_dir(dir: &Path) -> ToolResult<CohortReport> {
    let path = dir.join("report.csv");
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let header = rdr.headers().map_err(|e| csv_error(&path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != REPORT_HEADER {
        return Err(ToolError::data(&path, "unexpected report header"));
    }
    let mut algorithm = None;
    let mut trials = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(&path, e))?;
        let row = i + 1;
        let bad = || ToolError::data(&path, format!("malformed report row {row}"));
        let algo: Algorithm = rec[0].parse().map_err(|_| bad())?;
        if *algorithm.get_or_insert(algo) != algo {
            return Err(ToolError::data(&path, format!("mixed algorithms at row {row}")));
        }
        let int = |k: usize| rec[k].parse::<usize>().map_err(|_| bad());
        let real = |k: usize| rec[k].parse::<f64>().map_err(|_| bad());
        trials.push(TrialResult {
            test_patient: rec[1].to_string(),
            counts: ConfusionCounts {
                tp: int(2)?,
                fp: int(3)?,
                fn_: int(4)?,
                tn: int(5)?,
            },
            precision: real(6)?,
            recall: real(7)?,
            fm: real(8)?,
            train_seconds: real(9)?,
            model_descriptor: String::new(),
            train_patients: Vec::new(),
            normalizer: None,
        });
    }
    let mut failures = Vec::new();
    let fpath = dir.join("failures.csv");
    if fpath.exists() {
        let mut rdr = csv::Reader::from_path(&fpath).map_err(|e| csv_error(&fpath, e))?;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(&fpath, e))?;
            let algo: Algorithm = rec[0].parse().map_err(|_| ToolError::data(&fpath, "bad algorithm"))?;
            algorithm.get_or_insert(algo);
            failures.push(TrialFailure {
                test_patient: rec[1].to_string(),
                reason: rec[2].to_string(),
            });
        }
    }
    let algorithm = algorithm.ok_or_else(|| ToolError::data(&path, "empty report"))?;
    Ok(CohortReport::from_trials(algorithm, trials, failures))
}

/// `mean ± std` table, one line per algorithm.
pub fn summary_table(reports: &[CohortReport]) -> String {
    let mut out = String::from("algorithm  FM (mean ± std)  trials  failed\n");
    for r in reports {
        out.push_str(&format!(
            "{:<9}  {:.2} ± {:.2}      {:>6}  {:>6}\n",
            r.algorithm.name(),
            r.fm_mean,
            r.fm_std,
            r.trials.len(),
            r.failures.len()
        ));
    }
    if reports.iter().any(|r| r.algorithm == Algorithm::Svm) {
        out.push_str("note: SVM fits a stratified subsample of each balanced training fold (svm.max_train_points in the manifest)\n");
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> ToolResult<()> {
    let mut f = fs::File::create(path).map_err(|e| ToolError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| ToolError::io(path, e))
}
