//! The `abd` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use abd_core::classifier::{train, Algorithm};
use abd_core::dataset::LabeledSet;
use abd_core::framing::FrameConfig;
use abd_core::metrics::{confusion_counts, fm_index, precision_recall};
use abd_core::signal::PatientRecord;
use abd_core::synth::{generate_cohort, SynthConfig};
use clap::{Args, Parser, Subcommand};

use crate::config::{apply_file, RunConfig};
use crate::error::{ToolError, ToolResult};
use crate::harness::{
    emit_pr_plane, read_report_dir, run_loo, summary_table, write_aggregate_csv, write_failures_csv,
    write_report_csv, write_text, LooOptions,
};
use crate::manifest::RunManifest;
use crate::model_io::{load_model, save_model, ModelFile};
use crate::signal_io::{load_cohort, load_patient_csv_with, save_cohort};

#[derive(Debug, Parser)]
#[command(name = "abd", version, about = "ABD-event detection on two-channel HR/SpO2 recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic cohort (one CSV per patient plus manifest.json).
    Synth(SynthArgs),
    /// Train one model on a cohort directory or a list of patient files.
    Train(TrainArgs),
    /// Score a saved model on one patient file.
    Evaluate(EvaluateArgs),
    /// Patient-wise leave-one-out run for one algorithm.
    Loo(LooArgs),
    /// Merge several `loo` output directories into one recall-precision plane.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Flat key=value file; its entries override flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 13)]
    patients: usize,
    #[arg(long, default_value_t = 5760)]
    minutes: usize,
    /// Target fraction of event frames.
    #[arg(long)]
    fraction: Option<f64>,
    /// Large-amplitude, short events.
    #[arg(long)]
    easy: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    algo: Algorithm,
    #[arg(long, conflicts_with = "files", required_unless_present = "files")]
    cohort: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    files: Vec<PathBuf>,
    /// Output model file (JSON).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    patient: PathBuf,
}

#[derive(Debug, Args)]
struct LooArgs {
    #[arg(long)]
    algo: Algorithm,
    #[arg(long)]
    cohort: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write measured training seconds instead of 0.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// `loo` output directories.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn resolve(common: &Common, mut base: RunConfig) -> ToolResult<RunConfig> {
    base.seed = common.seed;
    match &common.config {
        Some(path) => apply_file(&base, path),
        None => Ok(base),
    }
}

fn create_dir(dir: &Path) -> ToolResult<()> {
    fs::create_dir_all(dir).map_err(|e| ToolError::io(dir, e))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn frame_config(cfg: &RunConfig) -> ToolResult<FrameConfig> {
    FrameConfig::new(cfg.frame_len).map_err(|e| ToolError::Usage(e.to_string()))
}

fn cmd_synth(args: &SynthArgs, argv: &[String]) -> ToolResult<()> {
    let mut base = RunConfig::default();
    let defaults = if args.easy { SynthConfig::easy() } else { SynthConfig::default() };
    base.synth = SynthConfig {
        patients: args.patients,
        minutes_per_patient: args.minutes,
        target_minority_fraction: args.fraction.unwrap_or(defaults.target_minority_fraction),
        ..defaults
    };
    let mut cfg = resolve(&args.common, base)?;
    cfg.synth.seed = cfg.seed;
    cfg.synth.frame_len = cfg.frame_len;
    let cohort = generate_cohort(&cfg.synth).map_err(|e| ToolError::Usage(format!("synth: {e}")))?;
    let files = save_cohort(&cohort, &args.out)?;
    let mut manifest = RunManifest::new("synth", argv, &cfg);
    manifest.outputs = files.iter().map(|p| file_name(p)).collect();
    manifest.write(&args.out.join("manifest.json"))?;
    println!("wrote {} patients to {}", cohort.len(), args.out.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs, argv: &[String]) -> ToolResult<()> {
    let cfg = resolve(&args.common, RunConfig::default())?;
    let frame = frame_config(&cfg)?;
    let records: Vec<PatientRecord> = match &args.cohort {
        Some(dir) => load_cohort(dir, frame.l)?,
        None => args
            .files
            .iter()
            .map(|p| load_patient_csv_with(p, frame.l))
            .collect::<ToolResult<_>>()?,
    };
    let set = LabeledSet::from_records(&records, &frame).map_err(|e| ToolError::data(&args.out, e.to_string()))?;
    let model = train(args.algo, &set, &cfg.train_configs(), cfg.seed).map_err(|e| ToolError::Training(e.to_string()))?;
    let ids = records.iter().map(|r| r.patient_id.clone()).collect();
    let file = ModelFile::new(model, cfg.train_configs(), frame.l, cfg.seed, ids);
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_model(&file, &args.out)?;
    let mut manifest = RunManifest::new("train", argv, &cfg);
    manifest.inputs = records.iter().map(|r| r.patient_id.clone()).collect();
    manifest.outputs = vec![file_name(&args.out)];
    let mut mpath = args.out.clone().into_os_string();
    mpath.push(".manifest.json");
    manifest.write(Path::new(&mpath))?;
    if let abd_core::classifier::TrainedModel::Pln(m) = &file.model {
        println!(
            "PLN: {} layer(s), validation FM {:.4}",
            m.depth(),
            m.val_fms.last().copied().unwrap_or(f64::NAN)
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> ToolResult<()> {
    let file = load_model(&args.model)?;
    let frame = FrameConfig::new(file.frame_len).map_err(|e| ToolError::data(&args.model, e.to_string()))?;
    let record = load_patient_csv_with(&args.patient, frame.l)?;
    let set = LabeledSet::from_records([&record], &frame).map_err(|e| ToolError::data(&args.patient, e.to_string()))?;
    let pred = file
        .model
        .predict(&set.x)
        .map_err(|e| ToolError::data(&args.patient, e.to_string()))?;
    let c = confusion_counts(&set.labels(), &pred).map_err(|e| ToolError::data(&args.patient, e.to_string()))?;
    println!("patient_id,tp,fp,fn,tn,precision,recall,fm");
    let (p, r) = precision_recall(&c).map_err(|e| ToolError::data(&args.patient, e.to_string()))?;
    let fm = fm_index(&c).map_err(|e| ToolError::data(&args.patient, e.to_string()))?;
    println!("{},{},{},{},{},{},{},{}", record.patient_id, c.tp, c.fp, c.fn_, c.tn, p, r, fm);
    Ok(())
}

fn cmd_loo(args: &LooArgs, argv: &[String]) -> ToolResult<()> {
    let mut base = RunConfig::default();
    base.jobs = args.jobs;
    base.timing = args.timing;
    let cfg = resolve(&args.common, base)?;
    let frame = frame_config(&cfg)?;
    let cohort = load_cohort(&args.cohort, frame.l)?;
    let opts = LooOptions {
        frame,
        configs: cfg.train_configs(),
        seed: cfg.seed,
        jobs: cfg.jobs,
    };
    let report = run_loo(&cohort, args.algo, &opts)?;
    create_dir(&args.out)?;
    let outputs = ["report.csv", "aggregate.csv", "failures.csv", "pr_plane.csv", "summary.txt"];
    write_report_csv(&report, &args.out.join(outputs[0]), cfg.timing)?;
    write_aggregate_csv(std::slice::from_ref(&report), &args.out.join(outputs[1]))?;
    write_failures_csv(&report, &args.out.join(outputs[2]))?;
    emit_pr_plane(std::slice::from_ref(&report), &args.out.join(outputs[3]))?;
    let table = summary_table(std::slice::from_ref(&report));
    write_text(&args.out.join(outputs[4]), &table)?;
    let mut manifest = RunManifest::new("loo", argv, &cfg);
    manifest.inputs = cohort.iter().map(|r| r.patient_id.clone()).collect();
    manifest.outputs = outputs.iter().map(|s| s.to_string()).collect();
    manifest.write(&args.out.join("manifest.json"))?;
    print!("{table}");
    for f in &report.failures {
        eprintln!("trial {} failed: {}", f.test_patient, f.reason);
    }
    if report.trials.is_empty() {
        return Err(ToolError::Training("every trial failed".into()));
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs, argv: &[String]) -> ToolResult<()> {
    let reports = args.inputs.iter().map(|d| read_report_dir(d)).collect::<ToolResult<Vec<_>>>()?;
    create_dir(&args.out)?;
    emit_pr_plane(&reports, &args.out.join("pr_plane.csv"))?;
    write_aggregate_csv(&reports, &args.out.join("aggregate.csv"))?;
    let table = summary_table(&reports);
    write_text(&args.out.join("summary.txt"), &table)?;
    let mut manifest = RunManifest::new("report", argv, &RunConfig::default());
    manifest.inputs = args.inputs.iter().map(|p| p.display().to_string()).collect();
    manifest.outputs = vec!["pr_plane.csv".into(), "aggregate.csv".into(), "summary.txt".into()];
    manifest.write(&args.out.join("manifest.json"))?;
    print!("{table}");
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let echo: Vec<String> = argv.iter().skip(1).map(|s| s.to_string_lossy().into_owned()).collect();
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a, &echo),
        Command::Train(a) => cmd_train(a, &echo),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Loo(a) => cmd_loo(a, &echo),
        Command::Report(a) => cmd_report(a, &echo),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
