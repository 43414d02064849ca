//! Cohort CSV files: one `<patient_id>.csv` per patient with header
//! `minute,hr_bpm,spo2_pct,event`, one row per minute, LF line endings.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use abd_core::framing::FrameConfig;
use abd_core::signal::{validate_record, PatientRecord, Sample, ViolationKind};

use crate::error::{csv_error, ToolError, ToolResult};

pub const HEADER: [&str; 4] = ["minute", "hr_bpm", "spo2_pct", "event"];

/// Parses one patient file. Rows are numbered from 1 (the first data row).
pub fn parse_patient_csv(reader: impl Read, patient_id: &str, source: &Path, min_len: usize) -> ToolResult<PatientRecord> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(ToolError::data(
            source,
            format!("expected header {:?}, found {:?}", HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_error(source, e))?;
        if rec.len() != 4 {
            return Err(ToolError::data(source, format!("expected 4 fields at row {row}, found {}", rec.len())));
        }
        let field = |k: usize| rec[k].trim();
        let bad = |what: &str, v: &str| ToolError::data(source, format!("malformed {what} {v:?} at row {row}"));
        let minute_index: u64 = field(0).parse().map_err(|_| bad("minute", field(0)))?;
        let hr: f64 = field(1).parse().map_err(|_| bad("hr_bpm", field(1)))?;
        let spo2: f64 = field(2).parse().map_err(|_| bad("spo2_pct", field(2)))?;
        let event_mark = match field(3) {
            "0" => false,
            "1" => true,
            other => return Err(bad("event", other)),
        };
        samples.push(Sample {
            minute_index,
            hr,
            spo2,
            event_mark,
        });
    }
    let record = PatientRecord {
        patient_id: patient_id.to_string(),
        samples,
    };
    if let Some(v) = validate_record(&record, min_len).first() {
        let row = v.index + 1;
        let message = match &v.kind {
            ViolationKind::TimeGrid { expected, found } => {
                format!("non-consecutive time grid at row {row} (expected minute {expected}, found {found})")
            }
            ViolationKind::HeartRate(x) => format!("hr_bpm {x} out of range at row {row}"),
            ViolationKind::Spo2(x) => format!("spo2_pct {x} out of range at row {row}"),
            ViolationKind::TooShort { len, min_len } => format!("{len} rows, need at least {min_len}"),
        };
        return Err(ToolError::data(source, message));
    }
    Ok(record)
}

pub fn load_patient_csv_with(path: &Path, min_len: usize) -> ToolResult<PatientRecord> {
    let file = fs::File::open(path).map_err(|e| ToolError::io(path, e))?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| ToolError::data(path, "file name is not a patient id"))?;
    parse_patient_csv(std::io::BufReader::new(file), id, path, min_len)
}

/// Loads and validates a record that must cover at least one default frame.
pub fn load_patient_csv(path: &Path) -> ToolResult<PatientRecord> {
    load_patient_csv_with(path, FrameConfig::default().l)
}

pub fn write_patient_csv(record: &PatientRecord, out: impl Write, dest: &Path) -> ToolResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER).map_err(|e| csv_error(dest, e))?;
    for s in &record.samples {
        let row = [
            s.minute_index.to_string(),
            s.hr.to_string(),
            s.spo2.to_string(),
            u8::from(s.event_mark).to_string(),
        ];
        w.write_record(&row).map_err(|e| csv_error(dest, e))?;
    }
    w.flush().map_err(|e| ToolError::io(dest, e))
}

pub fn save_patient_csv(record: &PatientRecord, path: &Path) -> ToolResult<()> {
    let file = fs::File::create(path).map_err(|e| ToolError::io(path, e))?;
    write_patient_csv(record, std::io::BufWriter::new(file), path)
}

/// Every `*.csv` in `dir`, sorted by file name.
pub fn cohort_files(dir: &Path) -> ToolResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| ToolError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| ToolError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(ToolError::data(dir, "no patient CSV files"));
    }
    Ok(files)
}

pub fn load_cohort(dir: &Path, min_len: usize) -> ToolResult<Vec<PatientRecord>> {
    cohort_files(dir)?.iter().map(|p| load_patient_csv_with(p, min_len)).collect()
}

pub fn save_cohort(records: &[PatientRecord], dir: &Path) -> ToolResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| ToolError::io(dir, e))?;
    records
        .iter()
        .map(|r| {
            let path = dir.join(format!("{}.csv", r.patient_id));
            save_patient_csv(r, &path).map(|_| path)
        })
        .collect()
}
