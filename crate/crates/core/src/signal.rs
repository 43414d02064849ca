//! Per-patient vital-sign records sampled once per minute.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Plausibility bounds used by the validator (not clinical limits).
pub const HR_MAX: f64 = 300.0;
pub const SPO2_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub minute_index: u64,
    /// Heart rate, beats per minute.
    pub hr: f64,
    /// Oxygen saturation, percent.
    pub spo2: f64,
    /// Set on the annotated center sample of an event.
    pub event_mark: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub samples: Vec<Sample>,
}

impl PatientRecord {
    /// Builds a record on the uniform minute grid `0..hr.len()`.
    pub fn from_channels(patient_id: impl Into<String>, hr: &[f64], spo2: &[f64], events: &[usize]) -> Self {
        assert_eq!(hr.len(), spo2.len(), "channel lengths");
        let samples = hr
            .iter()
            .zip(spo2)
            .enumerate()
            .map(|(i, (&hr, &spo2))| Sample {
                minute_index: i as u64,
                hr,
                spo2,
                event_mark: events.contains(&i),
            })
            .collect();
        PatientRecord {
            patient_id: patient_id.into(),
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn event_indices(&self) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.event_mark)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    HeartRate(f64),
    Spo2(f64),
    /// Expected minute index at this position, and what was found.
    TimeGrid { expected: u64, found: u64 },
    TooShort { len: usize, min_len: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::HeartRate(v) => write!(f, "hr {v} out of range (0, {HR_MAX}) at index {}", self.index),
            ViolationKind::Spo2(v) => write!(f, "spo2 {v} out of range (0, {SPO2_MAX}] at index {}", self.index),
            ViolationKind::TimeGrid { expected, found } => write!(
                f,
                "non-consecutive time grid at index {}: expected minute {expected}, found {found}",
                self.index
            ),
            ViolationKind::TooShort { len, min_len } => write!(f, "record has {len} samples, need at least {min_len}"),
        }
    }
}

/// Lists every invariant violation. `min_len` is the frame length the record
/// must cover; pass 0 to skip the length check.
pub fn validate_record(record: &PatientRecord, min_len: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, s) in record.samples.iter().enumerate() {
        if s.minute_index != i as u64 {
            out.push(Violation {
                index: i,
                kind: ViolationKind::TimeGrid {
                    expected: i as u64,
                    found: s.minute_index,
                },
            });
        }
        if !(s.hr > 0.0 && s.hr < HR_MAX) {
            out.push(Violation {
                index: i,
                kind: ViolationKind::HeartRate(s.hr),
            });
        }
        if !(s.spo2 > 0.0 && s.spo2 <= SPO2_MAX) {
            out.push(Violation {
                index: i,
                kind: ViolationKind::Spo2(s.spo2),
            });
        }
    }
    if record.samples.len() < min_len {
        out.push(Violation {
            index: record.samples.len(),
            kind: ViolationKind::TooShort {
                len: record.samples.len(),
                min_len,
            },
        });
    }
    out
}
