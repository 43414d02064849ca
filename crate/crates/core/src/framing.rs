//! Sliding-window framing of a two-channel record.
//!
//! A frame starting at minute `k` covers samples `[k, k + l)` and becomes a
//! `2l`-dimensional vector laid out channel-major: heart rate first, then
//! SpO2. The frame is an event frame (C1) iff the sample at
//! `k + center_offset` carries an event mark.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::signal::PatientRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    /// ABD event.
    C1,
    /// No event.
    C2,
}

impl Class {
    pub fn is_event(self) -> bool {
        self == Class::C1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub l: usize,
    pub center_offset: usize,
}

impl FrameConfig {
    pub fn new(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidConfig("frame length must be >= 1".into()));
        }
        Ok(FrameConfig { l, center_offset: l / 2 })
    }

    pub fn dim(&self) -> usize {
        2 * self.l
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.center_offset >= self.l {
            return Err(Error::InvalidConfig(alloc::format!("{self:?}")));
        }
        Ok(())
    }
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig { l: 15, center_offset: 7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub features: Vec<f64>,
    pub label: Class,
    pub patient_id: String,
    pub start_index: usize,
}

pub fn frame_count(len: usize, cfg: &FrameConfig) -> usize {
    (len + 1).saturating_sub(cfg.l)
}

pub fn label_for_frame(record: &PatientRecord, start_index: usize, cfg: &FrameConfig) -> Result<Class> {
    cfg.validate()?;
    let n = record.len();
    if n < cfg.l {
        return Err(Error::RecordTooShort { len: n, frame_len: cfg.l });
    }
    if start_index > n - cfg.l {
        return Err(Error::StartOutOfRange {
            start: start_index,
            max: n - cfg.l,
        });
    }
    Ok(if record.samples[start_index + cfg.center_offset].event_mark {
        Class::C1
    } else {
        Class::C2
    })
}

pub fn extract_frames(record: &PatientRecord, cfg: &FrameConfig) -> Result<Vec<LabeledFrame>> {
    cfg.validate()?;
    let n = record.len();
    if n < cfg.l {
        return Err(Error::RecordTooShort { len: n, frame_len: cfg.l });
    }
    let l = cfg.l;
    let frames = (0..=n - l)
        .map(|k| {
            let window = &record.samples[k..k + l];
            let mut features = Vec::with_capacity(2 * l);
            features.extend(window.iter().map(|s| s.hr));
            features.extend(window.iter().map(|s| s.spo2));
            LabeledFrame {
                features,
                label: if window[cfg.center_offset].event_mark { Class::C1 } else { Class::C2 },
                patient_id: record.patient_id.clone(),
                start_index: k,
            }
        })
        .collect();
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn record(n: usize, events: &[usize]) -> PatientRecord {
        let hr: Vec<f64> = (0..n).map(|i| 100.0 + i as f64).collect();
        let spo2: Vec<f64> = (0..n).map(|i| 50.0 + (i % 40) as f64).collect();
        PatientRecord::from_channels("p", &hr, &spo2, events)
    }

    #[test]
    fn default_is_fifteen_with_middle_seven() {
        let cfg = FrameConfig::default();
        assert_eq!((cfg.l, cfg.center_offset, cfg.dim()), (15, 7, 30));
        assert_eq!(FrameConfig::new(15).unwrap(), cfg);
    }

    #[test]
    fn single_frame_when_length_equals_l() {
        let frames = extract_frames(&record(15, &[]), &FrameConfig::default()).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].features.len(), 30);
    }

    #[test]
    fn one_event_labels_exactly_the_centered_frame() {
        let cfg = FrameConfig::default();
        let r = record(100, &[50]);
        let frames = extract_frames(&r, &cfg).unwrap();
        assert_eq!(frames.len(), 86);
        // brute force: a window is C1 iff its middle sample is the event
        let expected: Vec<usize> = (0..=85usize).filter(|&k| (k..k + 15).contains(&50) && k + cfg.center_offset == 50).collect();
        let got: Vec<usize> = frames.iter().filter(|f| f.label == Class::C1).map(|f| f.start_index).collect();
        assert_eq!(got, expected);
        assert_eq!(got, vec![43]);
    }

    #[test]
    fn features_are_channel_major() {
        let r = record(20, &[]);
        let frames = extract_frames(&r, &FrameConfig::default()).unwrap();
        let f = &frames[3];
        for j in 0..15 {
            assert_eq!(f.features[j], r.samples[3 + j].hr);
            assert_eq!(f.features[15 + j], r.samples[3 + j].spo2);
        }
    }

    #[test]
    fn label_examples() {
        let cfg = FrameConfig::default();
        assert_eq!(label_for_frame(&record(30, &[7]), 0, &cfg).unwrap(), Class::C1);
        assert_eq!(label_for_frame(&record(30, &[6]), 0, &cfg).unwrap(), Class::C2);
        let quiet = record(30, &[]);
        for k in 0..=15 {
            assert_eq!(label_for_frame(&quiet, k, &cfg).unwrap(), Class::C2);
        }
        assert!(matches!(label_for_frame(&quiet, 16, &cfg), Err(Error::StartOutOfRange { .. })));
    }

    #[test]
    fn short_record_is_an_error() {
        assert!(matches!(
            extract_frames(&record(14, &[]), &FrameConfig::default()),
            Err(Error::RecordTooShort { len: 14, frame_len: 15 })
        ));
    }

    #[test]
    fn edge_events_yield_no_positive_frame() {
        let cfg = FrameConfig::default();
        let r = record(40, &[3, 20, 36]);
        let frames = extract_frames(&r, &cfg).unwrap();
        let pos = frames.iter().filter(|f| f.label == Class::C1).count();
        // reachable centers are 7..=32
        assert_eq!(pos, 1);
    }

    #[test]
    fn perturbation_touches_only_covering_frames() {
        let cfg = FrameConfig::default();
        let base = record(40, &[]);
        let mut bumped = base.clone();
        bumped.samples[20].spo2 += 1.0;
        let a = extract_frames(&base, &cfg).unwrap();
        let b = extract_frames(&bumped, &cfg).unwrap();
        for (k, (fa, fb)) in a.iter().zip(&b).enumerate() {
            let changed: Vec<usize> = (0..30).filter(|&j| fa.features[j] != fb.features[j]).collect();
            if (k..k + 15).contains(&20) {
                assert_eq!(changed, vec![15 + 20 - k]);
            } else {
                assert!(changed.is_empty());
            }
        }
    }
}
