//! Seeded synthetic cohorts.
//!
//! Each channel is a baseline plus a slow sinusoidal drift plus Gaussian
//! noise. An event is a triangular dip centred on its marked sample: heart
//! rate falls by a drawn amount and SpO2 is pulled toward a drawn floor, both
//! with weight `1 − |k − c| / (h + 1)` for `|k − c| ≤ h = duration / 2`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::framing::frame_count;
use crate::rng::{derive_seed, seeded_rng, Rng};
use crate::signal::{PatientRecord, HR_MAX, SPO2_MAX};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range<T> {
    pub lo: T,
    pub hi: T,
}

impl<T> Range<T> {
    pub const fn new(lo: T, hi: T) -> Self {
        Range { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub patients: usize,
    pub minutes_per_patient: usize,
    pub target_minority_fraction: f64,
    pub hr_baseline: f64,
    pub hr_noise_sd: f64,
    pub spo2_baseline: f64,
    pub spo2_noise_sd: f64,
    pub hr_drift_amplitude: f64,
    pub spo2_drift_amplitude: f64,
    /// Drift period in minutes.
    pub drift_period: Range<f64>,
    pub event_hr_drop: Range<f64>,
    pub event_spo2_floor: Range<f64>,
    pub event_duration: Range<usize>,
    /// Lower bound on events per patient; 0 disables it.
    pub min_events_per_patient: usize,
    pub frame_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            patients: 13,
            minutes_per_patient: 5760,
            target_minority_fraction: 0.0013,
            hr_baseline: 150.0,
            hr_noise_sd: 5.0,
            spo2_baseline: 97.0,
            spo2_noise_sd: 1.0,
            hr_drift_amplitude: 5.0,
            spo2_drift_amplitude: 0.5,
            drift_period: Range::new(360.0, 1440.0),
            event_hr_drop: Range::new(40.0, 70.0),
            event_spo2_floor: Range::new(75.0, 88.0),
            event_duration: Range::new(3, 10),
            min_events_per_patient: 1,
            frame_len: 15,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Large, short events: heart-rate drops of at least 60 bpm (12 noise
    /// standard deviations) and SpO2 floors of at most 80 %.
    pub fn easy() -> Self {
        SynthConfig {
            event_hr_drop: Range::new(60.0, 80.0),
            event_spo2_floor: Range::new(70.0, 80.0),
            event_duration: Range::new(3, 5),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("synth: {what}")));
        if self.patients == 0 {
            return bad("patients must be >= 1");
        }
        if self.frame_len == 0 {
            return bad("frame_len must be >= 1");
        }
        if self.minutes_per_patient < 3 * self.frame_len {
            return Err(Error::RecordTooShort {
                len: self.minutes_per_patient,
                frame_len: 3 * self.frame_len,
            });
        }
        if !(0.0..1.0).contains(&self.target_minority_fraction) {
            return bad("target_minority_fraction must lie in [0, 1)");
        }
        if !(self.hr_noise_sd >= 0.0 && self.spo2_noise_sd >= 0.0) {
            return bad("noise standard deviations must be >= 0");
        }
        if !(self.hr_drift_amplitude >= 0.0 && self.spo2_drift_amplitude >= 0.0) {
            return bad("drift amplitudes must be >= 0");
        }
        if !(self.drift_period.lo > 0.0 && self.drift_period.lo <= self.drift_period.hi) {
            return bad("drift_period");
        }
        let h = self.event_hr_drop;
        if !(h.lo >= 0.0 && h.lo <= h.hi && h.hi < self.hr_baseline) {
            return bad("event_hr_drop");
        }
        let s = self.event_spo2_floor;
        if !(s.lo >= 0.0 && s.lo <= s.hi && s.hi <= SPO2_MAX) {
            return bad("event_spo2_floor");
        }
        let d = self.event_duration;
        if !(d.lo >= 1 && d.lo <= d.hi) {
            return bad("event_duration");
        }
        if !(self.hr_baseline > 0.0 && self.hr_baseline <= HR_MAX) {
            return bad("hr_baseline");
        }
        if !(self.spo2_baseline > 0.0 && self.spo2_baseline <= SPO2_MAX) {
            return bad("spo2_baseline");
        }
        Ok(())
    }

    /// Minimum spacing between event centers.
    pub fn min_spacing(&self) -> usize {
        2 * self.event_duration.hi + 1
    }

    /// Expected number of events per patient (before the floor).
    pub fn expected_events_per_patient(&self) -> f64 {
        let frames = frame_count(self.minutes_per_patient, &crate::framing::FrameConfig::new(self.frame_len.max(1)).unwrap_or_default());
        self.target_minority_fraction * frames as f64
    }
}

fn draw(rng: &mut Rng, r: Range<f64>) -> f64 {
    if r.lo == r.hi {
        r.lo
    } else {
        rng.random_range(r.lo..=r.hi)
    }
}

fn noise(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("sd validated")
}

fn baseline(id: &str, cfg: &SynthConfig, rng: &mut Rng) -> PatientRecord {
    let n = cfg.minutes_per_patient;
    let tau = core::f64::consts::TAU;
    let hr_period = draw(rng, cfg.drift_period);
    let spo2_period = draw(rng, cfg.drift_period);
    let hr_phase = rng.random_range(0.0..tau);
    let spo2_phase = rng.random_range(0.0..tau);
    let hr_noise = noise(cfg.hr_noise_sd);
    let spo2_noise = noise(cfg.spo2_noise_sd);
    let mut hr = Vec::with_capacity(n);
    let mut spo2 = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64;
        let h = cfg.hr_baseline + cfg.hr_drift_amplitude * libm::sin(tau * t / hr_period + hr_phase) + hr_noise.sample(rng);
        let s = cfg.spo2_baseline + cfg.spo2_drift_amplitude * libm::sin(tau * t / spo2_period + spo2_phase) + spo2_noise.sample(rng);
        hr.push(h.clamp(1.0, HR_MAX - 1.0));
        spo2.push(s.clamp(1.0, SPO2_MAX));
    }
    PatientRecord::from_channels(id, &hr, &spo2, &[])
}

/// Adds one event centred at `center` and marks that sample only.
pub fn inject_event(record: &PatientRecord, center: usize, cfg: &SynthConfig, seed: u64) -> Result<PatientRecord> {
    let n = record.len();
    let l = cfg.frame_len;
    if center < l || center + l >= n {
        return Err(Error::Injection(format!(
            "center {center} closer than {l} samples to an edge of a record of length {n}"
        )));
    }
    let spacing = cfg.min_spacing();
    if let Some(&e) = record.event_indices().iter().find(|&&e| e.abs_diff(center) < spacing) {
        return Err(Error::Injection(format!("center {center} overlaps the event at {e}")));
    }
    let mut rng = seeded_rng(seed);
    let drop = draw(&mut rng, cfg.event_hr_drop);
    let floor = draw(&mut rng, cfg.event_spo2_floor);
    let d = cfg.event_duration;
    let duration = rng.random_range(d.lo..=d.hi);
    let h = duration / 2;
    let mut out = record.clone();
    for k in center - h..=center + h {
        let w = 1.0 - k.abs_diff(center) as f64 / (h + 1) as f64;
        let s = &mut out.samples[k];
        s.hr = (s.hr - drop * w).max(1.0);
        s.spo2 = s.spo2 + w * (floor - s.spo2);
    }
    out.samples[center].event_mark = true;
    Ok(out)
}

/// Number of events for one patient: the expected count rounded by a
/// Bernoulli draw on its fractional part, then floored.
fn event_count(cfg: &SynthConfig, rng: &mut Rng) -> usize {
    let expected = cfg.expected_events_per_patient();
    let whole = libm::floor(expected);
    let extra = rng.random_bool((expected - whole).clamp(0.0, 1.0));
    (whole as usize + usize::from(extra)).max(cfg.min_events_per_patient)
}

pub fn generate_patient(cfg: &SynthConfig, index: usize) -> Result<PatientRecord> {
    cfg.validate()?;
    let seed = derive_seed(cfg.seed, index as u64);
    let mut rng = seeded_rng(seed);
    let id = format!("p{:02}", index + 1);
    let mut record = baseline(&id, cfg, &mut rng);
    let wanted = event_count(cfg, &mut rng);
    let n = cfg.minutes_per_patient;
    let l = cfg.frame_len;
    if wanted == 0 {
        return Ok(record);
    }
    if n < 2 * l + 1 {
        return Err(Error::InfeasiblePacking { wanted, len: n });
    }
    let spacing = cfg.min_spacing();
    let mut centers: Vec<usize> = Vec::with_capacity(wanted);
    let budget = 1000 * wanted;
    let mut attempts = 0;
    while centers.len() < wanted {
        if attempts == budget {
            return Err(Error::InfeasiblePacking { wanted, len: n });
        }
        attempts += 1;
        let c = rng.random_range(l..n - l);
        if centers.iter().all(|&e| e.abs_diff(c) >= spacing) {
            centers.push(c);
        }
    }
    for (k, &c) in centers.iter().enumerate() {
        record = inject_event(&record, c, cfg, derive_seed(seed, 1 + k as u64))?;
    }
    Ok(record)
}

pub fn generate_cohort(cfg: &SynthConfig) -> Result<Vec<PatientRecord>> {
    cfg.validate()?;
    (0..cfg.patients).map(|i| generate_patient(cfg, i)).collect()
}

/// Fraction of C1 frames over a cohort.
pub fn minority_fraction(records: &[PatientRecord], frame_len: usize) -> f64 {
    let cfg = crate::framing::FrameConfig::new(frame_len).unwrap_or_default();
    let (mut pos, mut total) = (0usize, 0usize);
    for r in records {
        total += frame_count(r.len(), &cfg);
        pos += r
            .event_indices()
            .iter()
            .filter(|&&e| e >= cfg.center_offset && e + cfg.l - cfg.center_offset <= r.len())
            .count();
    }
    if total == 0 {
        0.0
    } else {
        pos as f64 / total as f64
    }
}
