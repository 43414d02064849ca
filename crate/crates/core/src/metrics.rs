//! Confusion counts and the Fowlkes-Mallows index, with C1 as the positive class.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::framing::Class;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> Option<f64> {
        match self.total() {
            0 => None,
            n => Some((self.tp + self.tn) as f64 / n as f64),
        }
    }
}

pub fn confusion_counts(truth: &[Class], pred: &[Class]) -> Result<ConfusionCounts> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in truth.iter().zip(pred) {
        match (t, p) {
            (Class::C1, Class::C1) => c.tp += 1,
            (Class::C2, Class::C1) => c.fp += 1,
            (Class::C1, Class::C2) => c.fn_ += 1,
            (Class::C2, Class::C2) => c.tn += 1,
        }
    }
    Ok(c)
}

/// `(precision, recall)`; precision is 0 when nothing was predicted positive.
pub fn precision_recall(c: &ConfusionCounts) -> Result<(f64, f64)> {
    if c.tp + c.fn_ == 0 {
        return Err(Error::NoPositives);
    }
    let precision = if c.tp + c.fp == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    };
    Ok((precision, c.tp as f64 / (c.tp + c.fn_) as f64))
}

/// Geometric mean of precision and recall; 0 when `tp = 0`.
pub fn fm_index(c: &ConfusionCounts) -> Result<f64> {
    let (p, r) = precision_recall(c)?;
    if c.tp == 0 {
        return Ok(0.0);
    }
    Ok(libm::sqrt(p * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub mean: f64,
    /// Sample standard deviation (n − 1 divisor); 0 for a single value.
    pub std: f64,
    /// Set when only one value was available and `std` is not meaningful.
    pub single_value: bool,
}

pub fn summarize_trials(values: &[f64]) -> Result<TrialSummary> {
    let n = values.len();
    if n == 0 {
        return Err(Error::TooFew { needed: 1, got: 0 });
    }
    // sort first so the result does not depend on input order
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(TrialSummary {
            mean,
            std: 0.0,
            single_value: true,
        });
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Ok(TrialSummary {
        mean,
        std: libm::sqrt(var),
        single_value: false,
    })
}
