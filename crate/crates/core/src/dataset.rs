//! Labeled matrices, target encoding, normalization, duplication balancing
//! and patient-wise partitions.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::framing::{extract_frames, Class, FrameConfig, LabeledFrame};
use crate::rng::{permutation, seeded_rng};
use crate::signal::PatientRecord;
use crate::{Error, Matrix, Result, Q};

/// Where a column came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameId {
    pub patient_id: Arc<str>,
    pub start_index: usize,
}

/// Feature matrix `x` (D×N, one frame per column), targets `t` (Q×N) and
/// per-column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub x: Matrix,
    pub t: Matrix,
    pub ids: Vec<FrameId>,
}

/// One-hot targets: C1 → `[1, 0]ᵀ`, C2 → `[0, 1]ᵀ`.
pub fn encode_targets(labels: &[Class]) -> Matrix {
    let mut t = Matrix::zeros(Q, labels.len());
    for (j, c) in labels.iter().enumerate() {
        let row = if c.is_event() { 0 } else { 1 };
        t[(row, j)] = 1.0;
    }
    t
}

impl LabeledSet {
    pub fn empty(dim: usize) -> Self {
        LabeledSet {
            x: Matrix::zeros(dim, 0),
            t: Matrix::zeros(Q, 0),
            ids: Vec::new(),
        }
    }

    pub fn from_frames(frames: &[LabeledFrame], dim: usize) -> Self {
        let n = frames.len();
        let mut x = Matrix::zeros(dim, n);
        let mut ids = Vec::with_capacity(n);
        let mut last: Option<Arc<str>> = None;
        for (j, f) in frames.iter().enumerate() {
            assert_eq!(f.features.len(), dim, "frame dimension");
            for (d, &v) in f.features.iter().enumerate() {
                x[(d, j)] = v;
            }
            let pid = match &last {
                Some(p) if **p == *f.patient_id => p.clone(),
                _ => {
                    let p: Arc<str> = Arc::from(f.patient_id.as_str());
                    last = Some(p.clone());
                    p
                }
            };
            ids.push(FrameId {
                patient_id: pid,
                start_index: f.start_index,
            });
        }
        let labels: Vec<Class> = frames.iter().map(|f| f.label).collect();
        LabeledSet {
            x,
            t: encode_targets(&labels),
            ids,
        }
    }

    /// Frames every record and stacks the results in order.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a PatientRecord>, cfg: &FrameConfig) -> Result<Self> {
        let mut frames = Vec::new();
        for r in records {
            frames.extend(extract_frames(r, cfg)?);
        }
        Ok(LabeledSet::from_frames(&frames, cfg.dim()))
    }

    pub fn len(&self) -> usize {
        self.x.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn label(&self, j: usize) -> Class {
        if self.t[(0, j)] >= self.t[(1, j)] {
            Class::C1
        } else {
            Class::C2
        }
    }

    pub fn labels(&self) -> Vec<Class> {
        (0..self.len()).map(|j| self.label(j)).collect()
    }

    pub fn indices_of(&self, class: Class) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.label(j) == class).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let c1 = (0..self.len()).filter(|&j| self.label(j) == Class::C1).count();
        (c1, self.len() - c1)
    }

    pub fn select(&self, idx: &[usize]) -> LabeledSet {
        LabeledSet {
            x: self.x.select_columns(idx),
            t: self.t.select_columns(idx),
            ids: idx.iter().map(|&j| self.ids[j].clone()).collect(),
        }
    }

    pub fn with_features(&self, x: Matrix) -> LabeledSet {
        assert_eq!(x.cols(), self.len());
        LabeledSet {
            x,
            t: self.t.clone(),
            ids: self.ids.clone(),
        }
    }

    pub fn patients(&self) -> BTreeSet<Arc<str>> {
        self.ids.iter().map(|id| id.patient_id.clone()).collect()
    }
}

/// Duplicates the minority class until both classes have equal counts.
pub fn balance_by_duplication(set: &LabeledSet, seed: u64) -> Result<LabeledSet> {
    balance_by_duplication_ratio(set, 1.0, seed)
}

/// Duplicates minority columns until `minority ≈ ratio · majority`.
///
/// Copies cycle through a seeded shuffle of the minority columns, so each
/// original appears either ⌊k⌋ or ⌈k⌉ times. Majority columns are kept once
/// each. The output column order is a seeded permutation.
pub fn balance_by_duplication_ratio(set: &LabeledSet, ratio: f64, seed: u64) -> Result<LabeledSet> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidConfig(alloc::format!("balance ratio must be in (0, 1], got {ratio}")));
    }
    let c1 = set.indices_of(Class::C1);
    let c2 = set.indices_of(Class::C2);
    if c1.is_empty() {
        return Err(Error::EmptyClass("C1"));
    }
    if c2.is_empty() {
        return Err(Error::EmptyClass("C2"));
    }
    let (minority, majority) = if c1.len() <= c2.len() { (c1, c2) } else { (c2, c1) };
    let target = libm::round(ratio * majority.len() as f64) as usize;
    let target = target.max(minority.len());

    let mut rng = seeded_rng(seed);
    let order = permutation(minority.len(), &mut rng);
    let mut idx = Vec::with_capacity(target + majority.len());
    idx.extend((0..target).map(|k| minority[order[k % minority.len()]]));
    idx.extend_from_slice(&majority);
    let perm = permutation(idx.len(), &mut rng);
    let shuffled: Vec<usize> = perm.iter().map(|&p| idx[p]).collect();
    Ok(set.select(&shuffled))
}

/// Per-dimension z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Standard deviations below this are treated as constant dimensions.
pub const SCALE_FLOOR: f64 = 1e-12;

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Normalizer {
            mean: alloc::vec![0.0; dim],
            scale: alloc::vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn fit(x: &Matrix) -> Result<Self> {
        let n = x.cols();
        if n < 2 {
            return Err(Error::TooFew { needed: 2, got: n });
        }
        let mut mean = Vec::with_capacity(x.rows());
        let mut scale = Vec::with_capacity(x.rows());
        for d in 0..x.rows() {
            let row = x.row(d);
            let m = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
            let sd = libm::sqrt(var);
            mean.push(m);
            scale.push(if sd < SCALE_FLOOR { 1.0 } else { sd });
        }
        Ok(Normalizer { mean, scale })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.rows(),
            });
        }
        let mut out = x.clone();
        for d in 0..x.rows() {
            let (m, s) = (self.mean[d], self.scale[d]);
            for v in out.row_mut(d) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.rows(),
            });
        }
        let mut out = x.clone();
        for d in 0..x.rows() {
            let (m, s) = (self.mean[d], self.scale[d]);
            for v in out.row_mut(d) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }
}

pub fn fit_normalizer(set: &LabeledSet) -> Result<Normalizer> {
    Normalizer::fit(&set.x)
}

pub fn apply_normalizer(norm: &Normalizer, x: &Matrix) -> Result<Matrix> {
    norm.apply(x)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<String>,
    pub test: String,
}

/// One partition per patient: that patient is the test set, all others train.
pub fn loo_partitions(cohort: &[PatientRecord]) -> Result<Vec<Partition>> {
    if cohort.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: cohort.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for r in cohort {
        if !seen.insert(r.patient_id.as_str()) {
            return Err(Error::InvalidConfig(alloc::format!("duplicate patient id {}", r.patient_id)));
        }
    }
    Ok(cohort
        .iter()
        .map(|test| Partition {
            train: cohort
                .iter()
                .filter(|r| r.patient_id != test.patient_id)
                .map(|r| r.patient_id.clone())
                .collect(),
            test: test.patient_id.clone(),
        })
        .collect())
}

/// Class-stratified split; returns `(fit, held_out)` with roughly
/// `fraction` of each class held out. Both parts must contain both classes.
pub fn stratified_split(set: &LabeledSet, fraction: f64, seed: u64) -> Result<(LabeledSet, LabeledSet)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!("split fraction must be in (0, 1), got {fraction}")));
    }
    let mut rng = seeded_rng(seed);
    let mut fit = Vec::new();
    let mut held = Vec::new();
    for (class, name) in [(Class::C1, "C1"), (Class::C2, "C2")] {
        let idx = set.indices_of(class);
        if idx.len() < 2 {
            return Err(Error::EmptyClass(name));
        }
        let n_held = (libm::round(fraction * idx.len() as f64) as usize).clamp(1, idx.len() - 1);
        let perm = permutation(idx.len(), &mut rng);
        let mut chosen: Vec<usize> = perm[..n_held].iter().map(|&p| idx[p]).collect();
        let mut rest: Vec<usize> = perm[n_held..].iter().map(|&p| idx[p]).collect();
        chosen.sort_unstable();
        rest.sort_unstable();
        held.extend(chosen);
        fit.extend(rest);
    }
    fit.sort_unstable();
    held.sort_unstable();
    Ok((set.select(&fit), set.select(&held)))
}

/// Seeded subsample of at most `max_points` columns that keeps the class
/// proportions (each class keeps at least one column).
pub fn stratified_subsample(set: &LabeledSet, max_points: usize, seed: u64) -> LabeledSet {
    let n = set.len();
    if n <= max_points {
        return set.clone();
    }
    let mut rng = seeded_rng(seed);
    let mut keep = Vec::with_capacity(max_points);
    let c1 = set.indices_of(Class::C1);
    let c2 = set.indices_of(Class::C2);
    let k1 = if c1.is_empty() {
        0
    } else {
        (libm::round(max_points as f64 * c1.len() as f64 / n as f64) as usize).clamp(1, c1.len())
    };
    let k2 = max_points.saturating_sub(k1).min(c2.len());
    for (idx, k) in [(c1, k1), (c2, k2)] {
        let perm = permutation(idx.len(), &mut rng);
        keep.extend(perm[..k].iter().map(|&p| idx[p]));
    }
    keep.sort_unstable();
    set.select(&keep)
}
