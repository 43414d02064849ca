//! Soft-margin SVM with a Gaussian kernel, trained by SMO with
//! second-order working-set selection.
//!
//! Labels map to `y = +1` for C1 and `y = −1` for C2. The decision value is
//! `Σ coeffs[i]·k(sv_i, x) + bias` on normalized inputs.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_subsample, LabeledSet, Normalizer};
use crate::framing::Class;
use crate::rng::derive_seed;
use crate::{Error, Matrix, Result};

const TAU: f64 = 1e-12;
const CACHE_ENTRIES: usize = 1 << 22;
const PREDICT_BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmTrainConfig {
    pub c: f64,
    /// `None` means `1 / D`.
    pub gamma: Option<f64>,
    pub kkt_tol: f64,
    pub max_passes: usize,
    pub max_train_points: usize,
    pub seed: u64,
}

impl Default for SvmTrainConfig {
    fn default() -> Self {
        SvmTrainConfig {
            c: 1.0,
            gamma: None,
            kkt_tol: 1e-3,
            max_passes: 10,
            max_train_points: 5000,
            seed: 0,
        }
    }
}

impl SvmTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let gamma_ok = self.gamma.is_none_or(|g| g > 0.0 && g.is_finite());
        if !(self.c > 0.0) || !gamma_ok || !(self.kkt_tol > 0.0) || self.max_passes < 1 || self.max_train_points < 2 {
            return Err(Error::InvalidConfig(alloc::format!("svm: {self:?}")));
        }
        Ok(())
    }

    pub fn gamma_for(&self, dim: usize) -> f64 {
        self.gamma.unwrap_or(1.0 / dim.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub normalizer: Normalizer,
    /// D×S, normalized coordinates.
    pub support_vectors: Matrix,
    /// `αᵢ·yᵢ` per support vector.
    pub coeffs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

/// Solver state kept for auditing; not part of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmTrainReport {
    /// Columns of the input set that were optimized over.
    pub used: Vec<usize>,
    /// Multipliers aligned with `used`.
    pub alphas: Vec<f64>,
    /// Dual objective after each pair update, starting from α = 0.
    pub dual_trace: Vec<f64>,
    pub iterations: usize,
    /// Final maximal-violating-pair gap.
    pub gap: f64,
}

pub fn kernel_gaussian(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "kernel operands");
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    libm::exp(-gamma * d2)
}

fn sign(c: Class) -> f64 {
    if c.is_event() {
        1.0
    } else {
        -1.0
    }
}

struct KernelRows<'a> {
    points: &'a Matrix,
    sq: Vec<f64>,
    gamma: f64,
    capacity: usize,
    rows: BTreeMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
}

impl<'a> KernelRows<'a> {
    /// `points` is N×D, one point per row.
    fn new(points: &'a Matrix, gamma: f64) -> Self {
        let n = points.rows();
        let sq = (0..n).map(|i| points.row(i).iter().map(|v| v * v).sum()).collect();
        KernelRows {
            points,
            sq,
            gamma,
            capacity: (CACHE_ENTRIES / n.max(1)).max(2),
            rows: BTreeMap::new(),
            order: VecDeque::new(),
        }
    }

    fn get(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            if self.order.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            let xi = self.points.row(i);
            let row = (0..self.points.rows())
                .map(|t| {
                    if t == i {
                        return 1.0;
                    }
                    let dot: f64 = xi.iter().zip(self.points.row(t)).map(|(a, b)| a * b).sum();
                    let d2 = (self.sq[i] + self.sq[t] - 2.0 * dot).max(0.0);
                    libm::exp(-self.gamma * d2)
                })
                .collect();
            self.rows.insert(i, row);
            self.order.push_back(i);
        }
        &self.rows[&i]
    }
}

struct Smo {
    y: Vec<f64>,
    alpha: Vec<f64>,
    /// Gradient of `½αᵀQα − eᵀα`, `Q_ij = y_i y_j K_ij`.
    grad: Vec<f64>,
    c: f64,
}

impl Smo {
    fn is_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.c
    }

    fn is_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            !self.is_upper(t)
        } else {
            !self.is_lower(t)
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            !self.is_lower(t)
        } else {
            !self.is_upper(t)
        }
    }

    /// Maximal violation `m(α) − M(α)` over the whole set.
    fn gap(&self) -> f64 {
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::NEG_INFINITY;
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) {
                up = up.max(v);
            }
            if self.in_low(t) {
                low = low.max(-v);
            }
        }
        if up == f64::NEG_INFINITY || low == f64::NEG_INFINITY {
            0.0
        } else {
            up + low
        }
    }

    fn dual(&self) -> f64 {
        -0.5 * self.alpha.iter().zip(&self.grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    }

    /// Second-order working-set selection; `None` once the gap is below `tol`.
    fn select(&self, kernel: &mut KernelRows, tol: f64) -> Option<(usize, usize)> {
        let n = self.y.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            return None;
        }
        let ki = kernel.get(i).to_vec();
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let yg = self.y[t] * self.grad[t];
            gmax2 = gmax2.max(yg);
            let b = gmax + yg;
            if b > 0.0 {
                let a = ki[i] + 1.0 - 2.0 * ki[t];
                let a = if a > 0.0 { a } else { TAU };
                let score = -(b * b) / a;
                if score <= best {
                    best = score;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < tol || j == usize::MAX {
            return None;
        }
        Some((i, j))
    }

    fn update(&mut self, kernel: &mut KernelRows, i: usize, j: usize) {
        let ki = kernel.get(i).to_vec();
        let kj = kernel.get(j);
        let (yi, yj, c) = (self.y[i], self.y[j], self.c);
        let qij = yi * yj * ki[j];
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let quad = (ki[i] + kj[j] + 2.0 * qij).max(TAU);
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (ki[i] + kj[j] - 2.0 * qij).max(TAU);
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let di = ai - old_i;
        let dj = aj - old_j;
        for t in 0..self.y.len() {
            self.grad[t] += self.y[t] * (yi * ki[t] * di + yj * kj[t] * dj);
        }
    }

    /// `ρ` such that the decision value is `Σ α y k − ρ`.
    fn rho(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum, mut free) = (0.0, 0usize);
        for t in 0..self.y.len() {
            let yg = self.y[t] * self.grad[t];
            if self.is_upper(t) {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.is_lower(t) {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                sum += yg;
                free += 1;
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }

    /// Count of training points whose KKT condition misses by more than `tol`.
    fn violations(&self, rho: f64, tol: f64) -> usize {
        (0..self.y.len())
            .filter(|&t| {
                let margin = self.grad[t] + 1.0 - self.y[t] * rho;
                kkt_violated(self.alpha[t], self.c, margin, tol)
            })
            .count()
    }
}

fn kkt_violated(alpha: f64, c: f64, margin: f64, tol: f64) -> bool {
    if alpha <= 0.0 {
        margin < 1.0 - tol
    } else if alpha >= c {
        margin > 1.0 + tol
    } else {
        (margin - 1.0).abs() > tol
    }
}

pub fn svm_train(train: &LabeledSet, cfg: &SvmTrainConfig) -> Result<SvmModel> {
    svm_train_with_report(train, cfg).map(|(m, _)| m)
}

/// Trains and also returns the multipliers and the dual-objective trace.
///
/// A pass is `n` pair updates. Training fails with [`Error::Stalled`] once
/// `max_passes` consecutive passes leave the best gap unimproved.
pub fn svm_train_with_report(train: &LabeledSet, cfg: &SvmTrainConfig) -> Result<(SvmModel, SvmTrainReport)> {
    cfg.validate()?;
    let (c1, c2) = train.class_counts();
    if c1 == 0 {
        return Err(Error::EmptyClass("C1"));
    }
    if c2 == 0 {
        return Err(Error::EmptyClass("C2"));
    }
    let (subset, used) = if train.len() > cfg.max_train_points {
        let tagged = train.with_features(Matrix::from_fn(1, train.len(), |_, j| j as f64));
        let picked = stratified_subsample(&tagged, cfg.max_train_points, derive_seed(cfg.seed, 1));
        let used: Vec<usize> = picked.x.row(0).iter().map(|&v| v as usize).collect();
        (train.select(&used), used)
    } else {
        (train.clone(), (0..train.len()).collect())
    };
    let normalizer = Normalizer::fit(&subset.x)?;
    let points = normalizer.apply(&subset.x)?.transpose();
    let gamma = cfg.gamma_for(train.dim());
    let n = points.rows();
    let mut kernel = KernelRows::new(&points, gamma);
    let mut smo = Smo {
        y: subset.labels().into_iter().map(sign).collect(),
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        c: cfg.c,
    };
    let mut trace = vec![0.0];
    let mut iterations = 0usize;
    let mut best_gap = f64::INFINITY;
    let mut stale_passes = 0usize;
    let mut improved = false;
    while let Some((i, j)) = smo.select(&mut kernel, cfg.kkt_tol) {
        smo.update(&mut kernel, i, j);
        iterations += 1;
        trace.push(smo.dual());
        if iterations % n == 0 {
            let gap = smo.gap();
            if !gap.is_finite() {
                return Err(Error::SolverDiverged { iteration: iterations });
            }
            if gap < best_gap {
                best_gap = gap;
                improved = true;
            }
            if improved {
                stale_passes = 0;
            } else {
                stale_passes += 1;
            }
            improved = false;
            if stale_passes >= cfg.max_passes {
                let rho = smo.rho();
                return Err(Error::Stalled {
                    iterations,
                    violations: smo.violations(rho, cfg.kkt_tol),
                });
            }
        }
    }
    let rho = smo.rho();
    let sv: Vec<usize> = (0..n).filter(|&t| smo.alpha[t] > 0.0).collect();
    let support_vectors = Matrix::from_fn(points.cols(), sv.len(), |d, s| points[(sv[s], d)]);
    let coeffs = sv.iter().map(|&t| smo.alpha[t] * smo.y[t]).collect();
    let model = SvmModel {
        normalizer,
        support_vectors,
        coeffs,
        bias: -rho,
        gamma,
    };
    let report = SvmTrainReport {
        used,
        gap: smo.gap(),
        alphas: smo.alpha,
        dual_trace: trace,
        iterations,
    };
    Ok((model, report))
}

/// Decision values on normalized columns.
fn scores_normalized(model: &SvmModel, xn: &Matrix) -> Vec<f64> {
    let s = model.support_vectors.cols();
    let m = xn.cols();
    let mut out = vec![model.bias; m];
    if s == 0 || m == 0 {
        return out;
    }
    let sv_sq: Vec<f64> = (0..s)
        .map(|k| (0..model.support_vectors.rows()).map(|d| { let v = model.support_vectors[(d, k)]; v * v }).sum())
        .collect();
    let mut start = 0;
    while start < m {
        let end = (start + PREDICT_BLOCK).min(m);
        let block = xn.column_range(start, end);
        let cross = model.support_vectors.t_matmul(&block);
        for j in 0..end - start {
            let x_sq: f64 = (0..block.rows()).map(|d| { let v = block[(d, j)]; v * v }).sum();
            let mut acc = 0.0;
            for k in 0..s {
                let d2 = (sv_sq[k] + x_sq - 2.0 * cross[(k, j)]).max(0.0);
                acc += model.coeffs[k] * libm::exp(-model.gamma * d2);
            }
            out[start + j] += acc;
        }
        start = end;
    }
    out
}

/// `(scores, labels)`; a score of exactly zero is C1.
pub fn svm_predict(model: &SvmModel, x: &Matrix) -> Result<(Vec<f64>, Vec<Class>)> {
    let xn = model.normalizer.apply(x)?;
    let scores = scores_normalized(model, &xn);
    let labels = scores.iter().map(|&s| if s >= 0.0 { Class::C1 } else { Class::C2 }).collect();
    Ok((scores, labels))
}

/// Independent KKT check through the prediction path: returns the number of
/// points of `train.select(report.used)` whose multiplier misses its KKT
/// condition by more than `tol`, or whose multiplier leaves `[0, C]`.
pub fn svm_kkt_audit(model: &SvmModel, train: &LabeledSet, report: &SvmTrainReport, c: f64, tol: f64) -> Result<usize> {
    let subset = train.select(&report.used);
    let (scores, _) = svm_predict(model, &subset.x)?;
    let labels = subset.labels();
    Ok(scores
        .iter()
        .zip(&labels)
        .zip(&report.alphas)
        .filter(|((&s, &l), &a)| !(0.0..=c).contains(&a) || kkt_violated(a, c, sign(l) * s, tol))
        .count())
}
