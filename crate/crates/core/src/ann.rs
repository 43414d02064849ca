//! Single-hidden-layer network: sigmoid hidden units, softmax output,
//! mean cross-entropy loss, plain mini-batch gradient descent.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledSet, Normalizer};
use crate::framing::Class;
use crate::pln::decode_labels;
use crate::rng::{derive_seed, permutation, seeded_rng};
use crate::{Error, Matrix, Result, Q};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnTrainConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for AnnTrainConfig {
    fn default() -> Self {
        AnnTrainConfig {
            hidden: 400,
            learning_rate: 0.01,
            batch_size: 128,
            epochs: 50,
            seed: 0,
        }
    }
}

impl AnnTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden < 1 || !(self.learning_rate > 0.0) || self.batch_size < 1 {
            return Err(Error::InvalidConfig(alloc::format!("ann: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    pub normalizer: Normalizer,
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnGradient {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

/// Glorot-uniform weights, zero biases, identity normalizer.
pub fn ann_init(d: usize, h: usize, q: usize, seed: u64) -> AnnModel {
    let mut rng = seeded_rng(seed);
    let mut uniform = |rows: usize, cols: usize| {
        let limit = libm::sqrt(6.0 / (rows + cols) as f64);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-limit..=limit))
    };
    let w1 = uniform(h, d);
    let w2 = uniform(q, h);
    AnnModel {
        normalizer: Normalizer::identity(d),
        w1,
        b1: vec![0.0; h],
        w2,
        b2: vec![0.0; q],
        loss_trace: Vec::new(),
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-v))
}

fn add_bias(m: &mut Matrix, b: &[f64]) {
    for (r, &bv) in b.iter().enumerate() {
        for v in m.row_mut(r) {
            *v += bv;
        }
    }
}

/// Column-wise softmax in place; returns per-column log-sum-exp.
fn softmax_columns(m: &mut Matrix) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut lse = vec![0.0; cols];
    for j in 0..cols {
        let mx = (0..rows).map(|r| m[(r, j)]).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = (0..rows).map(|r| libm::exp(m[(r, j)] - mx)).sum();
        lse[j] = mx + libm::log(s);
        for r in 0..rows {
            m[(r, j)] = libm::exp(m[(r, j)] - lse[j]);
        }
    }
    lse
}

impl AnnModel {
    pub fn hidden(&self) -> usize {
        self.w1.rows()
    }

    /// Hidden activations, output probabilities and mean loss (if targets
    /// are given) for normalized columns.
    fn forward_normalized(&self, xn: &Matrix, t: Option<&Matrix>) -> (Matrix, Matrix, f64) {
        let mut a = self.w1.matmul(xn);
        add_bias(&mut a, &self.b1);
        let a = a.map(sigmoid);
        let mut logits = self.w2.matmul(&a);
        add_bias(&mut logits, &self.b2);
        let raw = logits.clone();
        let lse = softmax_columns(&mut logits);
        let loss = match t {
            Some(t) if xn.cols() > 0 => {
                let mut total = 0.0;
                for j in 0..xn.cols() {
                    for q in 0..t.rows() {
                        total -= t[(q, j)] * (raw[(q, j)] - lse[j]);
                    }
                }
                total / xn.cols() as f64
            }
            _ => 0.0,
        };
        (a, logits, loss)
    }

    /// Mean cross-entropy of the model on raw columns.
    pub fn loss(&self, x: &Matrix, t: &Matrix) -> Result<f64> {
        let xn = self.normalizer.apply(x)?;
        Ok(self.forward_normalized(&xn, Some(t)).2)
    }

    fn gradient_normalized(&self, xn: &Matrix, t: &Matrix) -> (AnnGradient, f64) {
        let m = xn.cols().max(1) as f64;
        let (a, p, loss) = self.forward_normalized(xn, Some(t));
        let delta2 = p.sub(t).scale(1.0 / m);
        let gw2 = delta2.matmul_t(&a);
        let gb2 = (0..delta2.rows()).map(|r| delta2.row(r).iter().sum()).collect();
        let mut delta1 = self.w2.t_matmul(&delta2);
        for (d, &av) in delta1.as_mut_slice().iter_mut().zip(a.as_slice()) {
            *d *= av * (1.0 - av);
        }
        let gw1 = delta1.matmul_t(xn);
        let gb1 = (0..delta1.rows()).map(|r| delta1.row(r).iter().sum()).collect();
        (
            AnnGradient {
                w1: gw1,
                b1: gb1,
                w2: gw2,
                b2: gb2,
            },
            loss,
        )
    }

    fn step(&mut self, g: &AnnGradient, lr: f64) {
        self.w1.axpy(-lr, &g.w1);
        self.w2.axpy(-lr, &g.w2);
        for (b, gb) in self.b1.iter_mut().zip(&g.b1) {
            *b -= lr * gb;
        }
        for (b, gb) in self.b2.iter_mut().zip(&g.b2) {
            *b -= lr * gb;
        }
    }
}

/// `(probabilities, labels)` for raw columns.
pub fn ann_forward(model: &AnnModel, x: &Matrix) -> Result<(Matrix, Vec<Class>)> {
    let xn = model.normalizer.apply(x)?;
    let (_, p, _) = model.forward_normalized(&xn, None);
    let labels = decode_labels(&p);
    Ok((p, labels))
}

/// Exact gradient of the mean cross-entropy with respect to all parameters.
pub fn ann_gradient(model: &AnnModel, x: &Matrix, t: &Matrix) -> Result<AnnGradient> {
    if x.cols() != t.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            found: t.cols(),
        });
    }
    if t.rows() != model.w2.rows() {
        return Err(Error::DimensionMismatch {
            expected: model.w2.rows(),
            found: t.rows(),
        });
    }
    let xn = model.normalizer.apply(x)?;
    Ok(model.gradient_normalized(&xn, t).0)
}

/// Mini-batch gradient descent on `train` (expected to be balanced already).
pub fn ann_train(train: &LabeledSet, cfg: &AnnTrainConfig) -> Result<AnnModel> {
    cfg.validate()?;
    let (c1, c2) = train.class_counts();
    if c1 == 0 {
        return Err(Error::EmptyClass("C1"));
    }
    if c2 == 0 {
        return Err(Error::EmptyClass("C2"));
    }
    let mut model = ann_init(train.dim(), cfg.hidden, Q, derive_seed(cfg.seed, 1));
    if cfg.epochs == 0 {
        return Ok(model);
    }
    model.normalizer = Normalizer::fit(&train.x)?;
    let xn = model.normalizer.apply(&train.x)?;
    let n = train.len();
    for epoch in 0..cfg.epochs {
        let mut rng = seeded_rng(derive_seed(cfg.seed, 100 + epoch as u64));
        let order = permutation(n, &mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = xn.select_columns(batch);
            let tb = train.t.select_columns(batch);
            let (g, loss) = model.gradient_normalized(&xb, &tb);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            total += loss * batch.len() as f64;
            model.step(&g, cfg.learning_rate);
        }
        let mean = total / n as f64;
        if !mean.is_finite() || !model.w1.is_finite() || !model.w2.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        model.loss_trace.push(mean);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::encode_targets;
    use crate::framing::LabeledFrame;

    fn random_instance(d: usize, h: usize, m: usize, seed: u64) -> (AnnModel, Matrix, Matrix) {
        let mut model = ann_init(d, h, Q, seed);
        let mut rng = seeded_rng(seed + 1);
        model.b1 = (0..h).map(|_| rng.random_range(-0.5..0.5)).collect();
        model.b2 = (0..Q).map(|_| rng.random_range(-0.5..0.5)).collect();
        let x = Matrix::from_fn(d, m, |_, _| rng.random_range(-2.0..2.0));
        let labels: Vec<Class> = (0..m).map(|j| if j % 3 == 0 { Class::C1 } else { Class::C2 }).collect();
        (model, x, encode_targets(&labels))
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
    }

    /// Central differences on every parameter.
    fn check_gradient(d: usize, h: usize, m: usize, seed: u64) -> f64 {
        let (model, x, t) = random_instance(d, h, m, seed);
        let g = ann_gradient(&model, &x, &t).unwrap();
        let step = 1e-5;
        let mut worst: f64 = 0.0;
        let loss_with = |f: &dyn Fn(&mut AnnModel)| {
            let mut m2 = model.clone();
            f(&mut m2);
            m2.loss(&x, &t).unwrap()
        };
        for r in 0..h {
            for c in 0..d {
                let num = (loss_with(&|m| m.w1[(r, c)] += step) - loss_with(&|m| m.w1[(r, c)] -= step)) / (2.0 * step);
                worst = worst.max(rel_err(num, g.w1[(r, c)]));
            }
            let num = (loss_with(&|m| m.b1[r] += step) - loss_with(&|m| m.b1[r] -= step)) / (2.0 * step);
            worst = worst.max(rel_err(num, g.b1[r]));
        }
        for r in 0..Q {
            for c in 0..h {
                let num = (loss_with(&|m| m.w2[(r, c)] += step) - loss_with(&|m| m.w2[(r, c)] -= step)) / (2.0 * step);
                worst = worst.max(rel_err(num, g.w2[(r, c)]));
            }
            let num = (loss_with(&|m| m.b2[r] += step) - loss_with(&|m| m.b2[r] -= step)) / (2.0 * step);
            worst = worst.max(rel_err(num, g.b2[r]));
        }
        worst
    }

    #[test]
    fn gradient_matches_central_differences() {
        let err = check_gradient(4, 3, 6, 17);
        assert!(err <= 1e-5, "relative error {err}");
    }

    #[test]
    fn init_contract() {
        let a = ann_init(30, 400, 2, 3);
        assert_eq!(a, ann_init(30, 400, 2, 3));
        assert!(a.b1.iter().chain(&a.b2).all(|&b| b == 0.0));
        let lim1 = libm::sqrt(6.0 / 430.0);
        let lim2 = libm::sqrt(6.0 / 402.0);
        assert!(a.w1.max_abs() <= lim1 && a.w2.max_abs() <= lim2);
    }

    #[test]
    fn probabilities_sum_to_one_and_zero_weights_tie() {
        let (model, x, _) = random_instance(4, 5, 7, 2);
        let (p, _) = ann_forward(&model, &x).unwrap();
        for j in 0..p.cols() {
            assert!((p[(0, j)] + p[(1, j)] - 1.0).abs() < 1e-12);
        }
        let mut zero = ann_init(4, 5, 2, 1);
        zero.w1 = Matrix::zeros(5, 4);
        zero.w2 = Matrix::zeros(2, 5);
        let (p, labels) = ann_forward(&zero, &x).unwrap();
        assert!(p.as_slice().iter().all(|&v| v == 0.5));
        assert!(labels.iter().all(|&c| c == Class::C1));
    }

    #[test]
    fn output_gradient_vanishes_when_targets_equal_probs() {
        let (model, x, _) = random_instance(4, 3, 6, 8);
        let (p, _) = ann_forward(&model, &x).unwrap();
        let g = ann_gradient(&model, &x, &p).unwrap();
        assert!(g.w2.max_abs() < 1e-15 && g.b2.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn gradient_is_a_mean() {
        let (model, x, t) = random_instance(4, 3, 6, 8);
        let g1 = ann_gradient(&model, &x, &t).unwrap();
        let g2 = ann_gradient(&model, &x.hstack(&x), &t.hstack(&t)).unwrap();
        assert!(g1.w1.sub(&g2.w1).max_abs() < 1e-14);
        assert!(g1.w2.sub(&g2.w2).max_abs() < 1e-14);
    }

    fn clusters(n: usize, seed: u64) -> LabeledSet {
        let mut rng = seeded_rng(seed);
        let frames: Vec<LabeledFrame> = (0..n)
            .map(|i| {
                let c = if i % 2 == 0 { Class::C1 } else { Class::C2 };
                let centre = if c == Class::C1 { 2.0 } else { -2.0 };
                LabeledFrame {
                    features: (0..3).map(|_| centre + rng.random_range(-0.5..0.5)).collect(),
                    label: c,
                    patient_id: "toy".into(),
                    start_index: i,
                }
            })
            .collect();
        LabeledSet::from_frames(&frames, 3)
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let set = clusters(20, 1);
        let cfg = AnnTrainConfig { epochs: 0, hidden: 8, ..Default::default() };
        let m = ann_train(&set, &cfg).unwrap();
        assert_eq!(m, ann_init(3, 8, Q, derive_seed(cfg.seed, 1)));
    }

    #[test]
    fn separable_clusters_are_learned() {
        let set = clusters(200, 4);
        let cfg = AnnTrainConfig { hidden: 16, epochs: 30, learning_rate: 0.5, batch_size: 16, seed: 3 };
        let m = ann_train(&set, &cfg).unwrap();
        let (_, labels) = ann_forward(&m, &set.x).unwrap();
        let c = crate::metrics::confusion_counts(&set.labels(), &labels).unwrap();
        assert!(crate::metrics::fm_index(&c).unwrap() >= 0.95);
        assert!(m.loss_trace.last().unwrap() <= m.loss_trace.first().unwrap());
        assert_eq!(m, ann_train(&set, &cfg).unwrap());
    }

    #[test]
    fn huge_learning_rate_reports_epoch() {
        let set = clusters(50, 4);
        let cfg = AnnTrainConfig { hidden: 8, epochs: 5, learning_rate: f64::MAX, batch_size: 50, seed: 3 };
        assert!(matches!(ann_train(&set, &cfg), Err(Error::NonFiniteLoss { .. })));
    }
}
