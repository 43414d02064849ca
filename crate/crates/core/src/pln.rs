//! Progressive learning network (PLN).
//!
//! The network starts as a ridge-regression map `t̂₀ = O₀·x` on normalized
//! features and grows one layer at a time. Layer `i` sees the previous
//! hidden signal `U` (with `U₀ = x`) and the previous prediction `t̂`:
//!
//! ```text
//! Z = [ relu( t̂) ]      (Q rows)
//!     [ relu(−t̂) ]      (Q rows)
//!     [ relu(R·U)  ]      (random rows, U(−1, 1) weights)
//! t̂' = O·Z,   ‖O‖_F ≤ α·√(2Q)
//! ```
//!
//! Since `relu(t) − relu(−t) = t`, the output matrix `[I, −I, 0]` reproduces
//! the previous prediction exactly, and it lies inside the ball. Each layer
//! keeps whichever of the ADMM solution and that reproduction matrix has the
//! lower training cost, so the recorded training cost never increases.
//!
//! Random rows are added in steps of `delta_nodes` while validation
//! Fowlkes-Mallows improves; a layer is kept only if it improves validation
//! FM over the network without it.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{balance_by_duplication, stratified_split, LabeledSet, Normalizer};
use crate::framing::Class;
use crate::metrics::{confusion_counts, fm_index};
use crate::numerics::{admm_constrained_ls_gram, relu, ridge_from_gram, seeded_random_matrix, AdmmConfig, LsGram};
use crate::rng::derive_seed;
use crate::{Error, Matrix, Result, Q};

/// Columns per block when streaming through a data set.
const BLOCK: usize = 2048;
/// Hidden signals are cached between growth steps below this many entries.
const CACHE_ENTRIES: usize = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlnConfig {
    /// Ridge weight of the base layer.
    pub lambda: f64,
    /// ADMM penalty for the layer problems.
    pub mu: f64,
    /// Ball radius factor: `eps = alpha·√(2Q)`.
    pub alpha: f64,
    pub delta_nodes: usize,
    /// Maximum layer width including the 2Q progression rows.
    pub n_max: usize,
    pub l_max: usize,
    pub eta_node: f64,
    pub eta_layer: f64,
    pub val_fraction: f64,
    /// Iteration limits and tolerances; its `mu` is overridden by `self.mu`.
    pub admm: AdmmConfig,
    pub seed: u64,
}

impl Default for PlnConfig {
    fn default() -> Self {
        PlnConfig {
            lambda: 0.1,
            mu: 1e4,
            alpha: 2.0,
            delta_nodes: 50,
            n_max: 1000,
            l_max: 10,
            eta_node: 1e-3,
            eta_layer: 1e-3,
            val_fraction: 0.2,
            admm: AdmmConfig::default(),
            seed: 0,
        }
    }
}

impl PlnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("pln: {what}")));
        if !(self.lambda >= 0.0) {
            return bad("lambda must be >= 0");
        }
        if !(self.mu > 0.0) {
            return bad("mu must be > 0");
        }
        if !(self.alpha >= 1.0) {
            return bad("alpha must be >= 1");
        }
        if self.delta_nodes < 1 {
            return bad("delta_nodes must be >= 1");
        }
        if self.n_max < 2 * Q + self.delta_nodes {
            return bad("n_max must be >= 2Q + delta_nodes");
        }
        if !(self.eta_node >= 0.0 && self.eta_layer >= 0.0) {
            return bad("eta thresholds must be >= 0");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad("val_fraction must be in (0, 1)");
        }
        self.admm_config().validate()
    }

    pub fn admm_config(&self) -> AdmmConfig {
        AdmmConfig { mu: self.mu, ..self.admm }
    }

    /// Radius of the Frobenius ball for layer output matrices.
    pub fn eps(&self) -> f64 {
        self.alpha * libm::sqrt((2 * Q) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlnLayer {
    /// Random block, `(n − 2Q) × m` where `m` is the previous hidden width.
    pub r: Matrix,
    /// Output matrix, `Q × n`.
    pub o: Matrix,
}

impl PlnLayer {
    pub fn width(&self) -> usize {
        2 * Q + self.r.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlnModel {
    pub config: PlnConfig,
    pub normalizer: Normalizer,
    pub o0: Matrix,
    pub layers: Vec<PlnLayer>,
    /// Training cost `‖T − t̂‖²_F` of the base map and after every layer.
    pub costs: Vec<f64>,
    /// Validation FM of the base map and after every layer (empty if the
    /// model was built without a validation set).
    pub val_fms: Vec<f64>,
}

/// `[I_Q, −I_Q, 0]`, the output matrix that reproduces the previous prediction.
pub fn reproduction_matrix(width: usize) -> Matrix {
    let mut o = Matrix::zeros(Q, width);
    for q in 0..Q {
        o[(q, q)] = 1.0;
        o[(q, Q + q)] = -1.0;
    }
    o
}

/// Hidden signal of a layer given the previous prediction and hidden signal.
fn hidden(t_prev: &Matrix, u_prev: &Matrix, r: &Matrix) -> Matrix {
    let pos = relu(t_prev);
    let neg = relu(&t_prev.scale(-1.0));
    let rand = relu(&r.matmul(u_prev));
    pos.vstack(&neg).vstack(&rand)
}

/// Label rule shared by every model: C1 iff `t̂[0] ≥ t̂[1]`.
pub fn decode_labels(t_hat: &Matrix) -> Vec<Class> {
    (0..t_hat.cols())
        .map(|j| if t_hat[(0, j)] >= t_hat[(1, j)] { Class::C1 } else { Class::C2 })
        .collect()
}

fn blocks(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).step_by(BLOCK).map(move |s| (s, (s + BLOCK).min(n)))
}

impl PlnModel {
    pub fn dim(&self) -> usize {
        self.normalizer.dim()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Hidden signal and prediction after `depth` layers, for normalized columns.
    pub fn forward_normalized(&self, x: &Matrix, depth: usize) -> (Matrix, Matrix) {
        let mut u = x.clone();
        let mut t = self.o0.matmul(x);
        for layer in &self.layers[..depth] {
            let z = hidden(&t, &u, &layer.r);
            t = layer.o.matmul(&z);
            u = z;
        }
        (u, t)
    }

    fn predict_normalized(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(Q, x.cols());
        for (s, e) in blocks(x.cols()) {
            let (_, t) = self.forward_normalized(&x.column_range(s, e), self.depth());
            for q in 0..Q {
                out.row_mut(q)[s..e].copy_from_slice(t.row(q));
            }
        }
        out
    }

    fn hidden_width(&self, depth: usize) -> usize {
        if depth == 0 {
            self.o0.cols()
        } else {
            self.layers[depth - 1].width()
        }
    }
}

/// Fits the normalizer and the ridge base map on `train`; returns the model
/// without layers and its training cost.
pub fn init_base_layer(train: &LabeledSet, cfg: &PlnConfig) -> Result<(PlnModel, f64)> {
    cfg.validate()?;
    if train.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: train.len() });
    }
    let normalizer = Normalizer::fit(&train.x)?;
    let xn = normalizer.apply(&train.x)?;
    let o0 = ridge_from_gram(&LsGram::new(&train.t, &xn), cfg.lambda)?;
    let cost0 = train.t.sub(&o0.matmul(&xn)).frobenius_sq();
    Ok((
        PlnModel {
            config: *cfg,
            normalizer,
            o0,
            layers: Vec::new(),
            costs: alloc::vec![cost0],
            val_fms: Vec::new(),
        },
        cost0,
    ))
}

/// Prediction and hidden signal of the current network over a data set,
/// either cached per block or recomputed on demand.
struct Forward<'a> {
    model: &'a PlnModel,
    x: &'a Matrix,
    cache: Option<Vec<(Matrix, Matrix)>>,
}

impl<'a> Forward<'a> {
    fn new(model: &'a PlnModel, x: &'a Matrix) -> Self {
        let depth = model.depth();
        let cache = (model.hidden_width(depth) * x.cols() <= CACHE_ENTRIES).then(|| {
            blocks(x.cols())
                .map(|(s, e)| model.forward_normalized(&x.column_range(s, e), depth))
                .collect()
        });
        Forward { model, x, cache }
    }

    fn for_each(&self, mut f: impl FnMut(usize, usize, &Matrix, &Matrix) -> Result<()>) -> Result<()> {
        for (b, (s, e)) in blocks(self.x.cols()).enumerate() {
            match &self.cache {
                Some(c) => f(s, e, &c[b].0, &c[b].1)?,
                None => {
                    let (u, t) = self.model.forward_normalized(&self.x.column_range(s, e), self.model.depth());
                    f(s, e, &u, &t)?
                }
            }
        }
        Ok(())
    }

    /// Gram statistics of the candidate layer's hidden signal, reusing
    /// `prev` (statistics of the leading `prev.zz.rows()` hidden rows).
    fn gram(&self, targets: &Matrix, r: &Matrix, prev: Option<&LsGram>) -> Result<LsGram> {
        let n = 2 * Q + r.rows();
        let n_old = prev.map_or(0, |g| g.zz.rows());
        let mut cross = Matrix::zeros(n - n_old, n);
        let mut tz_add = Matrix::zeros(Q, n - n_old);
        let mut tt = 0.0;
        self.for_each(|s, e, u, t| {
            let z = hidden(t, u, r);
            if !z.is_finite() {
                return Err(Error::SolverDiverged { iteration: 0 });
            }
            let z_add = z.row_range(n_old, n);
            let tb = targets.column_range(s, e);
            cross.axpy(1.0, &z_add.matmul_t(&z));
            tz_add.axpy(1.0, &tb.matmul_t(&z_add));
            if prev.is_none() {
                tt += tb.frobenius_sq();
            }
            Ok(())
        })?;
        let mut g = LsGram::zeros(Q, n);
        g.tt = prev.map_or(tt, |p| p.tt);
        for i in 0..n {
            for j in 0..n {
                g.zz[(i, j)] = match (i < n_old, j < n_old) {
                    (true, true) => prev.map_or(0.0, |p| p.zz[(i, j)]),
                    (false, _) => cross[(i - n_old, j)],
                    (true, false) => cross[(j - n_old, i)],
                };
            }
            for q in 0..Q {
                g.tz[(q, i)] = if i < n_old { prev.map_or(0.0, |p| p.tz[(q, i)]) } else { tz_add[(q, i - n_old)] };
            }
        }
        g.finish();
        Ok(g)
    }

    /// Output of the candidate layer over the whole set.
    fn outputs(&self, r: &Matrix, o: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(Q, self.x.cols());
        self.for_each(|s, e, u, t| {
            let y = o.matmul(&hidden(t, u, r));
            for q in 0..Q {
                out.row_mut(q)[s..e].copy_from_slice(y.row(q));
            }
            Ok(())
        })?;
        Ok(out)
    }

    /// Current network's prediction over the whole set.
    fn current(&self) -> Result<Matrix> {
        let mut out = Matrix::zeros(Q, self.x.cols());
        self.for_each(|s, e, _, t| {
            for q in 0..Q {
                out.row_mut(q)[s..e].copy_from_slice(t.row(q));
            }
            Ok(())
        })?;
        Ok(out)
    }
}

fn fm_of(t_hat: &Matrix, set: &LabeledSet) -> Result<f64> {
    fm_index(&confusion_counts(&set.labels(), &decode_labels(t_hat))?)
}

#[derive(Debug, Clone)]
pub struct GrowOutcome {
    /// The input model with the best candidate layer appended.
    pub model: PlnModel,
    pub accepted: bool,
    pub val_fm: f64,
    pub prev_val_fm: f64,
    /// True when the reproduction matrix beat the ADMM solution.
    pub reproduced: bool,
}

struct Candidate {
    layer: PlnLayer,
    val_fm: f64,
    reproduced: bool,
}

/// Builds and evaluates one new layer. `train` and `val` must already be
/// normalized with `model.normalizer`.
pub fn grow_layer(model: &PlnModel, train: &LabeledSet, val: &LabeledSet) -> Result<GrowOutcome> {
    let cfg = &model.config;
    cfg.validate()?;
    let depth = model.depth();
    let m = model.hidden_width(depth);
    let admm = cfg.admm_config();
    let eps = cfg.eps();
    let max_rand = cfg.n_max - 2 * Q;
    let r_full = seeded_random_matrix(max_rand, m, derive_seed(cfg.seed, 1000 + depth as u64));

    let fwd_train = Forward::new(model, &train.x);
    let fwd_val = Forward::new(model, &val.x);
    let prev_val_fm = fm_of(&fwd_val.current()?, val)?;

    let evaluate = |k: usize, prev: Option<&LsGram>| -> Result<(Candidate, LsGram)> {
        let r = r_full.top_rows(k);
        let g = fwd_train.gram(&train.t, &r, prev)?;
        let o_rep = reproduction_matrix(2 * Q + k);
        let rep_cost = g.objective(&o_rep);
        let sol = admm_constrained_ls_gram(&g, eps, &admm)?;
        let admm_cost = g.objective(&sol.o);
        // the Gram-form objective cancels large terms; demand a clear win
        let slack = 1e-12 * (1.0 + g.tt);
        let (o, reproduced) = if admm_cost < rep_cost - slack {
            (sol.o, false)
        } else {
            (o_rep, true)
        };
        let val_fm = fm_of(&fwd_val.outputs(&r, &o)?, val)?;
        let cand = Candidate {
            layer: PlnLayer { r, o },
            val_fm,
            reproduced,
        };
        Ok((cand, g))
    };

    let (mut best, mut g) = evaluate(cfg.delta_nodes.min(max_rand), None)?;
    let mut k = cfg.delta_nodes;
    while k + cfg.delta_nodes <= max_rand {
        k += cfg.delta_nodes;
        let (cand, g_next) = evaluate(k, Some(&g))?;
        g = g_next;
        if cand.val_fm > best.val_fm + cfg.eta_node {
            best = cand;
        } else {
            break;
        }
    }

    // Direct training cost of the chosen layer; fall back to reproduction if
    // rounding let it exceed the previous cost.
    let prev_cost = *model.costs.last().expect("base cost recorded");
    let mut cost = fwd_train.outputs(&best.layer.r, &best.layer.o)?.sub(&train.t).frobenius_sq();
    if cost > prev_cost && !best.reproduced {
        best.layer.o = reproduction_matrix(best.layer.width());
        best.reproduced = true;
        best.val_fm = prev_val_fm;
        cost = fwd_train.outputs(&best.layer.r, &best.layer.o)?.sub(&train.t).frobenius_sq();
    }

    let mut grown = model.clone();
    if grown.val_fms.is_empty() {
        grown.val_fms.push(prev_val_fm);
    }
    grown.layers.push(best.layer);
    grown.costs.push(cost);
    grown.val_fms.push(best.val_fm);
    Ok(GrowOutcome {
        model: grown,
        accepted: best.val_fm > prev_val_fm + cfg.eta_layer,
        val_fm: best.val_fm,
        prev_val_fm,
        reproduced: best.reproduced,
    })
}

/// Full training: stratified fit/validation split, duplication balancing of
/// the fit part, base layer, then layer growth until a layer is rejected or
/// `l_max` layers exist.
pub fn train_pln(train: &LabeledSet, cfg: &PlnConfig) -> Result<PlnModel> {
    cfg.validate()?;
    let (fit, val) = stratified_split(train, cfg.val_fraction, derive_seed(cfg.seed, 1))?;
    let fit = balance_by_duplication(&fit, derive_seed(cfg.seed, 2))?;
    let (mut model, _) = init_base_layer(&fit, cfg)?;
    let fit_n = fit.with_features(model.normalizer.apply(&fit.x)?);
    let val_n = val.with_features(model.normalizer.apply(&val.x)?);
    let base_fm = fm_of(&model.predict_normalized(&val_n.x), &val_n)?;
    model.val_fms = alloc::vec![base_fm];

    while model.depth() < cfg.l_max {
        let out = grow_layer(&model, &fit_n, &val_n)?;
        if !out.accepted {
            break;
        }
        model = out.model;
    }
    Ok(model)
}

/// `(t̂, labels)` for raw (unnormalized) columns.
pub fn pln_predict(model: &PlnModel, x: &Matrix) -> Result<(Matrix, Vec<Class>)> {
    let xn = model.normalizer.apply(x)?;
    let t_hat = model.predict_normalized(&xn);
    let labels = decode_labels(&t_hat);
    Ok((t_hat, labels))
}
