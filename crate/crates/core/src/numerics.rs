//! Least-squares solvers behind the progressive network.
//!
//! Two problems are solved here:
//!
//! * ridge regression, `min_O ‖T − O·Y‖²_F + λ‖O‖²_F`, in closed form;
//! * the norm-constrained problem `min_O ‖T − O·Z‖²_F` s.t. `‖O‖_F ≤ ε`,
//!   by ADMM on the splitting `O = V` with `V` confined to the ball.
//!
//! Both only ever need the Gram statistics `Z·Zᵀ`, `T·Zᵀ` and `‖T‖²_F`, so the
//! solvers come in a matrix form and a [`LsGram`] form. The network trainer
//! accumulates the Gram form block by block and never holds `Z` in memory.

use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::matrix::{Cholesky, Lu};
use crate::rng::seeded_rng;
use crate::{Error, Matrix, Result};

pub fn relu(m: &Matrix) -> Matrix {
    m.map(|v| v.max(0.0))
}

/// Sufficient statistics of a least-squares problem `‖T − O·Z‖²_F`.
#[derive(Debug, Clone)]
pub struct LsGram {
    /// `Z·Zᵀ` (n×n)
    pub zz: Matrix,
    /// `T·Zᵀ` (Q×n)
    pub tz: Matrix,
    /// `‖T‖²_F`
    pub tt: f64,
}

impl LsGram {
    pub fn new(t: &Matrix, z: &Matrix) -> Self {
        assert_eq!(t.cols(), z.cols(), "T and Z column counts");
        LsGram {
            zz: z.gram(),
            tz: t.matmul_t(z),
            tt: t.frobenius_sq(),
        }
    }

    pub fn zeros(q: usize, n: usize) -> Self {
        LsGram {
            zz: Matrix::zeros(n, n),
            tz: Matrix::zeros(q, n),
            tt: 0.0,
        }
    }

    /// Adds the contribution of another block of columns.
    pub fn accumulate(&mut self, t: &Matrix, z: &Matrix) {
        self.zz.axpy(1.0, &z.matmul_t(z));
        self.tz.axpy(1.0, &t.matmul_t(z));
        self.tt += t.frobenius_sq();
    }

    pub fn finish(&mut self) {
        self.zz.symmetrize();
    }

    /// `‖T − O·Z‖²_F` evaluated from the statistics.
    pub fn objective(&self, o: &Matrix) -> f64 {
        let og = o.matmul(&self.zz);
        (self.tt - 2.0 * o.dot(&self.tz) + og.dot(o)).max(0.0)
    }
}

/// Ridge solution `O = T·Yᵀ·(Y·Yᵀ + λI)⁻¹` (Q×m).
pub fn regularized_least_squares(t: &Matrix, y: &Matrix, lambda: f64) -> Result<Matrix> {
    if t.cols() != y.cols() {
        return Err(Error::DimensionMismatch {
            expected: y.cols(),
            found: t.cols(),
        });
    }
    ridge_from_gram(&LsGram::new(t, y), lambda)
}

pub fn ridge_from_gram(g: &LsGram, lambda: f64) -> Result<Matrix> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("lambda must be >= 0, got {lambda}")));
    }
    let mut a = g.zz.clone();
    a.add_diagonal(lambda);
    let o = if lambda > 0.0 {
        match Cholesky::new(&a) {
            Ok(ch) => ch.solve_right(&g.tz),
            Err(_) => lu_solve_right(&a, &g.tz)?,
        }
    } else {
        lu_solve_right(&a, &g.tz)?
    };
    if !o.is_finite() {
        return Err(Error::Singular("ridge solution is not finite"));
    }
    Ok(o)
}

fn lu_solve_right(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    // X·A = B  ⇔  Aᵀ·Xᵀ = Bᵀ; A is symmetric here.
    let lu = Lu::new(a)?;
    let mut x = Matrix::zeros(b.rows(), b.cols());
    for r in 0..b.rows() {
        x.row_mut(r).copy_from_slice(&lu.solve_vec(b.row(r)));
    }
    Ok(x)
}

/// Euclidean projection onto `{M : ‖M‖_F ≤ eps}`.
pub fn project_frobenius_ball(m: &Matrix, eps: f64) -> Matrix {
    let norm = m.frobenius_norm();
    if norm <= eps {
        m.clone()
    } else {
        m.scale(eps / norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    /// Penalty parameter of the augmented Lagrangian.
    pub mu: f64,
    pub max_iters: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            mu: 1e4,
            max_iters: 100,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || self.max_iters < 1 || !(self.tol_primal > 0.0) || !(self.tol_dual > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    /// Feasible solution (`‖O‖_F ≤ eps`).
    pub o: Matrix,
    pub iterations: usize,
    pub converged: bool,
    /// `‖T − V_k·Z‖²_F` after every iteration.
    pub objective_trace: Vec<f64>,
}

pub fn admm_constrained_ls(t: &Matrix, z: &Matrix, eps: f64, cfg: &AdmmConfig) -> Result<AdmmOutcome> {
    if t.cols() != z.cols() {
        return Err(Error::DimensionMismatch {
            expected: z.cols(),
            found: t.cols(),
        });
    }
    admm_constrained_ls_gram(&LsGram::new(t, z), eps, cfg)
}

/// ADMM for `min ‖T − O·Z‖²_F` s.t. `‖O‖_F ≤ eps` on Gram statistics.
///
/// Iteration (scaled dual `Λ`):
///   O ← (2·TZᵀ + μ(V − Λ))·(2·ZZᵀ + μI)⁻¹
///   V ← Π_eps(O + Λ)
///   Λ ← Λ + O − V
///
/// If the unconstrained minimizer exists and already lies in the ball it is
/// returned directly (the constraint is inactive there).
pub fn admm_constrained_ls_gram(g: &LsGram, eps: f64, cfg: &AdmmConfig) -> Result<AdmmOutcome> {
    cfg.validate()?;
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("ball radius must be > 0, got {eps}")));
    }
    let n = g.zz.rows();
    let q = g.tz.rows();

    if let Ok(ch) = Cholesky::new(&g.zz) {
        let o = ch.solve_right(&g.tz);
        if o.is_finite() && o.frobenius_norm() <= eps {
            let resid = o.matmul(&g.zz).sub(&g.tz).frobenius_norm();
            if resid <= 1e-9 * (1.0 + g.tz.frobenius_norm()) {
                let obj = g.objective(&o);
                return Ok(AdmmOutcome {
                    o,
                    iterations: 0,
                    converged: true,
                    objective_trace: alloc::vec![obj],
                });
            }
        }
    }

    let mu = cfg.mu;
    let mut a = g.zz.scale(2.0);
    a.add_diagonal(mu);
    let ch = Cholesky::new(&a)?;
    let tz2 = g.tz.scale(2.0);

    let mut v = project_frobenius_ball(&ch.solve_right(&tz2), eps);
    let mut lam = Matrix::zeros(q, n);
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut converged = false;
    let mut iterations = 0;

    for k in 0..cfg.max_iters {
        iterations = k + 1;
        let mut rhs = v.sub(&lam).scale(mu);
        rhs.axpy(1.0, &tz2);
        let o = ch.solve_right(&rhs);
        let v_new = project_frobenius_ball(&o.add(&lam), eps);
        let primal = o.sub(&v_new);
        lam.axpy(1.0, &primal);
        let r = primal.frobenius_norm();
        let s = mu * v_new.sub(&v).frobenius_norm();
        v = v_new;
        if !v.is_finite() || !lam.is_finite() {
            return Err(Error::SolverDiverged { iteration: iterations });
        }
        trace.push(g.objective(&v));
        if r <= cfg.tol_primal && s <= cfg.tol_dual {
            converged = true;
            break;
        }
    }

    Ok(AdmmOutcome {
        o: v,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// i.i.d. U(−1, 1) entries from ChaCha8 keyed by `seed`, filled row-major.
pub fn seeded_random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = seeded_rng(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn relu_examples() {
        let m = Matrix::from_rows(&[&[-1.0, 2.0], &[0.0, -3.0]]);
        assert_eq!(relu(&m), Matrix::from_rows(&[&[0.0, 2.0], &[0.0, 0.0]]));
        let p = Matrix::from_rows(&[&[1.0, 0.0], &[4.5, 2.0]]);
        assert_eq!(relu(&p), p);
    }

    proptest! {
        #[test]
        fn relu_split_identity(vals in proptest::collection::vec(-1e6f64..1e6, 12)) {
            let m = Matrix::from_vec(3, 4, vals);
            let back = relu(&m).sub(&relu(&m.scale(-1.0)));
            prop_assert_eq!(back, m);
        }

        #[test]
        fn projection_is_idempotent_and_feasible(vals in proptest::collection::vec(-10f64..10.0, 6), eps in 0.01f64..20.0) {
            let m = Matrix::from_vec(2, 3, vals);
            let p = project_frobenius_ball(&m, eps);
            prop_assert!(p.frobenius_norm() <= eps * (1.0 + 1e-12));
            let pp = project_frobenius_ball(&p, eps);
            prop_assert!(pp.sub(&p).max_abs() <= 1e-12 * (1.0 + eps));
        }
    }

    #[test]
    fn ridge_with_identity_design_returns_targets() {
        let t = Matrix::from_rows(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        let o = regularized_least_squares(&t, &Matrix::identity(3), 0.0).unwrap();
        assert!(o.sub(&t).max_abs() < 1e-14);
        let o = regularized_least_squares(&t, &Matrix::identity(3), 0.1).unwrap();
        assert!(o.sub(&t.scale(1.0 / 1.1)).max_abs() < 1e-14);
    }

    #[test]
    fn ridge_shrinks_with_lambda() {
        let y = seeded_random_matrix(5, 20, 3);
        let t = seeded_random_matrix(2, 20, 4);
        let small = regularized_least_squares(&t, &y, 1.0).unwrap().frobenius_norm();
        let big = regularized_least_squares(&t, &y, 1e6).unwrap().frobenius_norm();
        let huge = regularized_least_squares(&t, &y, 1e12).unwrap().frobenius_norm();
        assert!(big < small && huge < big && huge < 1e-9);
    }

    #[test]
    fn ridge_stationarity() {
        let y = seeded_random_matrix(5, 20, 11);
        let t = seeded_random_matrix(2, 20, 12);
        let lambda = 0.1;
        let o = regularized_least_squares(&t, &y, lambda).unwrap();
        let mut a = y.gram();
        a.add_diagonal(lambda);
        let resid = o.matmul(&a).sub(&t.matmul_t(&y)).frobenius_norm();
        assert!(resid <= 1e-8, "{resid}");
    }

    #[test]
    fn ridge_singular_without_lambda() {
        let y = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        let t = Matrix::from_rows(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        assert!(matches!(regularized_least_squares(&t, &y, 0.0), Err(Error::Singular(_))));
        assert!(regularized_least_squares(&t, &y, 0.1).is_ok());
    }

    #[test]
    fn projection_examples() {
        let m = Matrix::from_rows(&[&[3.0, 4.0]]);
        let p = project_frobenius_ball(&m, 2.5);
        assert!((p.frobenius_norm() - 2.5).abs() < 1e-14);
        assert!((p[(0, 0)] / p[(0, 1)] - 0.75).abs() < 1e-14);
        assert_eq!(project_frobenius_ball(&Matrix::zeros(2, 2), 1.0), Matrix::zeros(2, 2));
        assert_eq!(project_frobenius_ball(&m, 10.0), m);
    }

    #[test]
    fn admm_zero_targets_give_zero() {
        let z = seeded_random_matrix(3, 8, 1);
        let out = admm_constrained_ls(&Matrix::zeros(2, 8), &z, 1.0, &AdmmConfig::default()).unwrap();
        assert!(out.o.max_abs() < 1e-12);
    }

    #[test]
    fn admm_matches_unconstrained_for_large_ball() {
        let z = seeded_random_matrix(6, 200, 5);
        let t = seeded_random_matrix(2, 200, 6);
        let out = admm_constrained_ls(&t, &z, 1e6, &AdmmConfig::default()).unwrap();
        let ls = regularized_least_squares(&t, &z, 0.0).unwrap();
        assert!(out.o.sub(&ls).frobenius_norm() <= 1e-6);
    }

    #[test]
    fn admm_binding_constraint_is_feasible_and_not_worse_than_projected_ls() {
        let z = seeded_random_matrix(4, 60, 8);
        let t = seeded_random_matrix(2, 60, 9).scale(10.0);
        let eps = 0.5;
        let out = admm_constrained_ls(&t, &z, eps, &AdmmConfig { mu: 10.0, max_iters: 2000, ..Default::default() }).unwrap();
        assert!(out.o.frobenius_norm() <= eps + 1e-9);
        let g = LsGram::new(&t, &z);
        let ls = regularized_least_squares(&t, &z, 0.0).unwrap();
        assert!(ls.frobenius_norm() > eps);
        let proj = project_frobenius_ball(&ls, eps);
        assert!(g.objective(&out.o) <= g.objective(&proj) + 1e-3);
    }

    #[test]
    fn admm_rejects_bad_radius() {
        let z = seeded_random_matrix(3, 8, 1);
        assert!(admm_constrained_ls(&Matrix::zeros(2, 8), &z, 0.0, &AdmmConfig::default()).is_err());
    }

    #[test]
    fn random_matrix_contract() {
        assert_eq!(seeded_random_matrix(0, 5, 1).shape(), (0, 5));
        assert_eq!(seeded_random_matrix(4, 5, 9), seeded_random_matrix(4, 5, 9));
        assert_ne!(seeded_random_matrix(4, 5, 9), seeded_random_matrix(4, 5, 10));
        let m = seeded_random_matrix(100, 100, 2024);
        let n = 10_000.0;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.05);
        assert!((var - 1.0 / 3.0).abs() < 0.05);
        assert!(m.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
