//! Robust regression `min_x sum_i w_i M(a_i x - b_i)`: an IRLS solver and a
//! row-sampling front end that shrinks the problem before solving.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::conditioning::{weighted_leverage_scores, ConditioningConfig};
use crate::error::{bail, Error, Result};
use crate::linalg::{pairwise_sum, CsrMatrix, Matrix};
use crate::loss::LossSpec;
use crate::measure::WeightVector;
use crate::pipeline::m2_scores;
use crate::sampling::{draw, make_plan, DrawMode};
use crate::seed::derive_seed;
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsConfig {
    /// Stop when the relative objective decrease falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Residual magnitudes are floored here before reweighting.
    pub floor: f64,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        IrlsConfig { tol: 1e-10, max_iter: 500, floor: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct IrlsOutput {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Objective after the initial solve and after every accepted step.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `sum_i w_i M(a_i x - b_i)`.
pub fn regression_cost(a: &Matrix, b: &[f64], w: &WeightVector, loss: &LossSpec, x: &DVector<f64>) -> Result<f64> {
    check_shapes(a, b, w)?;
    if x.len() != a.ncols() {
        bail!(Shape, "x has length {}, matrix has {} columns", x.len(), a.ncols());
    }
    let r = residuals(&a.to_dense(), b, x);
    Ok(weighted_cost(&r, w.as_slice(), loss))
}

fn check_shapes(a: &Matrix, b: &[f64], w: &WeightVector) -> Result<()> {
    if a.nrows() != b.len() {
        bail!(Shape, "{} rows but {} targets", a.nrows(), b.len());
    }
    if w.len() != b.len() {
        bail!(Shape, "{} weights for {} rows", w.len(), b.len());
    }
    if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
        bail!(Domain, "regression input has non-finite entries");
    }
    Ok(())
}

fn residuals(a: &DMatrix<f64>, b: &[f64], x: &DVector<f64>) -> Vec<f64> {
    let ax = a * x;
    ax.iter().zip(b).map(|(p, t)| p - t).collect()
}

fn weighted_cost(r: &[f64], w: &[f64], loss: &LossSpec) -> f64 {
    let terms: Vec<f64> = r.iter().zip(w).map(|(&ri, &wi)| wi * loss.value(ri)).collect();
    pairwise_sum(&terms)
}

/// Least-norm minimizer of `sum_i psi_i (a_i x - b_i)^2`.
fn weighted_least_squares(a: &DMatrix<f64>, b: &[f64], psi: &[f64]) -> DVector<f64> {
    let d = a.ncols();
    let mut scaled = a.clone();
    let mut rhs = DVector::zeros(a.nrows());
    for i in 0..a.nrows() {
        let s = psi[i].sqrt();
        scaled.row_mut(i).scale_mut(s);
        rhs[i] = s * b[i];
    }
    let gram = scaled.transpose() * &scaled;
    let atb = scaled.transpose() * rhs;
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut x = DVector::zeros(d);
    if top <= 0.0 {
        return x;
    }
    for j in 0..d {
        let lam = eig.eigenvalues[j];
        if lam > 1e-13 * top {
            let v = eig.eigenvectors.column(j);
            x += v * (v.dot(&atb) / lam);
        }
    }
    x
}

/// Iteratively reweighted least squares with step halving so the objective
/// never increases. Returns the best iterate.
pub fn irls_solve(a: &Matrix, b: &[f64], w: &WeightVector, loss: &LossSpec, cfg: &IrlsConfig) -> Result<IrlsOutput> {
    check_shapes(a, b, w)?;
    if !loss.is_convex() {
        bail!(InvalidParameter, "regression needs a convex loss");
    }
    let ad = a.to_dense();
    let wv = w.as_slice();
    let mut x = weighted_least_squares(&ad, b, wv);
    let mut r = residuals(&ad, b, &x);
    let mut f = weighted_cost(&r, wv, loss);
    let mut history = alloc::vec![f];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        if f == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;
        let psi: Vec<f64> = r.iter().zip(wv).map(|(&ri, &wi)| wi * loss.irls_weight(ri, cfg.floor)).collect();
        let target = weighted_least_squares(&ad, b, &psi);
        let step = &target - &x;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &x + &step * t;
            let rc = residuals(&ad, b, &cand);
            let fc = weighted_cost(&rc, wv, loss);
            if fc <= f + 1e-12 * f {
                accepted = Some((cand, rc, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, rc, fc)) = accepted else {
            converged = true;
            break;
        };
        let decrease = f - fc;
        if fc < f {
            x = cand;
            r = rc;
            f = fc;
            history.push(f);
        }
        if decrease <= cfg.tol * f.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(IrlsOutput { x, objective: f, history, iterations, converged })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressConfig {
    pub delta: f64,
    pub kappa: f64,
    /// Gaussian directions for growth-2 scores; defaults to `ceil(3 / kappa)`.
    pub t_m: Option<usize>,
    /// Leading constant of the per-level sample size.
    pub sample_const: f64,
    /// Recursion stops once rows fall to `base_mult * d^2 / eps^2`.
    pub base_mult: f64,
    pub max_levels: usize,
    pub irls: IrlsConfig,
    pub conditioning: ConditioningConfig,
}

impl Default for RegressConfig {
    fn default() -> Self {
        RegressConfig {
            delta: 0.1,
            kappa: 0.1,
            t_m: None,
            sample_const: 1.0,
            base_mult: 20.0,
            max_levels: 3,
            irls: IrlsConfig::default(),
            conditioning: ConditioningConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegressOutput {
    pub x: DVector<f64>,
    /// Rows in the final weighted subproblem.
    pub sample_size: usize,
    pub level_sizes: Vec<usize>,
    pub solve: IrlsOutput,
}

fn append_column(a: &Matrix, b: &[f64]) -> Result<Matrix> {
    let (n, d) = (a.nrows(), a.ncols());
    match a {
        Matrix::Dense(m) => {
            let mut out = DMatrix::zeros(n, d + 1);
            out.columns_mut(0, d).copy_from(m);
            out.column_mut(d).copy_from_slice(b);
            Ok(Matrix::Dense(out))
        }
        Matrix::Sparse(s) => {
            let mut trip = Vec::with_capacity(s.nnz() + n);
            for i in 0..n {
                let (cols, vals) = s.row(i);
                trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
                trip.push((i, d, b[i]));
            }
            Ok(Matrix::Sparse(CsrMatrix::from_triplets(n, d + 1, &trip)?))
        }
    }
}

/// Approximate robust regression: samples rows of `[A b]` by estimated
/// sensitivity for up to `max_levels` rounds, then runs IRLS on the weighted
/// subproblem.
pub fn m_regress(a: &Matrix, b: &[f64], loss: &LossSpec, eps: f64, cfg: &RegressConfig, seed: u64) -> Result<RegressOutput> {
    let n = a.nrows();
    check_shapes(a, b, &WeightVector::ones(n))?;
    if !loss.is_convex() {
        bail!(InvalidParameter, "regression needs a convex loss");
    }
    if !(eps > 0.0 && eps < 1.0) {
        bail!(InvalidParameter, "eps {eps} outside (0, 1)");
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        bail!(InvalidParameter, "delta {} outside (0, 1)", cfg.delta);
    }
    let d = a.ncols();
    let base = (cfg.base_mult * (d * d) as f64 / (eps * eps)).max(2.0 * (d + 1) as f64);
    let t = cfg.t_m.unwrap_or((3.0 / cfg.kappa).ceil() as usize).max(1);

    let mut rows = append_column(a, b)?;
    let mut w = WeightVector::ones(n);
    let mut level_sizes = Vec::new();
    for level in 0..cfg.max_levels {
        let nl = rows.nrows() as f64;
        if nl <= base {
            break;
        }
        let level_seed = derive_seed(seed, level as u64);
        let scores = if loss.is_m2() {
            m2_scores(&rows, &w, None, loss, t, &cfg.conditioning, level_seed)?
        } else {
            weighted_leverage_scores(&rows, &w, loss, level_seed, &cfg.conditioning)?.gamma
        };
        let r = cfg.sample_const * nl.powf(0.5 + cfg.kappa) * (d + 1) as f64 * (1.0 / cfg.delta).ln() / (eps * eps);
        let plan = match make_plan(&scores, r, 1.0) {
            Ok(p) => p,
            Err(Error::ZeroScores) => break,
            Err(e) => return Err(e),
        };
        let sample = draw(&plan, &w, derive_seed(level_seed, 1), DrawMode::M2Weight)?;
        if sample.len() as f64 > 0.9 * nl || sample.len() <= d {
            break;
        }
        level_sizes.push(rows.nrows());
        rows = sample.apply(&rows);
        w = sample.weights();
    }
    let dense = rows.to_dense();
    let sub_a = Matrix::Dense(dense.columns(0, d).into_owned());
    let sub_b: Vec<f64> = dense.column(d).iter().copied().collect();
    let solve = irls_solve(&sub_a, &sub_b, &w, loss, &cfg.irls)?;
    Ok(RegressOutput { x: solve.x.clone(), sample_size: sub_b.len(), level_sizes, solve })
}
