//! Heuristic solver for `min ‖Â W Wᵀ B − C‖` over orthonormal `W` with `k`
//! columns, the reduced problem every pipeline ends in.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Result};
use crate::linalg::{gaussian_matrix, identity_columns, pairwise_sum, qf, random_orthonormal, sym_eigvecs};
use crate::loss::LossSpec;
use crate::par::map_tasks;
use crate::seed::derive_seed;
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

/// `Â` (`N x m`), `B` (`m x D`), `C` (`N x D`) and row weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallProblem {
    pub a_hat: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub w: Vec<f64>,
    pub k: usize,
    pub eps: f64,
}

impl SmallProblem {
    pub fn new(a_hat: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, w: Vec<f64>, k: usize, eps: f64) -> Result<Self> {
        let (n, m) = a_hat.shape();
        if b.nrows() != m || c.nrows() != n || c.ncols() != b.ncols() || w.len() != n {
            bail!(
                Shape,
                "small problem shapes A {}x{}, B {}x{}, C {}x{}, {} weights",
                n, m, b.nrows(), b.ncols(), c.nrows(), c.ncols(), w.len()
            );
        }
        if k == 0 {
            bail!(InvalidParameter, "rank must be at least 1");
        }
        if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            bail!(Domain, "weights must be positive and finite");
        }
        Ok(SmallProblem { a_hat, b, c, w, k, eps })
    }

    pub fn inner_dim(&self) -> usize {
        self.a_hat.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallMethod {
    LocalSearch,
    ExhaustiveTiny,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallApproxConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when one iteration improves the objective by less than this
    /// fraction.
    pub tol: f64,
    /// Largest allowed row count, inner dimension, and column count.
    pub cap: usize,
    /// Random candidates evaluated by the exhaustive method.
    pub exhaustive_random: usize,
}

impl Default for SmallApproxConfig {
    fn default() -> Self {
        SmallApproxConfig { restarts: 10, max_iter: 300, tol: 1e-12, cap: 400, exhaustive_random: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallSolution {
    /// `m x min(k, m)` with orthonormal columns.
    pub w: DMatrix<f64>,
    pub cost: f64,
    /// False when some restart hit the iteration limit.
    pub converged: bool,
}

fn residual_norms(prob: &SmallProblem, w: &DMatrix<f64>) -> Vec<f64> {
    let aw = &prob.a_hat * w;
    let wb = w.tr_mul(&prob.b);
    let r = aw * wb - &prob.c;
    (0..r.nrows()).map(|i| r.row(i).norm()).collect()
}

/// `sum_i w_i M(|Â_i W Wᵀ B − C_i|)`.
pub fn small_cost(prob: &SmallProblem, loss: &LossSpec, w: &DMatrix<f64>) -> f64 {
    let t: Vec<f64> = residual_norms(prob, w).iter().zip(&prob.w).map(|(r, wi)| wi * loss.value(*r)).collect();
    pairwise_sum(&t)
}

fn residual_floor(prob: &SmallProblem) -> f64 {
    let scale = (0..prob.c.nrows()).map(|i| prob.c.row(i).norm()).fold(0.0, f64::max);
    1e-12 * if scale > 0.0 { scale } else { 1.0 }
}

/// `Âᵀ Ψ Â` and `Âᵀ Ψ C Bᵀ` for row multipliers `psi`.
fn weighted_grams(prob: &SmallProblem, psi: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut pa = prob.a_hat.clone();
    for (i, s) in psi.iter().enumerate() {
        pa.row_mut(i).scale_mut(*s);
    }
    let p = prob.a_hat.tr_mul(&pa);
    let l = pa.tr_mul(&prob.c) * prob.b.transpose();
    (p, l)
}

/// Minimizer of the quadratic majorizer with row multipliers `psi`, treating
/// `B Bᵀ` as a multiple of the identity.
fn surrogate_step(prob: &SmallProblem, psi: &[f64], k: usize) -> DMatrix<f64> {
    let (p, l) = weighted_grams(prob, psi);
    let m = prob.inner_dim();
    let qbar = prob.b.norm_squared() / m as f64;
    let s = p * qbar - (&l + l.transpose());
    sym_eigvecs(&s, k, false)
}

fn psi_at(prob: &SmallProblem, loss: &LossSpec, w: &DMatrix<f64>, floor: f64) -> Vec<f64> {
    let norms = residual_norms(prob, w);
    norms.iter().zip(&prob.w).map(|(r, wi)| wi * loss.irls_weight(*r, floor)).collect()
}

/// `Â⁺ C B⁺` restricted to `rows`, symmetrized, top-`k` eigenvectors.
fn least_squares_init(prob: &SmallProblem, rows: Option<&[usize]>, k: usize) -> DMatrix<f64> {
    let (a, c) = match rows {
        None => (prob.a_hat.clone(), prob.c.clone()),
        Some(r) => (prob.a_hat.select_rows(r.iter()), prob.c.select_rows(r.iter())),
    };
    let a_pinv = a.pseudo_inverse(1e-12).unwrap_or_else(|_| DMatrix::zeros(prob.inner_dim(), r_len(rows, prob)));
    let b_pinv = prob.b.clone().pseudo_inverse(1e-12).unwrap_or_else(|_| DMatrix::zeros(prob.b.ncols(), prob.b.nrows()));
    let x = a_pinv * c * b_pinv;
    let sym = (&x + x.transpose()) * 0.5;
    sym_eigvecs(&sym, k, true)
}

fn r_len(rows: Option<&[usize]>, prob: &SmallProblem) -> usize {
    rows.map_or(prob.a_hat.nrows(), |r| r.len())
}

/// Majorize-minimize descent with a Riemannian-gradient fallback.
fn descend(prob: &SmallProblem, loss: &LossSpec, start: DMatrix<f64>, cfg: &SmallApproxConfig) -> (DMatrix<f64>, f64, bool) {
    let k = start.ncols();
    let floor = residual_floor(prob);
    let mut w = start;
    let mut f = small_cost(prob, loss, &w);
    for _ in 0..cfg.max_iter {
        if f == 0.0 {
            return (w, f, true);
        }
        let psi = psi_at(prob, loss, &w, floor);
        let cand = surrogate_step(prob, &psi, k);
        let fc = small_cost(prob, loss, &cand);
        let f_prev = f;
        if fc < f {
            w = cand;
            f = fc;
        } else if let Some((wg, fg)) = gradient_step(prob, loss, &w, f, &psi) {
            w = wg;
            f = fg;
        } else {
            return (w, f, true);
        }
        if f_prev - f <= cfg.tol * f_prev {
            return (w, f, true);
        }
    }
    (w, f, false)
}

fn gradient_step(
    prob: &SmallProblem,
    loss: &LossSpec,
    w: &DMatrix<f64>,
    f: f64,
    psi: &[f64],
) -> Option<(DMatrix<f64>, f64)> {
    let m = prob.inner_dim();
    let aw = &prob.a_hat * w;
    let mut r = aw * w.tr_mul(&prob.b) - &prob.c;
    for (i, s) in psi.iter().enumerate() {
        r.row_mut(i).scale_mut(*s);
    }
    let gx = prob.a_hat.tr_mul(&r) * prob.b.transpose() * 2.0;
    let sym = &gx + gx.transpose();
    let xi = (DMatrix::identity(m, m) - w * w.transpose()) * sym * w;
    let gnorm2 = xi.norm_squared();
    if !(gnorm2 > 0.0) || !gnorm2.is_finite() {
        return None;
    }
    let mut t = 0.5 / gnorm2.sqrt();
    for _ in 0..40 {
        let cand = qf(&(w - &xi * t));
        let fc = small_cost(prob, loss, &cand);
        if fc <= f - 1e-4 * t * gnorm2 && fc < f {
            return Some((cand, fc));
        }
        t *= 0.5;
    }
    None
}

fn check_caps(prob: &SmallProblem, cfg: &SmallApproxConfig) -> Result<()> {
    let (n, m) = prob.a_hat.shape();
    let dd = prob.b.ncols();
    if n > cfg.cap || m > cfg.cap || dd > cfg.cap {
        bail!(
            CapExceeded,
            "small problem is {n} rows x {m} inner x {dd} columns, cap {}; raise the small-problem cap",
            cfg.cap
        );
    }
    Ok(())
}

/// Approximately minimizes `sum_i w_i M(|Â_i W Wᵀ B − C_i|)` over orthonormal
/// `W` with `k` columns.
pub fn small_approx(
    prob: &SmallProblem,
    loss: &LossSpec,
    method: SmallMethod,
    cfg: &SmallApproxConfig,
    seed: u64,
) -> Result<SmallSolution> {
    check_caps(prob, cfg)?;
    let m = prob.inner_dim();
    if prob.k >= m {
        let w = DMatrix::identity(m, m);
        let cost = small_cost(prob, loss, &w);
        return Ok(SmallSolution { w, cost, converged: true });
    }
    match method {
        SmallMethod::LocalSearch => local_search(prob, loss, cfg, seed),
        SmallMethod::ExhaustiveTiny => exhaustive_tiny(prob, loss, cfg, seed),
    }
}

fn init_for(prob: &SmallProblem, j: usize, seed: u64) -> DMatrix<f64> {
    let (n, m) = prob.a_hat.shape();
    let k = prob.k;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, j as u64));
    match j {
        0 => least_squares_init(prob, None, k),
        1 => surrogate_step(prob, &prob.w, k),
        _ if j % 2 == 0 => random_orthonormal(&mut rng, m, k),
        _ => {
            let size = (m + k).max(2 * k).min(n);
            let mut rows = sample(&mut rng, n, size).into_vec();
            rows.sort_unstable();
            least_squares_init(prob, Some(&rows), k)
        }
    }
}

fn pick_best(results: Vec<(DMatrix<f64>, f64, bool)>) -> SmallSolution {
    let converged = results.iter().all(|r| r.2);
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        // strict comparison keeps the lowest index on ties
        if r.1 < results[best].1 || (results[best].1.is_nan() && !r.1.is_nan()) {
            best = i;
        }
    }
    let (w, cost, _) = results.into_iter().nth(best).expect("at least one restart");
    SmallSolution { w, cost, converged }
}

fn local_search(prob: &SmallProblem, loss: &LossSpec, cfg: &SmallApproxConfig, seed: u64) -> Result<SmallSolution> {
    let restarts = cfg.restarts.max(1);
    let results = map_tasks(restarts, |j| {
        let start = init_for(prob, j, seed);
        descend(prob, loss, start, cfg)
    });
    Ok(pick_best(results))
}

/// Every `k`-subset of `0..m`, in lexicographic order.
pub(crate) fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > m {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < m - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Random-perturbation hill climbing with a shrinking step.
pub(crate) fn perturb_polish<F: Fn(&DMatrix<f64>) -> f64>(
    start: DMatrix<f64>,
    f0: f64,
    cost: F,
    trials: usize,
    seed: u64,
) -> (DMatrix<f64>, f64) {
    let (m, k) = start.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = start;
    let mut f = f0;
    let mut sigma = 0.3;
    let mut fails = 0;
    for _ in 0..trials {
        let cand = qf(&(&w + gaussian_matrix(&mut rng, m, k) * sigma));
        let fc = cost(&cand);
        if fc < f {
            w = cand;
            f = fc;
            fails = 0;
        } else {
            fails += 1;
            if fails >= 8 {
                sigma *= 0.5;
                fails = 0;
                if sigma < 1e-9 {
                    break;
                }
            }
        }
    }
    (w, f)
}

fn exhaustive_tiny(prob: &SmallProblem, loss: &LossSpec, cfg: &SmallApproxConfig, seed: u64) -> Result<SmallSolution> {
    let m = prob.inner_dim();
    let k = prob.k;
    if m > 12 || k > 3 {
        bail!(CapExceeded, "exhaustive search needs inner dimension <= 12 and k <= 3 (got {m}, {k})");
    }
    let mut cands: Vec<DMatrix<f64>> = Vec::new();
    for s in subsets(m, k) {
        let mut w = DMatrix::zeros(m, k);
        for (c, &j) in s.iter().enumerate() {
            w[(j, c)] = 1.0;
        }
        cands.push(w);
    }
    cands.push(least_squares_init(prob, None, k));
    cands.push(surrogate_step(prob, &prob.w, k));
    cands.push(identity_columns(m, k));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xE));
    for _ in 0..cfg.exhaustive_random {
        cands.push(random_orthonormal(&mut rng, m, k));
    }
    let costs = map_tasks(cands.len(), |i| small_cost(prob, loss, &cands[i]));
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    let top: Vec<usize> = order.into_iter().take(8).collect();
    let polished = map_tasks(top.len(), |t| {
        let i = top[t];
        let (w, f) = perturb_polish(cands[i].clone(), costs[i], |w| small_cost(prob, loss, w), 3000, derive_seed(seed, 100 + t as u64));
        (w, f, true)
    });
    Ok(pick_best(polished))
}
