//! Reference computations for tests and benchmarks: a naive cost evaluator,
//! the SVD baseline, and a dense candidate search for tiny instances.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Result};
use crate::linalg::{complete_basis, gaussian_matrix, qf, top_right_singular, Matrix};
use crate::loss::LossSpec;
use crate::measure::{residual_cost, Subspace, WeightVector};
use crate::par::map_indices;
use crate::seed::derive_seed;
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

/// `sum_i w_i M(|a_i (I - V Vᵀ)|)` by forming the projector and looping over
/// rows in order. Deliberately shares no code with the library evaluators.
pub fn naive_residual_cost(a: &DMatrix<f64>, v: &DMatrix<f64>, w: &[f64], loss: &LossSpec) -> f64 {
    let d = a.ncols();
    let mut proj = DMatrix::<f64>::identity(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for t in 0..v.ncols() {
                s += v[(i, t)] * v[(j, t)];
            }
            proj[(i, j)] -= s;
        }
    }
    let mut total = 0.0;
    for r in 0..a.nrows() {
        let mut sq = 0.0;
        for j in 0..d {
            let mut x = 0.0;
            for i in 0..d {
                x += a[(r, i)] * proj[(i, j)];
            }
            sq += x * x;
        }
        total += w[r] * loss.value(sq.sqrt());
    }
    total
}

/// Top-k right singular subspace of `diag(sqrt(w)) A` and its cost.
pub fn svd_truncation_cost(a: &Matrix, k: usize, w: &WeightVector, loss: &LossSpec) -> Result<(Subspace, f64)> {
    let (n, d) = (a.nrows(), a.ncols());
    if k > n.min(d) {
        bail!(InvalidParameter, "k = {k} exceeds min(n, d) = {}", n.min(d));
    }
    if w.len() != n {
        bail!(Shape, "{} weights for {n} rows", w.len());
    }
    let mut ad = a.to_dense();
    for i in 0..n {
        ad.row_mut(i).scale_mut(w.get(i).sqrt());
    }
    let x = Subspace::new(top_right_singular(&ad, k))?;
    let cost = residual_cost(a, &x, w, loss)?;
    Ok((x, cost))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExhaustiveConfig {
    /// Random starting subspaces.
    pub budget: usize,
    /// Hill-climbing trials per random start.
    pub polish_steps: usize,
    /// Longer polish applied to the best candidate at the end.
    pub final_polish_steps: usize,
    /// Maximum number of row subsets whose SVDs are tried.
    pub max_row_subsets: usize,
}

impl Default for ExhaustiveConfig {
    fn default() -> Self {
        ExhaustiveConfig { budget: 10_000, polish_steps: 50, final_polish_steps: 5_000, max_row_subsets: 20_000 }
    }
}

pub const EXHAUSTIVE_MAX_DIM: usize = 6;
pub const EXHAUSTIVE_MAX_RANK: usize = 2;

fn hill_climb(a: &DMatrix<f64>, loss: &LossSpec, start: DMatrix<f64>, steps: usize, seed: u64) -> (DMatrix<f64>, f64) {
    let ones = alloc::vec![1.0; a.nrows()];
    let cost = |v: &DMatrix<f64>| naive_residual_cost(a, v, &ones, loss);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = start;
    let mut f = cost(&v);
    let mut step = 0.5;
    let mut misses = 0;
    for _ in 0..steps {
        let dir = gaussian_matrix(&mut rng, v.nrows(), v.ncols());
        let cand = qf(&(&v + dir * step));
        let fc = cost(&cand);
        if fc < f {
            v = cand;
            f = fc;
            misses = 0;
        } else {
            misses += 1;
            if misses >= 8 {
                step = (step * 0.5).max(1e-9);
                misses = 0;
            }
        }
    }
    (v, f)
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Best subspace found over coordinate subspaces, SVDs of small row subsets,
/// and polished random starts. Unit weights. Limited to `d <= 6`, `k <= 2`.
pub fn exhaustive_tiny(a: &Matrix, k: usize, loss: &LossSpec, cfg: &ExhaustiveConfig, seed: u64) -> Result<(Subspace, f64)> {
    let (n, d) = (a.nrows(), a.ncols());
    if d > EXHAUSTIVE_MAX_DIM || k > EXHAUSTIVE_MAX_RANK {
        bail!(CapExceeded, "exhaustive search needs d <= {EXHAUSTIVE_MAX_DIM} and k <= {EXHAUSTIVE_MAX_RANK}");
    }
    if k == 0 || k > d {
        bail!(InvalidParameter, "k = {k} outside [1, {d}]");
    }
    let ad = a.to_dense();
    let ones = alloc::vec![1.0; n];
    let cost = |v: &DMatrix<f64>| naive_residual_cost(&ad, v, &ones, loss);

    let mut cands: Vec<DMatrix<f64>> = Vec::new();
    for s in k_subsets(d, k) {
        let mut v = DMatrix::zeros(d, k);
        for (t, &j) in s.iter().enumerate() {
            v[(j, t)] = 1.0;
        }
        cands.push(v);
    }
    let mut row_sets = Vec::new();
    for size in 1..=(2 * k).min(n) {
        row_sets.extend(k_subsets(n, size).into_iter().take(cfg.max_row_subsets.saturating_sub(row_sets.len())));
    }
    for rows in row_sets {
        let sub = DMatrix::from_fn(rows.len(), d, |i, j| ad[(rows[i], j)]);
        let v = top_right_singular(&sub, k.min(rows.len()));
        cands.push(complete_basis(&v, k));
    }
    cands.push(top_right_singular(&ad, k.min(n)));
    let fixed: Vec<(DMatrix<f64>, f64)> = cands.into_iter().map(|v| {
        let v = complete_basis(&v, k).columns(0, k).into_owned();
        let f = cost(&v);
        (v, f)
    }).collect();

    let polished = map_indices(cfg.budget, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        let g = gaussian_matrix(&mut rng, d, k);
        let start = qf(&g);
        let s: u64 = rng.random();
        hill_climb(&ad, loss, start, cfg.polish_steps, s)
    });

    let mut best: Option<(DMatrix<f64>, f64)> = None;
    for (v, f) in fixed.into_iter().chain(polished) {
        if best.as_ref().is_none_or(|(_, b)| f < *b) {
            best = Some((v, f));
        }
    }
    let (v, f) = best.expect("at least one coordinate candidate");
    let (v2, f2) = hill_climb(&ad, loss, v.clone(), cfg.final_polish_steps, derive_seed(seed, u64::MAX));
    let (v, f) = if f2 < f { (v2, f2) } else { (v, f) };
    Ok((Subspace::new(v)?, f))
}
