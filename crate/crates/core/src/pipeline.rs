//! End-to-end rank-k approximation: bicriteria subspace, residual sampling,
//! column embedding, row sampling, and a final small solve.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bicriteria::{const_approx, depth_limit, BicriteriaOutput, ConstApproxConfig};
use crate::conditioning::{well_conditioned_basis, ConditioningConfig};
use crate::dimreduce::{base_sample_size, dim_reduce, DimReduceConfig};
use crate::error::{bail, Error, Result};
use crate::linalg::{complete_basis, gaussian_matrix, Matrix};
use crate::loss::LossSpec;
use crate::measure::{Subspace, WeightVector};
use crate::sampling::{basis_times, draw, gaussian_score_plan, make_plan, DrawMode, ScoreMode};
use crate::seed::derive_seed;
use crate::sketch::{make_sparse_sketch, orthonormal_union};
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

pub use crate::small::{small_approx, small_cost, SmallApproxConfig, SmallMethod, SmallProblem, SmallSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub bicriteria: ConstApproxConfig,
    /// Leading constant of the base sample size `r1`.
    pub r1_multiplier: f64,
    /// Approximation factor assumed for the bicriteria subspace.
    pub quality_k: f64,
    /// Oversampling constant.
    pub k2: f64,
    /// Expected-size cap for residual sampling; `None` leaves it uncapped.
    pub dim_reduce_cap: Option<f64>,
    /// Column embedding width is `embed_mult * dim(U)^2`; no embedding when
    /// that reaches the column count.
    pub embed_mult: f64,
    /// Exponent `c` in the `r1^(c+1)` row-sampling target; defaults to `p`.
    pub c_exponent: Option<f64>,
    /// Fraction of the small-problem row cap used as the row-sampling budget.
    pub sample_fraction: f64,
    /// Gaussian estimation exponent for growth-2 losses.
    pub kappa: f64,
    /// Gaussian directions for growth-2 losses; defaults to `ceil(3 / kappa)`.
    pub t_m: Option<usize>,
    /// Per-level accuracy is `eps / (c_eps_split * max(1, ln ln n))`.
    pub c_eps_split: f64,
    pub small: SmallApproxConfig,
    pub method: SmallMethod,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            bicriteria: ConstApproxConfig::default(),
            r1_multiplier: 2.0,
            quality_k: 1.0,
            k2: 4.0,
            dim_reduce_cap: Some(200.0),
            embed_mult: 4.0,
            c_exponent: None,
            sample_fraction: 0.8,
            kappa: 0.1,
            t_m: None,
            c_eps_split: 1.0,
            small: SmallApproxConfig::default(),
            method: SmallMethod::LocalSearch,
        }
    }
}

impl PipelineConfig {
    fn row_budget(&self) -> f64 {
        (self.sample_fraction * self.small.cap as f64).floor().max(1.0)
    }

    pub fn t_m(&self) -> usize {
        self.t_m.unwrap_or((3.0 / self.kappa).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// `d x k` orthonormal factor of the returned rank-k projector.
    pub subspace: Subspace,
    pub bicriteria_dim: usize,
    pub dim_reduce_dim: usize,
    /// Width of the column embedding (the column count when none was used).
    pub embed_cols: usize,
    /// Rows in the final small problem.
    pub sample_size: usize,
    pub small_cost: f64,
    pub converged: bool,
    /// Sampling levels of the growth-2 recursion (0 for `|x|^p` losses).
    pub recursion_depth: usize,
    pub level_sizes: Vec<usize>,
    pub bicriteria: Option<BicriteriaOutput>,
}

fn check_common(a: &Matrix, k: usize, eps: f64) -> Result<()> {
    if k == 0 {
        bail!(InvalidParameter, "rank must be at least 1");
    }
    if !(eps > 0.0 && eps < 1.0) {
        bail!(InvalidParameter, "eps {eps} outside (0, 1)");
    }
    if !a.is_finite() {
        bail!(Domain, "input has non-finite entries");
    }
    Ok(())
}

/// Trivial case `k >= min(n, d)`: the row space, padded to `min(k, d)`.
fn full_span(a: &Matrix, k: usize) -> Result<PipelineOutput> {
    let d = a.ncols();
    let span = orthonormal_union(core::slice::from_ref(a))?;
    let span = if span.ambient_dim() == d { span.u } else { DMatrix::zeros(d, 0) };
    let u = complete_basis(&span, k.min(d));
    let u = u.columns(0, k.min(d)).into_owned();
    Ok(PipelineOutput {
        subspace: Subspace::from_orthonormal(u),
        bicriteria_dim: 0,
        dim_reduce_dim: 0,
        embed_cols: d,
        sample_size: a.nrows(),
        small_cost: 0.0,
        converged: true,
        recursion_depth: 0,
        level_sizes: Vec::new(),
        bicriteria: None,
    })
}

struct Reduced {
    bic: BicriteriaOutput,
    u: DMatrix<f64>,
    /// `Sᵀ` (`d x m_S`), or `None` for no column embedding.
    st: Option<DMatrix<f64>>,
}

fn reduce(a: &Matrix, k: usize, eps: f64, loss: &LossSpec, cfg: &PipelineConfig, seed: u64) -> Result<Reduced> {
    let d = a.ncols();
    let bic = const_approx(a, k, loss, &cfg.bicriteria, derive_seed(seed, 1))?;
    let dcfg = DimReduceConfig {
        eps,
        quality_k: cfg.quality_k,
        r1_multiplier: cfg.r1_multiplier,
        t_m_override: None,
        k2: cfg.k2,
        sample_cap: cfg.dim_reduce_cap,
        seed: derive_seed(seed, 2),
    };
    let dr = dim_reduce(a, k.min(d), &bic.subspace, &dcfg, loss)?;
    let u = dr.subspace.u;
    let m_u = u.ncols();
    let width = (cfg.embed_mult * (m_u * m_u) as f64).ceil() as usize;
    let st = if width >= d || m_u == 0 {
        None
    } else {
        let s = ((2.0 / eps).ceil() as usize).clamp(1, width);
        let sk = make_sparse_sketch(derive_seed(seed, 3), width, d, s)?;
        Some(sk.to_dense().transpose())
    };
    Ok(Reduced { bic, u, st })
}

/// `[Sᵀ U]`, the right factor whose column space drives row sampling.
fn sampling_factor(red: &Reduced, d: usize) -> DMatrix<f64> {
    let st = red.st.clone().unwrap_or_else(|| DMatrix::identity(d, d));
    let mut h = DMatrix::zeros(d, st.ncols() + red.u.ncols());
    h.columns_mut(0, st.ncols()).copy_from(&st);
    h.columns_mut(st.ncols(), red.u.ncols()).copy_from(&red.u);
    h
}

fn times_st(x: &DMatrix<f64>, st: &Option<DMatrix<f64>>) -> DMatrix<f64> {
    match st {
        Some(st) => x * st,
        None => x.clone(),
    }
}

/// Builds and solves the small problem on sampled rows `ta` with weights `w`.
fn finish(
    ta: &DMatrix<f64>,
    w: Vec<f64>,
    red: &Reduced,
    k: usize,
    eps: f64,
    loss: &LossSpec,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<(DMatrix<f64>, SmallSolution)> {
    let u = &red.u;
    let a_hat = ta * u;
    let b = times_st(&u.transpose(), &red.st);
    let c = times_st(ta, &red.st);
    let prob = SmallProblem::new(a_hat, b, c, w, k, eps)?;
    let sol = small_approx(&prob, loss, cfg.method, &cfg.small, seed)?;
    let v = u * &sol.w;
    Ok((complete_basis(&v, k.min(u.nrows())), sol))
}

fn output_from(v: DMatrix<f64>, red: Reduced, embed_cols: usize, sample_size: usize, sol: SmallSolution) -> PipelineOutput {
    PipelineOutput {
        subspace: Subspace::from_orthonormal(v),
        bicriteria_dim: red.bic.subspace.dim(),
        dim_reduce_dim: red.u.ncols(),
        embed_cols,
        sample_size,
        small_cost: sol.cost,
        converged: sol.converged,
        recursion_depth: 0,
        level_sizes: Vec::new(),
        bicriteria: Some(red.bic),
    }
}

/// Early exit when the reduced subspace already has dimension at most `k`.
fn short_circuit(red: Reduced, k: usize, d: usize) -> PipelineOutput {
    let v = complete_basis(&red.u, k.min(d));
    let sol = SmallSolution { w: DMatrix::identity(red.u.ncols(), red.u.ncols()), cost: 0.0, converged: true };
    output_from(v, red, d, 0, sol)
}

/// Rank-k subspace approximately minimizing `sum_i |A_i (I - V Vᵀ)|^p`.
pub fn approx_lp(a: &Matrix, k: usize, eps: f64, loss: &LossSpec, cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutput> {
    check_common(a, k, eps)?;
    if loss.is_m2() {
        bail!(InvalidParameter, "approx_lp needs an |x|^p loss");
    }
    let (n, d) = (a.nrows(), a.ncols());
    if k >= n.min(d) {
        return full_span(a, k);
    }
    let red = reduce(a, k, eps, loss, cfg, seed)?;
    if red.u.ncols() <= k {
        return Ok(short_circuit(red, k, d));
    }
    let embed_cols = red.st.as_ref().map_or(d, |s| s.ncols());
    let h = sampling_factor(&red, d);
    let basis = well_conditioned_basis(a, Some(&h), loss.p, derive_seed(seed, 4), &cfg.bicriteria.conditioning)?;
    let r1 = base_sample_size(cfg.r1_multiplier, cfg.quality_k, k, eps, loss.p);
    let c = cfg.c_exponent.unwrap_or(loss.p);
    let plan = match gaussian_score_plan(a, &basis, c, r1, ScoreMode::Lp, cfg.k2, derive_seed(seed, 5)) {
        Ok(p) => p.capped(cfg.row_budget()),
        Err(Error::ZeroScores) => return Ok(short_circuit(red, k, d)),
        Err(e) => return Err(e),
    };
    let sample = draw(&plan, &WeightVector::ones(n), derive_seed(seed, 6), DrawMode::LpScale { p: loss.p })?;
    let ta = sample.apply(a).to_dense();
    let (v, sol) = finish(&ta, alloc::vec![1.0; sample.len()], &red, k, eps, loss, cfg, derive_seed(seed, 7))?;
    Ok(output_from(v, red, embed_cols, sample.len(), sol))
}

/// Growth-2 sensitivity estimates of the rows of `a` against the column space
/// of `a h` (of `a` when `h` is `None`), bucketed by weight.
pub(crate) fn m2_scores(
    a: &Matrix,
    w: &WeightVector,
    h: Option<&DMatrix<f64>>,
    loss: &LossSpec,
    t: usize,
    cond: &ConditioningConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut q = alloc::vec![0.0; a.nrows()];
    for (j, rows) in w.buckets() {
        let ones = alloc::vec![1.0; rows.len()];
        let sub = a.select_rows(&rows, &ones);
        let basis = well_conditioned_basis(&sub, h, 2.0, derive_seed(seed, j as u64), cond)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1000 + j as u64));
        let g = gaussian_matrix(&mut rng, basis.rank(), t) / (t as f64).sqrt();
        let ug = basis_times(&sub, &basis, &g)?;
        for (r, &i) in rows.iter().enumerate() {
            let est = ug.row(r).norm();
            q[i] = 2.0 * (est / loss.c_m).max(est * est);
        }
    }
    Ok(q)
}

/// Rank-k subspace approximately minimizing `sum_i M(|A_i (I - V Vᵀ)|)` for a
/// growth-2 loss, recursing on weighted row samples until the problem is small.
pub fn approx_m2(a: &Matrix, k: usize, eps: f64, loss: &LossSpec, cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutput> {
    check_common(a, k, eps)?;
    if !loss.is_m2() {
        bail!(InvalidParameter, "approx_m2 needs a growth-2 loss");
    }
    let (n, d) = (a.nrows(), a.ncols());
    if k >= n.min(d) {
        return full_span(a, k);
    }
    let red = reduce(a, k, eps, loss, cfg, seed)?;
    if red.u.ncols() <= k {
        return Ok(short_circuit(red, k, d));
    }
    let embed_cols = red.st.as_ref().map_or(d, |s| s.ncols());
    let h = sampling_factor(&red, d);

    let lln = (n.max(16) as f64).ln().ln().max(1.0);
    let eps_level = eps / (cfg.c_eps_split * lln);
    let base = (cfg.bicriteria.base_rows(k, n, loss) as f64).min(cfg.row_budget()) as usize;
    let limit = depth_limit(n);
    let t = cfg.t_m();

    let mut rows = a.clone();
    let mut w = WeightVector::ones(n);
    let mut level_sizes = Vec::new();
    let mut depth = 0;
    while rows.nrows() > base {
        if depth >= limit {
            return Err(Error::RecursionDepth { depth: depth + 1, limit });
        }
        let nl = rows.nrows() as f64;
        level_sizes.push(rows.nrows());
        let level_seed = derive_seed(seed, 100 + depth as u64);
        let q = m2_scores(&rows, &w, Some(&h), loss, t, &cfg.bicriteria.conditioning, level_seed)?;
        let r1 = base_sample_size(cfg.r1_multiplier, cfg.quality_k, k, eps_level, 2.0);
        let r = nl.powf(cfg.kappa) * nl.ln() * nl.ln().ln().max(1.0) * r1;
        let plan = match make_plan(&q, r, 1.0) {
            Ok(p) => p,
            Err(Error::ZeroScores) => break,
            Err(e) => return Err(e),
        };
        let budget = (nl.powf(0.5 + cfg.kappa) * nl.ln()).max(0.5 * base as f64).min(0.9 * nl);
        let plan = plan.capped(budget);
        let sample = draw(&plan, &w, derive_seed(level_seed, 7), DrawMode::M2Weight)?;
        if sample.is_empty() {
            break;
        }
        rows = sample.apply(&rows);
        w = sample.weights();
        depth += 1;
    }
    if rows.nrows() > cfg.small.cap {
        bail!(CapExceeded, "{} rows remain after sampling; raise the small-problem cap", rows.nrows());
    }
    let ta = rows.to_dense();
    let sample_size = ta.nrows();
    let (v, sol) = finish(&ta, w.as_slice().to_vec(), &red, k, eps, loss, cfg, derive_seed(seed, 7))?;
    let mut out = output_from(v, red, embed_cols, sample_size, sol);
    out.recursion_depth = depth;
    out.level_sizes = level_sizes;
    Ok(out)
}

/// Dispatches on the loss class.
pub fn approx(a: &Matrix, k: usize, eps: f64, loss: &LossSpec, cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutput> {
    if loss.is_m2() {
        approx_m2(a, k, eps, loss, cfg, seed)
    } else {
        approx_lp(a, k, eps, loss, cfg, seed)
    }
}
