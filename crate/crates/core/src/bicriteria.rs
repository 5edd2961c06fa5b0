//! Bicriteria subspace: sketch on the right, then recursive sensitivity
//! sampling until few rows remain.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::conditioning::{weighted_leverage_scores, ConditioningConfig};
use crate::error::{bail, Error, Result};
use crate::linalg::Matrix;
use crate::loss::LossSpec;
use crate::measure::{Subspace, WeightVector};
use crate::sampling::{draw, make_plan, DrawMode, SampleDraw};
use crate::seed::derive_seed;
use crate::sketch::{apply_right, make_sparse_sketch, orthonormal_union};
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstApproxConfig {
    /// Sketch width is `c_sketch * k^2`.
    pub c_sketch: f64,
    /// Distortion used to pick the sketch sparsity `ceil(2 / eps_const)`.
    pub eps_const: f64,
    /// Level sample size is `c_r * rank^2 * sum(scores)`.
    pub c_r: f64,
    /// Extra factor `c_loglog * max(1, ln ln ln n)` for growth-2 losses.
    pub c_loglog: f64,
    /// Base-case row count multiplier (`p_m_mult * k^2`, times `ceil(log2^3(n+2))`
    /// for growth-2 losses).
    pub p_m_mult: f64,
    pub conditioning: ConditioningConfig,
}

impl Default for ConstApproxConfig {
    fn default() -> Self {
        ConstApproxConfig {
            c_sketch: 40.0,
            eps_const: 0.5,
            c_r: 10.0,
            c_loglog: 3.0,
            p_m_mult: 50.0,
            conditioning: ConditioningConfig::default(),
        }
    }
}

impl ConstApproxConfig {
    /// Row count at or below which the recursion stops.
    pub fn base_rows(&self, k: usize, n: usize, loss: &LossSpec) -> usize {
        let k2 = (k * k) as f64;
        let base = self.p_m_mult * k2;
        let v = if loss.is_m2() {
            base * ((n + 2) as f64).log2().powi(3).ceil()
        } else {
            base
        };
        v.ceil() as usize
    }

    pub fn sketch_width(&self, k: usize) -> usize {
        ((self.c_sketch * (k * k) as f64).ceil() as usize).max(1)
    }

    pub fn sketch_sparsity(&self, m: usize) -> usize {
        ((2.0 / self.eps_const).ceil() as usize).clamp(1, m)
    }
}

/// Recursion depth limit `4 log2 log2 n + 8`.
pub fn depth_limit(n: usize) -> usize {
    let ll = ((n.max(2)) as f64).log2().max(1.0).log2();
    (4.0 * ll).floor() as usize + 8
}

/// Surviving rows of the recursion.
#[derive(Debug, Clone)]
pub struct RecurOutput {
    /// Surviving rows of the input `a_hat` (scaled in `|x|^p` mode).
    pub a_hat: Matrix,
    /// Index in the original input of each surviving row.
    pub origin: Vec<usize>,
    pub weights: WeightVector,
    /// Number of sampling levels performed.
    pub depth: usize,
    /// Row count entering each level.
    pub level_sizes: Vec<usize>,
    /// True when a level failed to shrink twice and the recursion stopped early.
    pub saturated: bool,
}

/// One sampling level; `None` when the draw failed to shrink the problem.
fn sample_level(
    a_proj: &DMatrix<f64>,
    w: &WeightVector,
    loss: &LossSpec,
    cfg: &ConstApproxConfig,
    n_orig: usize,
    p_m: usize,
    seed: u64,
) -> Result<Option<SampleDraw>> {
    let n = a_proj.nrows();
    let scores = weighted_leverage_scores(
        &Matrix::Dense(a_proj.clone()),
        w,
        loss,
        derive_seed(seed, 0),
        &cfg.conditioning,
    )?;
    let rank = scores.rank.max(1) as f64;
    let mut r = cfg.c_r * rank * rank * scores.gamma_total;
    if loss.is_m2() {
        let lll = (n_orig.max(16) as f64).ln().ln().ln().max(1.0);
        r *= cfg.c_loglog * lll;
    }
    let plan = match make_plan(&scores.gamma, r, 1.0) {
        Ok(p) => p,
        Err(Error::ZeroScores) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mode = if loss.is_m2() { DrawMode::M2Weight } else { DrawMode::LpScale { p: loss.p } };
    for attempt in 0..2u64 {
        let d = draw(&plan, w, derive_seed(seed, 1 + attempt), mode)?;
        let next = d.len();
        if !d.is_empty() && (next as f64 <= 0.9 * n as f64 || next <= p_m) {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Recursive sensitivity sampling on the pair (`a_proj`, `a_hat`) with weights
/// `w`. Stops once at most `p_m` rows remain.
#[allow(clippy::too_many_arguments)]
pub fn const_approx_recur(
    a_proj: &DMatrix<f64>,
    a_hat: &Matrix,
    w: &WeightVector,
    loss: &LossSpec,
    cfg: &ConstApproxConfig,
    p_m: usize,
    depth_cap: usize,
    seed: u64,
) -> Result<RecurOutput> {
    if a_proj.nrows() != a_hat.nrows() || w.len() != a_hat.nrows() {
        bail!(Shape, "row counts {} / {} / {} differ", a_proj.nrows(), a_hat.nrows(), w.len());
    }
    let n_orig = a_hat.nrows();
    let mut proj = a_proj.clone();
    let mut hat = a_hat.clone();
    let mut weights = w.clone();
    let mut origin: Vec<usize> = (0..n_orig).collect();
    let mut level_sizes = Vec::new();
    let mut depth = 0;
    let mut saturated = false;

    while hat.nrows() > p_m {
        if depth >= depth_cap {
            return Err(Error::RecursionDepth { depth: depth + 1, limit: depth_cap });
        }
        level_sizes.push(hat.nrows());
        let level_seed = derive_seed(seed, depth as u64);
        let Some(sample) = sample_level(&proj, &weights, loss, cfg, n_orig, p_m, level_seed)? else {
            saturated = true;
            break;
        };
        proj = sample.apply_dense(&proj);
        hat = sample.apply(&hat);
        weights = sample.weights();
        origin = sample.indices.iter().map(|&i| origin[i]).collect();
        depth += 1;
    }
    Ok(RecurOutput { a_hat: hat, origin, weights, depth, level_sizes, saturated })
}

#[derive(Debug, Clone)]
pub struct BicriteriaOutput {
    pub subspace: Subspace,
    /// Original row indices whose span is the output.
    pub rows: Vec<usize>,
    pub depth: usize,
    pub level_sizes: Vec<usize>,
    /// Base-case row bound that applied.
    pub p_m: usize,
    /// True when `k` exceeded `min(n, d)` and was lowered.
    pub k_clamped: bool,
    pub saturated: bool,
}

/// Bicriteria approximation: an orthonormal basis for a small subset of the
/// rows of `a` whose span has cost within a modest factor of the best rank-k
/// subspace.
pub fn const_approx(
    a: &Matrix,
    k: usize,
    loss: &LossSpec,
    cfg: &ConstApproxConfig,
    seed: u64,
) -> Result<BicriteriaOutput> {
    let (n, d) = (a.nrows(), a.ncols());
    if k == 0 {
        bail!(InvalidParameter, "rank must be at least 1");
    }
    let k_eff = k.min(n).min(d).max(1);
    let k_clamped = k_eff != k;
    let p_m = cfg.base_rows(k_eff, n, loss);

    let m = cfg.sketch_width(k_eff);
    let sketch = make_sparse_sketch(derive_seed(seed, 100), m, d, cfg.sketch_sparsity(m))?;
    let ar = apply_right(a, &sketch)?;
    let rec = const_approx_recur(&ar, a, &WeightVector::ones(n), loss, cfg, p_m, depth_limit(n), derive_seed(seed, 200))?;

    let subspace = if rec.a_hat.nrows() == 0 {
        Subspace::empty(d)
    } else {
        orthonormal_union(core::slice::from_ref(&rec.a_hat))?
    };
    let subspace = if subspace.ambient_dim() == d { subspace } else { Subspace::empty(d) };
    Ok(BicriteriaOutput {
        subspace,
        rows: rec.origin,
        depth: rec.depth,
        level_sizes: rec.level_sizes,
        p_m,
        k_clamped,
        saturated: rec.saturated,
    })
}
