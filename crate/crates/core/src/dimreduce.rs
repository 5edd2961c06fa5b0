//! Non-adaptive residual sampling: grows a bicriteria subspace into one that
//! contains a near-optimal rank-k solution.

use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::linalg::{orth_extend, Matrix};
use crate::loss::LossSpec;
use crate::measure::{Subspace, WeightVector};
use crate::sampling::{draw, make_plan, DrawMode, SamplingPlan};
use crate::seed::derive_seed;
use crate::sketch::{gaussian_row_norm_estimates, GaussianSketch};
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimReduceConfig {
    pub eps: f64,
    /// Approximation factor of the input subspace.
    pub quality_k: f64,
    /// Leading constant of the base sample size `r1`.
    pub r1_multiplier: f64,
    /// Number of Gaussian directions; defaults to 1 for `|x|^p` losses and
    /// `ceil(2 log2(n + 2))` otherwise.
    pub t_m_override: Option<usize>,
    /// Oversampling constant.
    pub k2: f64,
    /// Upper bound on the expected number of sampled rows.
    pub sample_cap: Option<f64>,
    pub seed: u64,
}

impl Default for DimReduceConfig {
    fn default() -> Self {
        DimReduceConfig {
            eps: 0.25,
            quality_k: 1.0,
            r1_multiplier: 2.0,
            t_m_override: None,
            k2: 4.0,
            sample_cap: None,
            seed: 0,
        }
    }
}

/// `c1 K k^(2+p) eps^(-p-1) ln(k/eps + 2)`, at least 1.
pub fn base_sample_size(c1: f64, quality_k: f64, k: usize, eps: f64, p: f64) -> f64 {
    let k = k as f64;
    (c1 * quality_k * k.powf(2.0 + p) * eps.powf(-p - 1.0) * (k / eps + 2.0).ln()).max(1.0)
}

#[derive(Debug, Clone)]
pub struct DimReduceOutput {
    pub subspace: Subspace,
    /// Rows whose directions were added.
    pub sampled_rows: Vec<usize>,
    pub expected_sample_size: f64,
    pub sample_size_variance: f64,
    /// Target size handed to the sampling plan.
    pub r: f64,
    pub t_m: usize,
}

/// Samples rows with probability driven by Gaussian estimates of their residual
/// cost against `xhat` and returns an orthonormal basis of `xhat` plus the
/// sampled rows. The first `xhat.dim()` columns of the output are `xhat.u`.
pub fn dim_reduce(
    a: &Matrix,
    k: usize,
    xhat: &Subspace,
    cfg: &DimReduceConfig,
    loss: &LossSpec,
) -> Result<DimReduceOutput> {
    let (n, d) = (a.nrows(), a.ncols());
    if k == 0 || k > d {
        bail!(InvalidParameter, "rank {k} outside [1, {d}]");
    }
    if xhat.ambient_dim() != d {
        bail!(Shape, "input subspace in R^{}, matrix has {d} columns", xhat.ambient_dim());
    }
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        bail!(InvalidParameter, "eps {} outside (0, 1)", cfg.eps);
    }
    if !(cfg.quality_k >= 1.0) {
        bail!(InvalidParameter, "quality factor must be at least 1");
    }
    let t_m = cfg.t_m_override.unwrap_or(if loss.is_m2() {
        (2.0 * ((n + 2) as f64).log2()).ceil() as usize
    } else {
        1
    });
    let g = GaussianSketch::new(derive_seed(cfg.seed, 1), d, t_m)?;
    let est = gaussian_row_norm_estimates(a, Some(xhat), &g)?;
    let scores: Vec<f64> = est.iter().map(|&e| loss.value(e)).collect();

    let r1 = base_sample_size(cfg.r1_multiplier, cfg.quality_k, k, cfg.eps, loss.p);
    let r = if loss.is_m2() { r1 } else { r1.powf(loss.p + 1.0) };
    let unchanged = |r| DimReduceOutput {
        subspace: xhat.clone(),
        sampled_rows: Vec::new(),
        expected_sample_size: 0.0,
        sample_size_variance: 0.0,
        r,
        t_m,
    };
    let plan: SamplingPlan = match make_plan(&scores, r, cfg.k2) {
        Ok(p) => p,
        Err(Error::ZeroScores) => return Ok(unchanged(r)),
        Err(e) => return Err(e),
    };
    let plan = match cfg.sample_cap {
        Some(cap) => plan.capped(cap),
        None => plan,
    };
    let sample = draw(&plan, &WeightVector::ones(n), derive_seed(cfg.seed, 2), DrawMode::M2Weight)?;
    if sample.is_empty() {
        let mut out = unchanged(plan.r_target);
        out.expected_sample_size = plan.expected_size();
        out.sample_size_variance = plan.size_variance();
        return Ok(out);
    }
    let rows = sample.apply(a).to_dense();
    let u = orth_extend(&xhat.u, &rows.transpose(), 1e-8);
    Ok(DimReduceOutput {
        subspace: Subspace::from_orthonormal(u),
        sampled_rows: sample.indices,
        expected_sample_size: plan.expected_size(),
        sample_size_variance: plan.size_variance(),
        r: plan.r_target,
        t_m,
    })
}
