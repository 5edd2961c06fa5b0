//! Well-conditioned bases and sensitivity (leverage) scores.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Result};
use crate::linalg::{gaussian_matrix, pairwise_sum, pivoted_qr, upper_triangular_inverse, Matrix};
use crate::loss::LossSpec;
use crate::measure::WeightVector;
use crate::par::map_indices;
use crate::sketch::{make_pstable_sketch, RANK_TOL};
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditioningConfig {
    /// Row count of the p-stable embedding is `c_pi * m^2` for `m` columns.
    pub c_pi: f64,
    /// Random directions used to estimate the distortion bound.
    pub beta_samples: usize,
    /// Multiplier applied to the sampled distortion bound.
    pub beta_safety: f64,
    /// Upper bound on multiply-adds spent estimating the distortion bound.
    pub beta_work_cap: f64,
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        ConditioningConfig { c_pi: 20.0, beta_samples: 10_000, beta_safety: 2.0, beta_work_cap: 2e8 }
    }
}

/// A basis `U = (A H)[:, J] R⁻¹` of the column space of `A H`.
#[derive(Debug, Clone)]
pub struct WellConditionedBasis {
    /// `R⁻¹`, `rank x rank`.
    pub change_of_basis: DMatrix<f64>,
    /// Columns of `A H` kept after dropping dependent ones.
    pub selected: Vec<usize>,
    /// Right factor `H` applied before factoring, if any.
    pub h: Option<DMatrix<f64>>,
    /// Entrywise p-norm of `U`.
    pub alpha: f64,
    /// Bound with `|x|_q <= beta |U x|_p`, `q` the dual exponent.
    pub beta: f64,
    pub p: f64,
    /// True when `U` has orthonormal columns (no embedding was needed).
    pub orthonormal: bool,
}

impl WellConditionedBasis {
    pub fn rank(&self) -> usize {
        self.selected.len()
    }

    /// Row `i` of `A H` restricted to the selected columns.
    fn ah_row(&self, a: &Matrix, i: usize) -> DVector<f64> {
        let full = match &self.h {
            None => a.row_dense(i),
            Some(h) => {
                let mut out = DVector::zeros(h.ncols());
                a.for_each_in_row(i, |j, v| out.axpy(v, &h.row(j).transpose(), 1.0));
                out
            }
        };
        DVector::from_iterator(self.selected.len(), self.selected.iter().map(|&j| full[j]))
    }

    /// Row `i` of `U`.
    pub fn u_row(&self, a: &Matrix, i: usize) -> DVector<f64> {
        self.change_of_basis.tr_mul(&self.ah_row(a, i))
    }

    /// `U` as an `n x rank` matrix.
    pub fn u_matrix(&self, a: &Matrix) -> DMatrix<f64> {
        let rows = map_indices(a.nrows(), |i| self.u_row(a, i));
        let mut u = DMatrix::zeros(a.nrows(), self.rank());
        for (i, r) in rows.iter().enumerate() {
            u.set_row(i, &r.transpose());
        }
        u
    }
}

fn entry_p_norm(u: &DMatrix<f64>, p: f64) -> f64 {
    let terms: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
    pairwise_sum(&terms).powf(1.0 / p)
}

fn vec_norm(x: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if q == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        x.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Dual exponent of `p`.
pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Largest sampled `|x|_q / |U x|_p` over coordinate directions and random
/// Gaussian directions.
pub fn sampled_distortion(u: &DMatrix<f64>, p: f64, samples: usize, seed: u64) -> f64 {
    let m = u.ncols();
    if m == 0 || u.nrows() == 0 {
        return 1.0;
    }
    let q = dual_exponent(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut left = samples;
    let mut first = true;
    while first || left > 0 {
        let batch = if first { m } else { left.min(256) };
        let x = if first { DMatrix::identity(m, m) } else { gaussian_matrix(&mut rng, m, batch) };
        let ux = u * &x;
        for c in 0..batch {
            let xs: Vec<f64> = x.column(c).iter().copied().collect();
            let uxs: Vec<f64> = ux.column(c).iter().copied().collect();
            let den = vec_norm(&uxs, p);
            if den > 0.0 {
                best = best.max(vec_norm(&xs, q) / den);
            }
        }
        if !first {
            left -= batch;
        }
        first = false;
    }
    best
}

/// Well-conditioned basis for the column space of `A H`.
///
/// When the embedding would have at least as many rows as `A` (or `p = 2`) the
/// embedding is the identity and the basis is orthonormal, which gives a
/// distortion bound of exactly 1 for every `p <= 2`.
pub fn well_conditioned_basis(
    a: &Matrix,
    h: Option<&DMatrix<f64>>,
    p: f64,
    seed: u64,
    cfg: &ConditioningConfig,
) -> Result<WellConditionedBasis> {
    if !(1.0..=2.0).contains(&p) {
        bail!(InvalidParameter, "conditioning exponent {p} outside [1, 2]");
    }
    if let Some(h) = h {
        if h.nrows() != a.ncols() {
            bail!(Shape, "right factor has {} rows, matrix {} columns", h.nrows(), a.ncols());
        }
    }
    let ah = match h {
        Some(h) => a.mul_dense(h)?,
        None => a.to_dense(),
    };
    let n = ah.nrows();
    let m_h = ah.ncols();
    let embed_rows = (cfg.c_pi * (m_h * m_h) as f64).ceil() as usize;
    let identity_path = p == 2.0 || embed_rows >= n;

    let (rinv, selected, u) = if identity_path {
        let qr = pivoted_qr(&ah, RANK_TOL);
        let rinv = upper_triangular_inverse(&qr.r)?;
        (rinv, qr.selected, qr.q)
    } else {
        let pi = make_pstable_sketch(seed, embed_rows, n, p)?;
        let qr = pivoted_qr(&pi.apply_left(&ah)?, RANK_TOL);
        let rinv = upper_triangular_inverse(&qr.r)?;
        let sub = ah.select_columns(qr.selected.iter());
        let u = sub * &rinv;
        (rinv, qr.selected, u)
    };

    let alpha = entry_p_norm(&u, p);
    let beta = if identity_path {
        1.0
    } else {
        let per_sample = (n * selected.len()).max(1) as f64;
        let budget = ((cfg.beta_work_cap / per_sample) as usize).clamp(200.min(cfg.beta_samples), cfg.beta_samples);
        cfg.beta_safety * sampled_distortion(&u, p, budget, seed ^ 0x9e37_79b9_7f4a_7c15)
    };

    Ok(WellConditionedBasis {
        change_of_basis: rinv,
        selected,
        h: h.cloned(),
        alpha,
        beta,
        p,
        orthonormal: identity_path,
    })
}

/// Per-row sensitivity bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageScores {
    pub gamma: Vec<f64>,
    pub gamma_total: f64,
    /// Number of nonempty weight buckets used (1 when unweighted).
    pub bucket_count: usize,
    /// Largest basis rank over the buckets.
    pub rank: usize,
}

impl LeverageScores {
    fn from_gamma(gamma: Vec<f64>, bucket_count: usize, rank: usize) -> Self {
        let gamma_total = pairwise_sum(&gamma);
        LeverageScores { gamma, gamma_total, bucket_count, rank }
    }
}

fn score_of_row(u_row: &DVector<f64>, beta: f64, loss: &LossSpec) -> f64 {
    if loss.is_m2() {
        let n2 = u_row.norm();
        (beta * n2 / loss.c_m).max(beta * beta * n2 * n2)
    } else {
        let s: f64 = u_row.iter().map(|v| v.abs().powf(loss.p)).sum();
        beta.powf(loss.p) * s
    }
}

/// Sensitivity scores from a basis of the column space of `A`.
///
/// For `|x|^p` losses the score is `beta^p |U_i|_p^p`; for growth-2 losses it
/// is `max(beta |U_i|_2 / C_M, beta^2 |U_i|_2^2)` over an orthonormal basis.
pub fn leverage_scores(a: &Matrix, basis: &WellConditionedBasis, loss: &LossSpec) -> Result<LeverageScores> {
    if loss.is_m2() {
        if !basis.orthonormal {
            bail!(InvalidParameter, "growth-2 losses need an orthonormal basis");
        }
    } else if basis.p != loss.p {
        bail!(InvalidParameter, "basis built for p = {} but loss has p = {}", basis.p, loss.p);
    }
    let gamma = map_indices(a.nrows(), |i| score_of_row(&basis.u_row(a, i), basis.beta, loss));
    Ok(LeverageScores::from_gamma(gamma, 1, basis.rank()))
}

/// Weighted sensitivity scores: one basis per dyadic weight bucket, scores
/// doubled to absorb the within-bucket weight spread.
pub fn weighted_leverage_scores(
    a: &Matrix,
    w: &WeightVector,
    loss: &LossSpec,
    seed: u64,
    cfg: &ConditioningConfig,
) -> Result<LeverageScores> {
    if w.len() != a.nrows() {
        bail!(Shape, "{} weights for {} rows", w.len(), a.nrows());
    }
    let p = if loss.is_m2() { 2.0 } else { loss.p };
    let mut gamma = alloc::vec![0.0; a.nrows()];
    let buckets = w.buckets();
    let mut rank = 0;
    for (j, rows) in &buckets {
        let ones = alloc::vec![1.0; rows.len()];
        let sub = a.select_rows(rows, &ones);
        let basis = well_conditioned_basis(&sub, None, p, seed.wrapping_add(*j as u64), cfg)?;
        let scores = leverage_scores(&sub, &basis, loss)?;
        rank = rank.max(basis.rank());
        for (t, &i) in rows.iter().enumerate() {
            gamma[i] = 2.0 * scores.gamma[t];
        }
    }
    Ok(LeverageScores::from_gamma(gamma, buckets.len(), rank))
}
