//! Row-sampling plans, realized draws, and sample-size formulas.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conditioning::WellConditionedBasis;
use crate::error::{bail, Error, Result};
use crate::linalg::{gaussian_matrix, pairwise_sum, Matrix};
use crate::measure::WeightVector;
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

/// Probabilities below this are treated as zero.
pub const MIN_PROBABILITY: f64 = 1e-12;

/// Inclusion probabilities `q_i = min(1, k2 * r * s_i / sum(s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub q: Vec<f64>,
    pub scores: Vec<f64>,
    /// Target sample size `r` before oversampling.
    pub r_target: f64,
    pub oversample_const: f64,
}

impl SamplingPlan {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// `sum_i q_i`.
    pub fn expected_size(&self) -> f64 {
        pairwise_sum(&self.q)
    }

    /// Variance of the realized sample size.
    pub fn size_variance(&self) -> f64 {
        let v: Vec<f64> = self.q.iter().map(|q| q * (1.0 - q)).collect();
        pairwise_sum(&v)
    }

    /// Lowers the plan so its expected size is at most `cap`, keeping the form
    /// `q_i = min(1, λ s_i)`. Plans already within the cap are returned as is.
    pub fn capped(&self, cap: f64) -> SamplingPlan {
        if self.expected_size() <= cap || cap <= 0.0 {
            return self.clone();
        }
        let total = pairwise_sum(&self.scores);
        let size = |lam: f64| -> f64 {
            let v: Vec<f64> = self.scores.iter().map(|s| (lam * s).min(1.0)).collect();
            pairwise_sum(&v)
        };
        let mut lo = 0.0;
        let mut hi = self.oversample_const * self.r_target / total;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if size(mid) > cap {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let q = self.scores.iter().map(|s| clip((lo * s).min(1.0))).collect();
        SamplingPlan {
            q,
            scores: self.scores.clone(),
            r_target: lo * total / self.oversample_const,
            oversample_const: self.oversample_const,
        }
    }

    /// Raises every probability to at least what `other` assigns (union of
    /// oversampling); used when several plans must hold at once.
    pub fn max_with(&self, other: &SamplingPlan) -> SamplingPlan {
        let q = self.q.iter().zip(&other.q).map(|(a, b)| a.max(*b)).collect();
        SamplingPlan { q, ..self.clone() }
    }
}

fn clip(q: f64) -> f64 {
    if q < MIN_PROBABILITY {
        0.0
    } else {
        q
    }
}

pub fn make_plan(scores: &[f64], r: f64, k2: f64) -> Result<SamplingPlan> {
    if !(r > 0.0 && r.is_finite()) {
        bail!(InvalidParameter, "target sample size must be positive, got {r}");
    }
    if !(k2 > 0.0 && k2.is_finite()) {
        bail!(InvalidParameter, "oversampling constant must be positive, got {k2}");
    }
    if scores.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        bail!(Domain, "scores must be finite and nonnegative");
    }
    let total = pairwise_sum(scores);
    if total <= 0.0 {
        return Err(Error::ZeroScores);
    }
    let q = scores.iter().map(|s| clip((k2 * r * s / total).min(1.0))).collect();
    Ok(SamplingPlan { q, scores: scores.to_vec(), r_target: r, oversample_const: k2 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrawMode {
    /// Rows are scaled by `(w_i / q_i)^(1/p)` and carry unit weight.
    LpScale { p: f64 },
    /// Rows are kept as is and carry weight `w_i / q_i`.
    M2Weight,
}

/// A realized sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDraw {
    /// Sampled rows, increasing.
    pub indices: Vec<usize>,
    /// `w_i / q_i` for each sampled row.
    pub reweights: Vec<f64>,
    /// Factor applied to each sampled row.
    pub row_scales: Vec<f64>,
    pub mode: DrawMode,
}

impl SampleDraw {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Weights carried by the sampled rows under this draw's mode.
    pub fn weights(&self) -> WeightVector {
        match self.mode {
            DrawMode::LpScale { .. } => WeightVector::ones(self.len()),
            DrawMode::M2Weight => WeightVector::new(self.reweights.clone()).expect("reweights are >= 1"),
        }
    }

    /// The sampled (and scaled) rows of `a`.
    pub fn apply(&self, a: &Matrix) -> Matrix {
        a.select_rows(&self.indices, &self.row_scales)
    }

    /// Same as [`SampleDraw::apply`] for a dense matrix.
    pub fn apply_dense(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.len(), a.ncols());
        for (t, (&i, &s)) in self.indices.iter().zip(&self.row_scales).enumerate() {
            out.set_row(t, &(a.row(i) * s));
        }
        out
    }
}

/// Independent Bernoulli inclusion of every row, drawn from one stream in
/// index order.
pub fn draw(plan: &SamplingPlan, w: &WeightVector, seed: u64, mode: DrawMode) -> Result<SampleDraw> {
    if w.len() != plan.len() {
        bail!(Shape, "{} weights for a plan over {} rows", w.len(), plan.len());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = Vec::new();
    let mut reweights = Vec::new();
    let mut row_scales = Vec::new();
    for (i, &q) in plan.q.iter().enumerate() {
        let u: f64 = rng.random();
        if q > 0.0 && u < q {
            let rw = (w.get(i) / q).max(w.get(i));
            indices.push(i);
            reweights.push(rw);
            row_scales.push(match mode {
                DrawMode::LpScale { p } => rw.powf(1.0 / p),
                DrawMode::M2Weight => 1.0,
            });
        }
    }
    Ok(SampleDraw { indices, reweights, row_scales, mode })
}

/// `c * z * ln(1/δ) / ε² * γ`. An `eps` of exactly 1 is nudged into range.
pub fn sample_size_subspace(z: usize, eps: f64, delta: f64, gamma_total: f64, c: f64) -> Result<f64> {
    if z == 0 {
        bail!(InvalidParameter, "dimension parameter must be at least 1");
    }
    let eps = if eps == 1.0 { 1.0 - 1e-9 } else { eps };
    if !(eps > 0.0 && eps < 1.0) {
        bail!(InvalidParameter, "eps {eps} outside (0, 1)");
    }
    if !(delta > 0.0 && delta < 1.0) {
        bail!(InvalidParameter, "delta {delta} outside (0, 1)");
    }
    if !(gamma_total >= 0.0 && gamma_total.is_finite()) {
        bail!(Domain, "total sensitivity must be finite and nonnegative");
    }
    Ok(c * z as f64 * (1.0 / delta).ln() / (eps * eps) * gamma_total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreMode {
    /// One Gaussian direction; scores `|U_i g|^m`.
    Lp,
    /// `t` Gaussian directions of variance `1/t`; scores `|U_i G|_2^2`.
    M2 { t: usize },
}

/// `U G` for `U = (A H)[:, J] R⁻¹`, computed as `A (H' R⁻¹ G)` in `O(nnz(A) t)`.
pub fn basis_times(a: &Matrix, basis: &WellConditionedBasis, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rg = &basis.change_of_basis * g;
    let m_h = basis.h.as_ref().map_or(a.ncols(), |h| h.ncols());
    let mut lift = DMatrix::zeros(m_h, g.ncols());
    for (t, &j) in basis.selected.iter().enumerate() {
        lift.set_row(j, &rg.row(t));
    }
    let right = match &basis.h {
        Some(h) => h * lift,
        None => lift,
    };
    a.mul_dense(&right)
}

/// Sampling plan from Gaussian estimates of the rows of a well-conditioned
/// basis.
///
/// `Lp` mode targets `d^(m/2) r1^(m+1)` rows for basis rank `d`; `M2` mode
/// targets `r1 n^κ ln n` with `κ = 3/t`.
pub fn gaussian_score_plan(
    a: &Matrix,
    basis: &WellConditionedBasis,
    m_power: f64,
    r1: f64,
    mode: ScoreMode,
    k2: f64,
    seed: u64,
) -> Result<SamplingPlan> {
    if !(r1 >= 1.0) {
        bail!(InvalidParameter, "r1 must be at least 1, got {r1}");
    }
    let d = basis.rank();
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        ScoreMode::Lp => {
            let g = gaussian_matrix(&mut rng, d, 1);
            let ug = basis_times(a, basis, &g)?;
            let scores: Vec<f64> = ug.iter().map(|v| v.abs().powf(m_power)).collect();
            let r = (d as f64).powf(m_power / 2.0) * r1.powf(m_power + 1.0);
            make_plan(&scores, r, k2)
        }
        ScoreMode::M2 { t } => {
            if t == 0 {
                bail!(InvalidParameter, "need at least one Gaussian direction");
            }
            let g = gaussian_matrix(&mut rng, d, t) / (t as f64).sqrt();
            let ug = basis_times(a, basis, &g)?;
            let scores: Vec<f64> = (0..n).map(|i| ug.row(i).norm_squared()).collect();
            let kappa = 3.0 / t as f64;
            let nf = (n.max(3)) as f64;
            let r = r1 * nf.powf(kappa) * nf.ln();
            make_plan(&scores, r, k2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::{well_conditioned_basis, ConditioningConfig};
    use crate::loss::LossSpec;
    use crate::measure::v_norm_p;

    #[test]
    fn plan_examples() {
        let p = make_plan(&[1.0; 10], 5.0, 1.0).unwrap();
        assert!(p.q.iter().all(|&q| (q - 0.5).abs() < 1e-15));
        let mut s = alloc::vec![1.0; 10];
        s[3] = 10.0;
        let p = make_plan(&s, 5.0, 1.0).unwrap();
        assert_eq!(p.q[3], 1.0);
        let ones = p.q.iter().filter(|q| **q == 1.0).count() as f64;
        assert!(p.expected_size() <= 5.0 + ones + 1e-12);
        assert_eq!(make_plan(&[0.0; 4], 1.0, 1.0), Err(Error::ZeroScores));
        assert!(make_plan(&[1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn tiny_probabilities_are_zeroed() {
        let p = make_plan(&[1.0, 1e-20], 1.0, 1.0).unwrap();
        assert_eq!(p.q[1], 0.0);
    }

    #[test]
    fn draw_edge_cases() {
        let w = WeightVector::new(alloc::vec![1.0, 2.0, 3.0]).unwrap();
        let all = SamplingPlan { q: alloc::vec![1.0; 3], scores: alloc::vec![1.0; 3], r_target: 3.0, oversample_const: 1.0 };
        let d = draw(&all, &w, 4, DrawMode::M2Weight).unwrap();
        assert_eq!(d.indices, alloc::vec![0, 1, 2]);
        assert_eq!(d.reweights, w.as_slice());
        let none = SamplingPlan { q: alloc::vec![0.0; 3], ..all.clone() };
        assert!(draw(&none, &w, 4, DrawMode::M2Weight).unwrap().is_empty());
        assert_eq!(draw(&all, &w, 9, DrawMode::M2Weight), draw(&all, &w, 9, DrawMode::M2Weight));
    }

    #[test]
    fn draw_size_matches_expectation() {
        let scores: Vec<f64> = (0..200).map(|i| 1.0 + (i % 7) as f64).collect();
        let plan = make_plan(&scores, 40.0, 1.0).unwrap();
        let w = WeightVector::ones(200);
        let trials = 10_000;
        let mut total = 0.0;
        for s in 0..trials {
            total += draw(&plan, &w, s, DrawMode::M2Weight).unwrap().len() as f64;
        }
        let mean = total / trials as f64;
        let se = (plan.size_variance() / trials as f64).sqrt();
        assert!((mean - plan.expected_size()).abs() <= 3.0 * se, "{mean} vs {}", plan.expected_size());
    }

    #[test]
    fn reweighted_norm_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Matrix::Dense(gaussian_matrix(&mut rng, 100, 5));
        let loss = LossSpec::lp(1.0).unwrap();
        let w = WeightVector::ones(100);
        let truth = v_norm_p(&a, &w, &loss).unwrap();
        let scores: Vec<f64> = (0..100).map(|i| a.row_sq_norm(i).sqrt()).collect();
        let plan = make_plan(&scores, 20.0, 1.0).unwrap();
        let mut acc = 0.0;
        for s in 0..2000 {
            let d = draw(&plan, &w, s, DrawMode::LpScale { p: 1.0 }).unwrap();
            acc += v_norm_p(&d.apply(&a), &d.weights(), &loss).unwrap();
        }
        let mean = acc / 2000.0;
        assert!((mean - truth).abs() <= 0.02 * truth, "{mean} vs {truth}");
    }

    #[test]
    fn capped_plan_respects_budget() {
        let scores: Vec<f64> = (0..500).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let plan = make_plan(&scores, 400.0, 4.0).unwrap();
        let capped = plan.capped(100.0);
        assert!((capped.expected_size() - 100.0).abs() < 1e-6);
        // ordering of probabilities is preserved
        for i in 1..500 {
            assert!(capped.q[i] >= capped.q[i - 1]);
        }
        assert_eq!(plan.capped(1e9), plan);
    }

    #[test]
    fn sample_size_formula() {
        let c = sample_size_subspace(1, 1.0, (-1f64).exp(), 1.0, 8.0).unwrap();
        assert!((c - 8.0).abs() < 1e-6);
        let a = sample_size_subspace(2, 0.3, 0.1, 5.0, 8.0).unwrap();
        let b = sample_size_subspace(4, 0.3, 0.1, 5.0, 8.0).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-9 * b);
        assert!(sample_size_subspace(0, 0.3, 0.1, 1.0, 8.0).is_err());
        assert!(sample_size_subspace(1, 1.5, 0.1, 1.0, 8.0).is_err());
        assert!(sample_size_subspace(1, 0.5, 1.0, 1.0, 8.0).is_err());
    }

    #[test]
    fn gaussian_scores_follow_basis_support() {
        let mut u = DMatrix::zeros(10, 1);
        u[(4, 0)] = 1.0;
        let a = Matrix::Dense(u);
        let basis = well_conditioned_basis(&a, None, 2.0, 0, &ConditioningConfig::default()).unwrap();
        for mode in [ScoreMode::Lp, ScoreMode::M2 { t: 5 }] {
            let plan = gaussian_score_plan(&a, &basis, 1.0, 1.0, mode, 1.0, 3).unwrap();
            for i in 0..10 {
                assert_eq!(plan.scores[i] > 0.0, i == 4);
            }
        }
    }
}
