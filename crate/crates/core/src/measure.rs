//! Row weights, subspaces, and the weighted matrix measures built on a loss.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{bail, Result};
use crate::linalg::{orthonormality_error, pairwise_sum, Matrix};
use crate::loss::LossSpec;
use crate::par::map_indices;
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

/// Per-row weights, each at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        for (i, &x) in w.iter().enumerate() {
            if !(x >= 1.0 && x.is_finite()) {
                bail!(Domain, "weight {i} is {x}; weights must be finite and >= 1");
            }
        }
        Ok(WeightVector { w })
    }

    pub fn ones(n: usize) -> Self {
        WeightVector { w: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn get(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn is_unit(&self) -> bool {
        self.w.iter().all(|&x| x == 1.0)
    }

    pub fn max(&self) -> f64 {
        self.w.iter().copied().fold(1.0, f64::max)
    }

    pub fn l1(&self) -> f64 {
        pairwise_sum(&self.w)
    }

    /// `ceil(log2(1 + max w))`.
    pub fn bucket_count(&self) -> usize {
        (1.0 + self.max()).log2().ceil() as usize
    }

    /// The `j >= 1` with `2^(j-1) <= w_i < 2^j`.
    pub fn bucket_of(&self, i: usize) -> usize {
        let mut j = self.w[i].log2().floor() as usize + 1;
        // guard against log2 rounding at exact powers of two
        while 2f64.powi(j as i32 - 1) > self.w[i] {
            j -= 1;
        }
        while self.w[i] >= 2f64.powi(j as i32) {
            j += 1;
        }
        j
    }

    /// Nonempty dyadic buckets as `(j, rows)`, ordered by `j`.
    pub fn buckets(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut ids: Vec<(usize, usize)> = (0..self.len()).map(|i| (self.bucket_of(i), i)).collect();
        ids.sort();
        for (j, i) in ids {
            match out.last_mut() {
                Some((jj, rows)) if *jj == j => rows.push(i),
                _ => out.push((j, vec![i])),
            }
        }
        out
    }
}

/// A subspace given by an orthonormal column factor `u` (`d x m`); the
/// projector is `u uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub u: DMatrix<f64>,
    /// Approximation quality factor of a bicriteria solution, when known.
    pub quality_k: Option<f64>,
}

impl Subspace {
    /// Wraps `u`, checking `uᵀu = I` to 1e-9.
    pub fn new(u: DMatrix<f64>) -> Result<Self> {
        let err = orthonormality_error(&u);
        if !(err <= 1e-9) {
            bail!(Numerical, "factor is not orthonormal (error {err:e})");
        }
        Ok(Subspace { u, quality_k: None })
    }

    pub(crate) fn from_orthonormal(u: DMatrix<f64>) -> Self {
        debug_assert!(orthonormality_error(&u) <= 1e-8);
        Subspace { u, quality_k: None }
    }

    /// The zero subspace of `R^d`.
    pub fn empty(d: usize) -> Self {
        Subspace { u: DMatrix::zeros(d, 0), quality_k: None }
    }

    pub fn ambient_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.u * self.u.transpose()
    }

    /// Frobenius norm of the part of `v`'s columns outside this subspace.
    pub fn containment_gap(&self, v: &DMatrix<f64>) -> f64 {
        let r = v - &self.u * self.u.tr_mul(v);
        r.norm()
    }
}

/// Costs reported by the pipelines and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    /// `sum_i w_i M(|row_i|)`.
    pub v_cost_p: f64,
    /// `v_cost_p^(1/p)`.
    pub v_cost: f64,
    pub baselines: Vec<(String, f64)>,
    pub timings: Vec<(String, f64)>,
    pub seed: u64,
}

impl CostReport {
    pub fn new(v_cost_p: f64, loss: &LossSpec, seed: u64) -> Self {
        CostReport {
            v_cost_p,
            v_cost: v_cost_p.powf(1.0 / loss.p),
            baselines: Vec::new(),
            timings: Vec::new(),
            seed,
        }
    }
}

fn check_weights(a: &Matrix, w: &WeightVector) -> Result<()> {
    if w.len() != a.nrows() {
        bail!(Shape, "{} weights for {} rows", w.len(), a.nrows());
    }
    Ok(())
}

/// `sum_i w_i M(|a_i|_2)`.
pub fn v_norm_p(a: &Matrix, w: &WeightVector, loss: &LossSpec) -> Result<f64> {
    check_weights(a, w)?;
    let terms = map_indices(a.nrows(), |i| w.get(i) * loss.value(a.row_sq_norm(i).sqrt()));
    Ok(pairwise_sum(&terms))
}

/// `sum_ij w_i M(a_ij)`.
pub fn entrywise_norm_p(a: &Matrix, w: &WeightVector, loss: &LossSpec) -> Result<f64> {
    check_weights(a, w)?;
    let terms = map_indices(a.nrows(), |i| {
        let mut row = Vec::new();
        a.for_each_in_row(i, |_, v| row.push(loss.value(v)));
        w.get(i) * pairwise_sum(&row)
    });
    Ok(pairwise_sum(&terms))
}

/// Row norms of `A (I - U Uᵀ)`, computed without forming the product.
pub fn residual_row_norms(a: &Matrix, u: &DMatrix<f64>) -> Result<Vec<f64>> {
    if u.nrows() != a.ncols() {
        bail!(Shape, "subspace in R^{} but matrix has {} columns", u.nrows(), a.ncols());
    }
    let m = u.ncols();
    Ok(map_indices(a.nrows(), |i| {
        let mut row = DVector::zeros(a.ncols());
        a.for_each_in_row(i, |j, v| row[j] = v);
        if m == 0 {
            return row.norm();
        }
        let coef = u.tr_mul(&row);
        (row - u * coef).norm()
    }))
}

/// `v_norm_p(A (I - U Uᵀ))`.
pub fn residual_cost(a: &Matrix, x: &Subspace, w: &WeightVector, loss: &LossSpec) -> Result<f64> {
    check_weights(a, w)?;
    let norms = residual_row_norms(a, &x.u)?;
    let terms: Vec<f64> = norms.iter().enumerate().map(|(i, &r)| w.get(i) * loss.value(r)).collect();
    Ok(pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthonormal;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn lp(p: f64) -> LossSpec {
        LossSpec::lp(p).unwrap()
    }

    #[test]
    fn norm_examples() {
        let id2 = Matrix::Dense(DMatrix::identity(2, 2));
        assert_eq!(v_norm_p(&id2, &WeightVector::ones(2), &lp(1.0)).unwrap(), 2.0);
        let z = Matrix::Dense(DMatrix::zeros(3, 4));
        assert_eq!(v_norm_p(&z, &WeightVector::ones(3), &lp(1.0)).unwrap(), 0.0);
        let row = Matrix::Dense(DMatrix::from_row_slice(1, 2, &[3.0, 4.0]));
        let w2 = WeightVector::new(vec![2.0]).unwrap();
        assert_eq!(v_norm_p(&row, &w2, &lp(1.0)).unwrap(), 10.0);
        let one = WeightVector::ones(1);
        assert_eq!(entrywise_norm_p(&row, &one, &lp(1.0)).unwrap(), 7.0);
        assert_eq!(v_norm_p(&row, &one, &lp(1.0)).unwrap(), 5.0);
        let id3 = Matrix::Dense(DMatrix::identity(3, 3));
        assert_eq!(entrywise_norm_p(&id3, &WeightVector::ones(3), &lp(1.0)).unwrap(), 3.0);
        let ones = Matrix::Dense(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        assert_eq!(entrywise_norm_p(&ones, &one, &lp(2.0)).unwrap(), 2.0);
        assert!(v_norm_p(&row, &WeightVector::ones(2), &lp(1.0)).is_err());
    }

    #[test]
    fn weights_validate_and_bucket() {
        assert!(WeightVector::new(vec![0.5]).is_err());
        let w = WeightVector::new(vec![1.0, 1.9, 2.0, 3.99, 4.0, 1024.0]).unwrap();
        let j: Vec<usize> = (0..w.len()).map(|i| w.bucket_of(i)).collect();
        assert_eq!(j, vec![1, 1, 2, 2, 3, 11]);
        assert_eq!(WeightVector::ones(4).bucket_count(), 1);
        assert_eq!(w.bucket_count(), 11);
        assert_eq!(w.buckets().len(), 4);
    }

    #[test]
    fn residual_cost_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = DMatrix::from_fn(50, 3, |_, _| StandardNormal.sample(&mut rng));
        let r = DMatrix::from_fn(3, 10, |_, _| StandardNormal.sample(&mut rng));
        let a = Matrix::Dense(&l * &r);
        let w = WeightVector::ones(50);
        let span = crate::linalg::pivoted_qr(&r.transpose(), 1e-10).q;
        let x = Subspace::new(span).unwrap();
        assert!(residual_cost(&a, &x, &w, &lp(2.0)).unwrap() <= 1e-18 * 50.0 * 100.0);
        let e = Subspace::empty(10);
        assert_eq!(
            residual_cost(&a, &e, &w, &lp(1.3)).unwrap(),
            v_norm_p(&a, &w, &lp(1.3)).unwrap()
        );

        // naive row-by-row oracle with the explicit projector
        let dense = DMatrix::from_fn(50, 10, |_, _| StandardNormal.sample(&mut rng));
        let a = Matrix::Dense(dense.clone());
        let x = Subspace::new(random_orthonormal(&mut rng, 10, 3)).unwrap();
        let proj = DMatrix::identity(10, 10) - x.projector();
        let mut naive = 0.0;
        for i in 0..50 {
            let row = dense.row(i) * &proj;
            naive += row.iter().map(|v| v * v).sum::<f64>();
        }
        let got = residual_cost(&a, &x, &w, &lp(2.0)).unwrap();
        assert!((got - naive).abs() <= 1e-10 * naive);
        assert!(residual_cost(&a, &Subspace::empty(9), &w, &lp(2.0)).is_err());
    }

    fn losses() -> Vec<LossSpec> {
        vec![lp(1.0), lp(1.5), lp(2.0), LossSpec::huber(0.8).unwrap(), LossSpec::l1l2(), LossSpec::fair(1.1).unwrap()]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn metric_and_scaling_laws(seed in any::<u64>(), kappa in 1.0f64..100.0, wraw in proptest::collection::vec(1.0f64..50.0, 6)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(6, 4, |_, _| { let x: f64 = StandardNormal.sample(&mut rng); x * 3.0 });
            let b = DMatrix::from_fn(6, 4, |_, _| { let x: f64 = StandardNormal.sample(&mut rng); x });
            let w = WeightVector::new(wraw).unwrap();
            for l in losses() {
                let inv = 1.0 / l.p;
                let va = v_norm_p(&Matrix::Dense(a.clone()), &w, &l).unwrap();
                let vb = v_norm_p(&Matrix::Dense(b.clone()), &w, &l).unwrap();
                let vab = v_norm_p(&Matrix::Dense(&a + &b), &w, &l).unwrap();
                prop_assert!(vab.powf(inv) <= (va.powf(inv) + vb.powf(inv)) * (1.0 + 1e-9));
                let vk = v_norm_p(&Matrix::Dense(&a * kappa), &w, &l).unwrap();
                prop_assert!((l.c_m * kappa).powf(inv) * va.powf(inv) <= vk.powf(inv) * (1.0 + 1e-9));
                prop_assert!(vk.powf(inv) <= kappa * va.powf(inv) * (1.0 + 1e-9));
                let ve = entrywise_norm_p(&Matrix::Dense(a.clone()), &w, &l).unwrap();
                prop_assert!(va <= ve * (1.0 + 1e-9));
                prop_assert!(ve / 4.0 <= va * (1.0 + 1e-9));
            }
        }
    }
}
