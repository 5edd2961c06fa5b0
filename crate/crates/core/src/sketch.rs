//! Random sketches: sparse sign embeddings, Gaussian row-norm sketches, and
//! p-stable embeddings.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{bail, Result};
use crate::linalg::{gaussian_matrix, pivoted_qr, Matrix};
use crate::measure::Subspace;
use crate::par::map_indices;
#[cfg(not(feature = "parallel"))]
#[allow(unused_imports)]
use crate::float::Float;

/// Drop threshold for rank-revealing orthonormalization, relative to the
/// largest pivot.
pub const RANK_TOL: f64 = 1e-8;

/// An `m x d` sparse sign matrix with exactly `s` nonzeros of magnitude
/// `1/sqrt(s)` per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSketch {
    m: usize,
    d: usize,
    s: usize,
    seed: u64,
    /// Row positions, `s` per column, column-major.
    rows: Vec<usize>,
    /// Signed values aligned with `rows`.
    vals: Vec<f64>,
}

pub fn make_sparse_sketch(seed: u64, m: usize, d: usize, s: usize) -> Result<SparseSketch> {
    if s == 0 || s > m {
        bail!(InvalidParameter, "sparsity {s} must lie in [1, {m}]");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mag = 1.0 / (s as f64).sqrt();
    let mut rows = Vec::with_capacity(d * s);
    let mut vals = Vec::with_capacity(d * s);
    for _ in 0..d {
        let mut pos = sample(&mut rng, m, s).into_vec();
        pos.sort_unstable();
        for r in pos {
            rows.push(r);
            vals.push(if rng.random::<bool>() { mag } else { -mag });
        }
    }
    Ok(SparseSketch { m, d, s, seed, rows, vals })
}

impl SparseSketch {
    /// Output dimension.
    pub fn rows(&self) -> usize {
        self.m
    }

    /// Input dimension.
    pub fn cols(&self) -> usize {
        self.d
    }

    pub fn sparsity(&self) -> usize {
        self.s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Nonzeros of column `j` as `(row, value)` pairs.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = j * self.s..(j + 1) * self.s;
        self.rows[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// The `m x d` sketch as a dense matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m, self.d);
        for j in 0..self.d {
            for (r, v) in self.column(j) {
                out[(r, j)] = v;
            }
        }
        out
    }

    /// `S x` for a vector of length `d`.
    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.m];
        for (j, &xj) in x.iter().enumerate() {
            for (r, v) in self.column(j) {
                out[r] += v * xj;
            }
        }
        out
    }
}

/// `A Sᵀ` (`n x m`) for the sketch `S` built on `d = ncols(A)`.
pub fn apply_right(a: &Matrix, r: &SparseSketch) -> Result<DMatrix<f64>> {
    apply_right_counted(a, r).map(|(m, _)| m)
}

/// [`apply_right`] together with the number of multiply-adds performed, which is
/// exactly `s * nnz(A)`.
pub fn apply_right_counted(a: &Matrix, r: &SparseSketch) -> Result<(DMatrix<f64>, u64)> {
    if a.ncols() != r.d {
        bail!(Shape, "sketch built for {} columns applied to {}", r.d, a.ncols());
    }
    let (n, m) = (a.nrows(), r.m);
    // row blocks are accumulated row-major, then copied out column by column so
    // the column-major output is written in contiguous runs
    const BLOCK: usize = 64;
    let blocks: Vec<(Vec<f64>, u64)> = map_indices(n.div_ceil(BLOCK), |b| {
        let lo = b * BLOCK;
        let hi = (lo + BLOCK).min(n);
        let mut buf = alloc::vec![0.0; (hi - lo) * m];
        let mut work = 0u64;
        for i in lo..hi {
            let row = &mut buf[(i - lo) * m..(i - lo + 1) * m];
            a.for_each_in_row(i, |j, v| {
                for (c, sv) in r.column(j) {
                    row[c] += v * sv;
                    work += 1;
                }
            });
        }
        (buf, work)
    });
    let mut out = DMatrix::zeros(n, m);
    let mut work = 0;
    for (b, (buf, w)) in blocks.into_iter().enumerate() {
        let lo = b * BLOCK;
        let len = buf.len() / m.max(1);
        for c in 0..m {
            let col = &mut out.column_mut(c);
            for t in 0..len {
                col[lo + t] = buf[t * m + c];
            }
        }
        work += w;
    }
    Ok((out, work))
}

/// A `d x t` matrix of i.i.d. `N(0, 1/t)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSketch {
    pub g: DMatrix<f64>,
    pub seed: u64,
}

impl GaussianSketch {
    pub fn new(seed: u64, d: usize, t: usize) -> Result<Self> {
        if t == 0 {
            bail!(InvalidParameter, "Gaussian sketch needs at least one column");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gaussian_matrix(&mut rng, d, t) / (t as f64).sqrt();
        Ok(GaussianSketch { g, seed })
    }

    pub fn cols(&self) -> usize {
        self.g.ncols()
    }
}

/// Estimates `|A_i (I - W Wᵀ) G|_2` for every row, computed as
/// `A_i G - (A_i W)(Wᵀ G)` so the deflated matrix is never formed.
pub fn gaussian_row_norm_estimates(
    a: &Matrix,
    deflate: Option<&Subspace>,
    g: &GaussianSketch,
) -> Result<Vec<f64>> {
    if g.g.nrows() != a.ncols() {
        bail!(Shape, "Gaussian sketch has {} rows, matrix {} columns", g.g.nrows(), a.ncols());
    }
    let mut ag = a.mul_dense(&g.g)?;
    if let Some(w) = deflate {
        if w.ambient_dim() != a.ncols() {
            bail!(Shape, "deflation subspace in R^{}, matrix has {} columns", w.ambient_dim(), a.ncols());
        }
        if w.dim() > 0 {
            let aw = a.mul_dense(&w.u)?;
            let wg = w.u.tr_mul(&g.g);
            ag -= aw * wg;
        }
    }
    Ok((0..ag.nrows()).map(|i| ag.row(i).norm()).collect())
}

/// `E|g|^p` for standard normal `g`: `2^(p/2) Γ((p+1)/2) / sqrt(π)`.
pub fn half_normal_moment(p: f64) -> f64 {
    2f64.powf(p / 2.0) * libm::tgamma((p + 1.0) / 2.0) / PI.sqrt()
}

/// An `s x n` matrix of i.i.d. standard symmetric p-stable draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PStableSketch {
    pub pi: DMatrix<f64>,
    pub p: f64,
    pub seed: u64,
}

/// One standard symmetric `alpha`-stable draw (Chambers-Mallows-Stuck).
pub fn stable_draw<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    let theta = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return theta.tan();
    }
    let w: f64 = Exp1.sample(rng);
    (alpha * theta).sin() / theta.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * theta).cos() / w).powf((1.0 - alpha) / alpha)
}

pub fn make_pstable_sketch(seed: u64, s: usize, n: usize, p: f64) -> Result<PStableSketch> {
    if !(1.0..2.0).contains(&p) {
        bail!(InvalidParameter, "p-stable sketch needs p in [1, 2), got {p}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = DMatrix::from_fn(s, n, |_, _| stable_draw(&mut rng, p));
    Ok(PStableSketch { pi, p, seed })
}

impl PStableSketch {
    pub fn rows(&self) -> usize {
        self.pi.nrows()
    }

    /// `Π B` for a dense `B` with `n` rows.
    pub fn apply_left(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if b.nrows() != self.pi.ncols() {
            bail!(Shape, "p-stable sketch has {} columns, operand {} rows", self.pi.ncols(), b.nrows());
        }
        Ok(&self.pi * b)
    }
}

/// Orthonormal basis for the sum of the row spaces of `blocks`.
pub fn orthonormal_union(blocks: &[Matrix]) -> Result<Subspace> {
    let Some(first) = blocks.first() else {
        return Ok(Subspace::empty(0));
    };
    let d = first.ncols();
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut cand = DMatrix::zeros(d, total);
    let mut c = 0;
    for b in blocks {
        if b.ncols() != d {
            bail!(Shape, "blocks have {} and {} columns", d, b.ncols());
        }
        for i in 0..b.nrows() {
            b.for_each_in_row(i, |j, v| cand[(j, c)] = v);
            c += 1;
        }
    }
    Ok(Subspace::from_orthonormal(pivoted_qr(&cand, RANK_TOL).q))
}
