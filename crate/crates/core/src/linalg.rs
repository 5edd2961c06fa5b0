//! Matrix storage and the small set of dense kernels the algorithms share.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Result};

/// Compressed sparse row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and explicit zeros dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                bail!(Shape, "entry ({i}, {j}) outside {nrows}x{ncols}");
            }
            if !v.is_finite() {
                bail!(Domain, "non-finite entry at ({i}, {j})");
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        let mut m = CsrMatrix { nrows, ncols, indptr, indices, values };
        m.prune_zeros();
        Ok(m)
    }

    fn prune_zeros(&mut self) {
        if self.values.iter().all(|v| *v != 0.0) {
            return;
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                if self.values[p] != 0.0 {
                    indices.push(self.indices[p]);
                    values.push(self.values[p]);
                }
            }
            indptr[i + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut indptr = Vec::with_capacity(a.nrows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: a.nrows(), ncols: a.ncols(), indptr, indices, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// An `n x d` real matrix, dense or sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl From<DMatrix<f64>> for Matrix {
    fn from(m: DMatrix<f64>) -> Self {
        Matrix::Dense(m)
    }
}

impl From<CsrMatrix> for Matrix {
    fn from(m: CsrMatrix) -> Self {
        Matrix::Sparse(m)
    }
}

impl Matrix {
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.nrows(),
            Matrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.ncols(),
            Matrix::Sparse(m) => m.ncols(),
        }
    }

    /// Number of structurally nonzero entries (for dense storage, the count of
    /// entries that are not exactly zero).
    pub fn nnz(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.iter().filter(|v| **v != 0.0).count(),
            Matrix::Sparse(m) => m.nnz(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Matrix::Dense(m) => m.iter().all(|v| v.is_finite()),
            Matrix::Sparse(m) => m.values.iter().all(|v| v.is_finite()),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Matrix::Dense(m) => m.clone(),
            Matrix::Sparse(m) => m.to_dense(),
        }
    }

    /// Calls `f(j, a_ij)` for every nonzero of row `i`.
    #[inline]
    pub fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        match self {
            Matrix::Dense(m) => {
                for j in 0..m.ncols() {
                    let v = m[(i, j)];
                    if v != 0.0 {
                        f(j, v);
                    }
                }
            }
            Matrix::Sparse(m) => {
                let (idx, val) = m.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    f(j, v);
                }
            }
        }
    }

    pub fn row_dense(&self, i: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.ncols());
        self.for_each_in_row(i, |j, v| out[j] = v);
        out
    }

    pub fn row_sq_norm(&self, i: usize) -> f64 {
        let mut s = 0.0;
        self.for_each_in_row(i, |_, v| s += v * v);
        s
    }

    /// `A * B` for a dense `B` with `ncols(A)` rows.
    pub fn mul_dense(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if b.nrows() != self.ncols() {
            bail!(Shape, "cannot multiply {}x{} by {}x{}", self.nrows(), self.ncols(), b.nrows(), b.ncols());
        }
        match self {
            Matrix::Dense(m) => Ok(m * b),
            Matrix::Sparse(m) => {
                let mut out = DMatrix::zeros(m.nrows(), b.ncols());
                for i in 0..m.nrows() {
                    let (idx, val) = m.row(i);
                    for (&j, &v) in idx.iter().zip(val) {
                        for c in 0..b.ncols() {
                            out[(i, c)] += v * b[(j, c)];
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Rows `indices[t]` scaled by `scales[t]`, in the given order.
    pub fn select_rows(&self, indices: &[usize], scales: &[f64]) -> Matrix {
        debug_assert_eq!(indices.len(), scales.len());
        match self {
            Matrix::Dense(m) => {
                let mut out = DMatrix::zeros(indices.len(), m.ncols());
                for (t, (&i, &s)) in indices.iter().zip(scales).enumerate() {
                    for j in 0..m.ncols() {
                        out[(t, j)] = s * m[(i, j)];
                    }
                }
                Matrix::Dense(out)
            }
            Matrix::Sparse(m) => {
                let mut indptr = Vec::with_capacity(indices.len() + 1);
                let mut idx_out = Vec::new();
                let mut val_out = Vec::new();
                indptr.push(0);
                for (&i, &s) in indices.iter().zip(scales) {
                    let (idx, val) = m.row(i);
                    idx_out.extend_from_slice(idx);
                    val_out.extend(val.iter().map(|v| v * s));
                    indptr.push(idx_out.len());
                }
                let mut out = CsrMatrix {
                    nrows: indices.len(),
                    ncols: m.ncols,
                    indptr,
                    indices: idx_out,
                    values: val_out,
                };
                out.prune_zeros();
                Matrix::Sparse(out)
            }
        }
    }
}

/// Pairwise (cascade) summation; the reduction tree depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for x in xs {
            s += *x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Rank-revealing orthogonalization of the columns of a matrix.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// `n x rank`, orthonormal columns.
    pub q: DMatrix<f64>,
    /// `rank x rank` upper triangular factor on the selected columns.
    pub r: DMatrix<f64>,
    /// Indices of the selected (independent) columns, in pivot order.
    pub selected: Vec<usize>,
}

impl PivotedQr {
    pub fn rank(&self) -> usize {
        self.selected.len()
    }
}

/// Modified Gram-Schmidt with column pivoting and one reorthogonalization pass.
///
/// Stops once the largest remaining column norm falls below `rel_tol` times the
/// first pivot. `a[:, selected] = q * r` up to rounding.
pub fn pivoted_qr(a: &DMatrix<f64>, rel_tol: f64) -> PivotedQr {
    let (n, m) = a.shape();
    let mut work = a.clone();
    let mut active: Vec<bool> = vec![true; m];
    let mut q_cols: Vec<DVector<f64>> = Vec::new();
    let mut selected = Vec::new();
    // coefficients of every column against each accepted direction
    let mut coef_rows: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    let mut first_pivot = 0.0;

    for _ in 0..m.min(n) {
        let mut best = None;
        let mut best_norm = 0.0;
        for j in 0..m {
            if !active[j] {
                continue;
            }
            let nrm = work.column(j).norm();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if q_cols.is_empty() {
            first_pivot = best_norm;
        }
        if best_norm == 0.0 || best_norm <= rel_tol * first_pivot {
            break;
        }
        let mut v: DVector<f64> = work.column(j).into_owned();
        let mut extra = vec![0.0; q_cols.len()];
        for (l, q) in q_cols.iter().enumerate() {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
            extra[l] = c;
        }
        let nrm = v.norm();
        if nrm == 0.0 || nrm <= rel_tol * first_pivot {
            active[j] = false;
            continue;
        }
        for (l, c) in extra.into_iter().enumerate() {
            coef_rows[l][j] += c;
        }
        let q = v / nrm;
        active[j] = false;
        let mut row = vec![0.0; m];
        for c in 0..m {
            if !active[c] {
                continue;
            }
            let coef = q.dot(&work.column(c));
            work.column_mut(c).axpy(-coef, &q, 1.0);
            row[c] = coef;
        }
        coef_rows.push(row);
        pivots.push(nrm);
        q_cols.push(q);
        selected.push(j);
    }

    let rank = selected.len();
    let mut q = DMatrix::zeros(n, rank);
    for (l, col) in q_cols.iter().enumerate() {
        q.set_column(l, col);
    }
    let mut r = DMatrix::zeros(rank, rank);
    for t in 0..rank {
        r[(t, t)] = pivots[t];
        for l in 0..t {
            r[(l, t)] = coef_rows[l][selected[t]];
        }
    }
    PivotedQr { q, r, selected }
}

/// Extends an orthonormal `base` (`d x m0`) with directions spanned by the
/// columns of `cand` (`d x N`). Candidate columns are normalized first, so the
/// drop threshold `rel_tol` is relative to a unit pivot.
pub fn orth_extend(base: &DMatrix<f64>, cand: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let d = base.nrows();
    debug_assert_eq!(cand.nrows(), d);
    let mut resid = DMatrix::zeros(d, cand.ncols());
    let mut kept = 0;
    for j in 0..cand.ncols() {
        let mut v: DVector<f64> = cand.column(j).into_owned();
        let nrm = v.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            continue;
        }
        v /= nrm;
        for _ in 0..2 {
            if base.ncols() > 0 {
                let c = base.tr_mul(&v);
                v -= base * c;
            }
        }
        resid.set_column(kept, &v);
        kept += 1;
    }
    let resid = resid.columns(0, kept).into_owned();
    // threshold is absolute on unit-normalized candidates
    let qr = pivoted_qr_abs(&resid, rel_tol);
    let mut out = DMatrix::zeros(d, base.ncols() + qr.ncols());
    out.columns_mut(0, base.ncols()).copy_from(base);
    if qr.ncols() > 0 {
        // a final pass against the base keeps the union orthonormal to rounding
        let mut ext = qr;
        if base.ncols() > 0 {
            let c = base.tr_mul(&ext);
            ext -= base * c;
        }
        for j in 0..ext.ncols() {
            let nrm = ext.column(j).norm();
            ext.column_mut(j).scale_mut(1.0 / nrm);
        }
        out.columns_mut(base.ncols(), ext.ncols()).copy_from(&ext);
    }
    out
}

fn pivoted_qr_abs(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let max_norm = (0..a.ncols()).map(|j| a.column(j).norm()).fold(0.0, f64::max);
    if max_norm <= tol {
        return DMatrix::zeros(a.nrows(), 0);
    }
    // pivoted_qr's threshold is relative to its first pivot (= max_norm)
    pivoted_qr(a, tol / max_norm).q
}

/// Eigenvectors of a symmetric matrix for the `k` smallest (or largest) eigenvalues.
pub fn sym_eigvecs(m: &DMatrix<f64>, k: usize, largest: bool) -> DMatrix<f64> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        let o = x.partial_cmp(&y).unwrap_or(core::cmp::Ordering::Equal);
        if largest {
            o.reverse()
        } else {
            o
        }
    });
    let mut out = DMatrix::zeros(n, k);
    for (t, &idx) in order.iter().take(k).enumerate() {
        out.set_column(t, &eig.eigenvectors.column(idx));
    }
    out
}

/// Top-`k` right singular vectors of `a` (`d x k`, orthonormal).
pub fn top_right_singular(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let d = a.ncols();
    let k = k.min(d);
    if a.nrows() == 0 || k == 0 {
        return identity_columns(d, k);
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| {
        svd.singular_values[y]
            .partial_cmp(&svd.singular_values[x])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut cols = DMatrix::zeros(d, 0);
    let taken: Vec<usize> = order.into_iter().take(k).collect();
    if !taken.is_empty() {
        cols = DMatrix::zeros(d, taken.len());
        for (t, &i) in taken.iter().enumerate() {
            cols.set_column(t, &v_t.row(i).transpose());
        }
    }
    complete_basis(&cols, k)
}

/// First `k` standard basis vectors of `R^d`.
pub fn identity_columns(d: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, k, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// Pads an orthonormal `d x m` block to `k >= m` orthonormal columns using
/// standard basis directions.
pub fn complete_basis(u: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let d = u.nrows();
    if u.ncols() >= k {
        return u.clone();
    }
    let ext = orth_extend(u, &DMatrix::identity(d, d), 1e-8);
    ext.columns(0, k.min(ext.ncols())).into_owned()
}

/// Orthonormal factor of the thin QR of `a`; for full column rank it spans the
/// same space (QR retraction).
pub fn qf(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, k) = a.shape();
    if k == 0 || d == 0 {
        return DMatrix::zeros(d, k.min(d));
    }
    // Householder Q is orthonormal even when `a` is rank deficient
    a.clone().qr().q()
}

/// `n x m` matrix of i.i.d. `N(0, 1)` draws, filled column by column.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        x
    })
}

/// `d x k` matrix with orthonormal columns drawn from the Haar measure.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> DMatrix<f64> {
    qf(&gaussian_matrix(rng, d, k))
}

/// Inverse of an upper triangular matrix with nonzero diagonal.
pub fn upper_triangular_inverse(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = r.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        if r[(j, j)] == 0.0 {
            bail!(Numerical, "singular triangular factor");
        }
    }
    for col in 0..n {
        // solve R x = e_col by back substitution
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for l in (i + 1)..=col {
                s -= r[(i, l)] * inv[(l, col)];
            }
            inv[(i, col)] = s / r[(i, i)];
        }
    }
    Ok(inv)
}

/// Largest entrywise deviation of `uᵀu` from the identity.
pub fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    let g = u.tr_mul(u);
    let mut err: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - target).abs());
        }
    }
    err
}
