//! Compressed sparse row matrices.
//!
//! Incidence matrices, Laplacians, attentional Laplacians and the sparse
//! harmonic projector are all stored as [`SparseMatrix`]. Entries are kept
//! sorted by column within each row, without duplicates and without explicit
//! zeros.

use crate::dense::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, row_ptr: vec![0; n_rows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicate positions
    /// are summed and entries that end up exactly zero are dropped.
    ///
    /// Panics if a triplet lies outside `n_rows × n_cols`.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) outside {n_rows}x{n_cols}");
        }
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut rows_of = Vec::with_capacity(sorted.len());
        let mut i = 0;
        while i < sorted.len() {
            let (r, c, mut v) = sorted[i];
            i += 1;
            while i < sorted.len() && sorted[i].0 == r && sorted[i].1 == c {
                v += sorted[i].2;
                i += 1;
            }
            if v != 0.0 {
                rows_of.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for &r in &rows_of {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn from_dense(m: &Matrix) -> Self {
        let mut t = Vec::new();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                let v = m.get(r, c);
                if v != 0.0 {
                    t.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), &t)
    }

    /// Diagonal matrix.
    pub fn diagonal(diag: &[f64]) -> Self {
        let t: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), diag.len(), &t)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Fraction of stored entries relative to the dense size.
    pub fn fill(&self) -> f64 {
        let total = self.n_rows * self.n_cols;
        if total == 0 {
            0.0
        } else {
            self.nnz() as f64 / total as f64
        }
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.n_cols, self.n_rows, &t)
    }

    pub fn scale(&self, s: f64) -> Self {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (r, c, v * s)).collect();
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }

    pub fn add(&self, rhs: &SparseMatrix) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "sparse add shape");
        let t: Vec<_> = self.triplets().chain(rhs.triplets()).collect();
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }

    /// `self · rhs` for two sparse matrices (row-wise Gustavson product).
    pub fn mul_sparse(&self, rhs: &SparseMatrix) -> Self {
        assert_eq!(self.n_cols, rhs.n_rows, "sparse product inner dimension");
        let mut acc = vec![0.0; rhs.n_cols];
        let mut touched = vec![false; rhs.n_cols];
        let mut cols_in_row = Vec::new();
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.n_rows {
            let (a_cols, a_vals) = self.row(r);
            for (&k, &a) in a_cols.iter().zip(a_vals) {
                let (b_cols, b_vals) = rhs.row(k);
                for (&c, &b) in b_cols.iter().zip(b_vals) {
                    if !touched[c] {
                        touched[c] = true;
                        cols_in_row.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols_in_row.sort_unstable();
            for &c in &cols_in_row {
                if acc[c] != 0.0 {
                    col_idx.push(c);
                    values.push(acc[c]);
                }
                acc[c] = 0.0;
                touched[c] = false;
            }
            cols_in_row.clear();
            row_ptr[r + 1] = col_idx.len();
        }
        Self { n_rows: self.n_rows, n_cols: rhs.n_cols, row_ptr, col_idx, values }
    }

    /// `self · rhs` for a dense right-hand side.
    pub fn mul_dense(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n_cols, rhs.rows(), "sparse-dense inner dimension");
        let f = rhs.cols();
        let mut out = Matrix::zeros(self.n_rows, f);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let out_row = out.row_mut(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, x) in out_row.iter_mut().zip(rhs.row(c)) {
                    *o += v * x;
                }
            }
        }
        out
    }

    /// `selfᵀ · rhs` for a dense right-hand side.
    pub fn t_mul_dense(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n_rows, rhs.rows(), "sparse-transpose-dense inner dimension");
        let f = rhs.cols();
        let mut out = Matrix::zeros(self.n_cols, f);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let g = rhs.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, x) in out.row_mut(c).iter_mut().zip(g) {
                    *o += v * x;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n_cols, x.len(), "sparse-vector dimension");
        (0..self.n_rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn t_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n_rows, x.len(), "sparse-transpose-vector dimension");
        let mut out = vec![0.0; self.n_cols];
        for (r, &xr) in x.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[c] += v * xr;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            m.set(r, c, v);
        }
        m
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.n_rows == self.n_cols && self.triplets().all(|(r, c, v)| (self.get(c, r) - v).abs() <= tol)
    }

    /// `D · self · D` for a diagonal of signs (or any scaling).
    pub fn congruence_diag(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n_rows);
        assert_eq!(d.len(), self.n_cols);
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (r, c, d[r] * v * d[c])).collect();
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }

    /// Same matrix with rows and columns reordered: entry `(r, c)` moves to
    /// `(row_perm[r], col_perm[c])`.
    pub fn permute(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (row_perm[r], col_perm[c], v)).collect();
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }
}

/// A linear operator that is either sparse or has been densified.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearOperator {
    Sparse(SparseMatrix),
    Dense(Matrix),
}

impl LinearOperator {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            LinearOperator::Sparse(s) => s.shape(),
            LinearOperator::Dense(d) => d.shape(),
        }
    }

    pub fn apply(&self, rhs: &Matrix) -> Matrix {
        match self {
            LinearOperator::Sparse(s) => s.mul_dense(rhs),
            LinearOperator::Dense(d) => d.matmul(rhs),
        }
    }

    pub fn apply_transpose(&self, rhs: &Matrix) -> Matrix {
        match self {
            LinearOperator::Sparse(s) => s.t_mul_dense(rhs),
            LinearOperator::Dense(d) => d.t_matmul(rhs),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            LinearOperator::Sparse(s) => s.to_dense(),
            LinearOperator::Dense(d) => d.clone(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, LinearOperator::Dense(_))
    }

    pub fn congruence_diag(&self, d: &[f64]) -> Self {
        match self {
            LinearOperator::Sparse(s) => LinearOperator::Sparse(s.congruence_diag(d)),
            LinearOperator::Dense(m) => {
                let mut out = m.clone();
                for r in 0..m.rows() {
                    for c in 0..m.cols() {
                        out.set(r, c, d[r] * m.get(r, c) * d[c]);
                    }
                }
                LinearOperator::Dense(out)
            }
        }
    }
}

/// Row-wise sparsity structure without values; the support of an
/// attentional Laplacian.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    row_of: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a square pattern from per-row sorted neighbor lists.
    pub fn from_rows(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut row_of = Vec::new();
        for (r, cols) in rows.iter().enumerate() {
            debug_assert!(cols.windows(2).all(|w| w[0] < w[1]), "pattern row not sorted");
            col_idx.extend_from_slice(cols);
            row_of.extend(std::iter::repeat_n(r, cols.len()));
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, row_of }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    #[inline]
    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    /// Row index of each stored entry.
    #[inline]
    pub fn row_indices(&self) -> &[usize] {
        &self.row_of
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.col_idx[self.row_range(r)]
    }

    /// Materialises a sparse matrix with the given per-entry values.
    pub fn with_values(&self, values: &[f64]) -> SparseMatrix {
        assert_eq!(values.len(), self.nnz());
        let t: Vec<_> =
            self.row_of.iter().zip(&self.col_idx).zip(values).map(|((&r, &c), &v)| (r, c, v)).collect();
        SparseMatrix::from_triplets(self.n, self.n, &t)
    }

    /// `S(values) · rhs`, with `S` on this pattern.
    pub fn mul_dense(&self, values: &[f64], rhs: &Matrix) -> Matrix {
        assert_eq!(values.len(), self.nnz());
        assert_eq!(rhs.rows(), self.n);
        let mut out = Matrix::zeros(self.n, rhs.cols());
        for r in 0..self.n {
            let out_row = out.row_mut(r);
            for k in self.row_range(r) {
                let v = values[k];
                for (o, x) in out_row.iter_mut().zip(rhs.row(self.col_idx[k])) {
                    *o += v * x;
                }
            }
        }
        out
    }

    /// `S(values)ᵀ · rhs`.
    pub fn t_mul_dense(&self, values: &[f64], rhs: &Matrix) -> Matrix {
        assert_eq!(values.len(), self.nnz());
        assert_eq!(rhs.rows(), self.n);
        let mut out = Matrix::zeros(self.n, rhs.cols());
        for r in 0..self.n {
            let g = rhs.row(r);
            for k in self.row_range(r) {
                let v = values[k];
                for (o, x) in out.row_mut(self.col_idx[k]).iter_mut().zip(g) {
                    *o += v * x;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triplets_are_deduplicated_and_zeros_dropped() {
        let s = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (1, 1, -1.0)]);
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.get(0, 0), 3.0);
        assert_eq!(s.get(1, 1), 0.0);
    }

    #[test]
    fn pattern_products_match_materialised_matrix() {
        let p = SparsityPattern::from_rows(&[vec![0, 2], vec![1], vec![0, 1, 2]]);
        let vals = [0.5, -1.0, 2.0, 0.25, 3.0, -0.5];
        let s = p.with_values(&vals);
        let b = Matrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(p.mul_dense(&vals, &b).max_abs_diff(&s.mul_dense(&b)) < 1e-15);
        assert!(p.t_mul_dense(&vals, &b).max_abs_diff(&s.transpose().mul_dense(&b)) < 1e-15);
    }

    fn arb_sparse(n: usize, m: usize) -> impl Strategy<Value = SparseMatrix> {
        proptest::collection::vec((0..n, 0..m, -3i32..=3), 0..20).prop_map(move |t| {
            let t: Vec<_> = t.into_iter().map(|(r, c, v)| (r, c, v as f64)).collect();
            SparseMatrix::from_triplets(n, m, &t)
        })
    }

    proptest! {
        #[test]
        fn sparse_products_agree_with_dense(a in arb_sparse(5, 4), b in arb_sparse(4, 6)) {
            let dense = a.to_dense().matmul(&b.to_dense());
            prop_assert!(a.mul_sparse(&b).to_dense().max_abs_diff(&dense) == 0.0);
            prop_assert!(a.mul_dense(&b.to_dense()).max_abs_diff(&dense) == 0.0);
            prop_assert!(a.transpose().t_mul_dense(&b.to_dense()).max_abs_diff(&dense) == 0.0);
            prop_assert!(a.transpose().transpose() == a);
        }
    }
}
