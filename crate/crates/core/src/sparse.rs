//! Compressed sparse row storage used for problem data.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("rowptr has length {got}, expected {expected}")]
    RowPtrLength { expected: usize, got: usize },
    #[error("rowptr must start at 0, be nondecreasing and end at nnz")]
    RowPtrInvalid,
    #[error("colidx and values lengths differ ({colidx} vs {values})")]
    LengthMismatch { colidx: usize, values: usize },
    #[error("row {row}: column indices must be strictly increasing and < {ncols}")]
    ColumnOrder { row: usize, ncols: usize },
    #[error("triplet ({row}, {col}) out of bounds for {nrows}x{ncols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
}

/// Sparse matrix in CSR format. Column indices are strictly increasing
/// within each row, so duplicate entries cannot occur.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    rowptr: Vec<usize>,
    colidx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        rowptr: Vec<usize>,
        colidx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SparseError> {
        if rowptr.len() != nrows + 1 {
            return Err(SparseError::RowPtrLength {
                expected: nrows + 1,
                got: rowptr.len(),
            });
        }
        if colidx.len() != values.len() {
            return Err(SparseError::LengthMismatch {
                colidx: colidx.len(),
                values: values.len(),
            });
        }
        if rowptr[0] != 0
            || rowptr[nrows] != colidx.len()
            || rowptr.windows(2).any(|w| w[0] > w[1])
        {
            return Err(SparseError::RowPtrInvalid);
        }
        for row in 0..nrows {
            let cols = &colidx[rowptr[row]..rowptr[row + 1]];
            let ordered = cols.windows(2).all(|w| w[0] < w[1]);
            if !ordered || cols.last().is_some_and(|&c| c >= ncols) {
                return Err(SparseError::ColumnOrder { row, ncols });
            }
        }
        Ok(Self {
            nrows,
            ncols,
            rowptr,
            colidx,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rowptr: vec![0; nrows + 1],
            colidx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            rowptr: (0..=n).collect(),
            colidx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    /// Builds a matrix from (row, col, value) triplets. Duplicates are summed;
    /// explicit zeros are kept as structural entries.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        let mut sorted = triplets.to_vec();
        for &(row, col, _) in &sorted {
            if row >= nrows || col >= ncols {
                return Err(SparseError::OutOfBounds {
                    row,
                    col,
                    nrows,
                    ncols,
                });
            }
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut rowptr = vec![0; nrows + 1];
        let mut colidx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (row, col, v) in sorted {
            if last == Some((row, col)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((row, col));
            rowptr[row + 1] += 1;
            colidx.push(col);
            values.push(v);
        }
        for i in 0..nrows {
            rowptr[i + 1] += rowptr[i];
        }
        Self::new(nrows, ncols, rowptr, colidx, values)
    }

    /// Dense row-major input; exact zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense input");
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &triplets).expect("dense input is in bounds")
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

    pub fn rowptr(&self) -> &[usize] {
        &self.rowptr
    }

    pub fn colidx(&self) -> &[usize] {
        &self.colidx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.rowptr[i]..self.rowptr[i + 1];
        self.colidx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Iterates all stored entries as (row, col, value).
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.rowptr[i]..self.rowptr[i + 1];
        match self.colidx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// y = alpha * A x + beta * y
    pub fn gemv(&self, alpha: f64, x: &[f64], beta: f64, y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let acc: f64 = self.row(i).map(|(j, v)| v * x[j]).sum();
            *yi = alpha * acc + if beta == 0.0 { 0.0 } else { beta * *yi };
        }
    }

    /// y = alpha * A^T x + beta * y
    pub fn gemv_t(&self, alpha: f64, x: &[f64], beta: f64, y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        if beta == 0.0 {
            y.fill(0.0);
        } else if beta != 1.0 {
            y.iter_mut().for_each(|v| *v *= beta);
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, v) in self.row(i) {
                y[j] += alpha * v * xi;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.gemv(1.0, x, 0.0, &mut y);
        y
    }

    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        self.gemv_t(1.0, x, 0.0, &mut y);
        y
    }

    /// x^T A x for square A.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.colidx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let rowptr = counts.clone();
        let mut next = counts;
        let mut colidx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let dst = next[j];
                colidx[dst] = i;
                values[dst] = v;
                next[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            rowptr,
            colidx,
            values,
        }
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.first_asymmetry().is_none()
    }

    /// First (row, col) whose mirrored entry differs, if any.
    pub fn first_asymmetry(&self) -> Option<(usize, usize)> {
        if self.nrows != self.ncols {
            return Some((0, 0));
        }
        self.triplets()
            .find(|&(i, j, v)| !self.has_entry(j, i) || self.get(j, i) != v)
            .map(|(i, j, _)| (i, j))
    }

    pub fn has_entry(&self, i: usize, j: usize) -> bool {
        self.colidx[self.rowptr[i]..self.rowptr[i + 1]]
            .binary_search(&j)
            .is_ok()
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.rowptr == other.rowptr
            && self.colidx == other.colidx
    }

    /// New matrix whose row k is row `perm[k]` of self.
    pub fn permute_rows(&self, perm: &[usize]) -> CsrMatrix {
        debug_assert_eq!(perm.len(), self.nrows);
        let mut rowptr = Vec::with_capacity(self.nrows + 1);
        rowptr.push(0);
        let mut colidx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for &old in perm {
            let range = self.rowptr[old]..self.rowptr[old + 1];
            colidx.extend_from_slice(&self.colidx[range.clone()]);
            values.extend_from_slice(&self.values[range]);
            rowptr.push(colidx.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            rowptr,
            colidx,
            values,
        }
    }

    /// Returns diag(left) * A * diag(right).
    pub fn scaled(&self, left: &[f64], right: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                out.values[k] = left[i] * self.values[k] * right[self.colidx[k]];
            }
        }
        out
    }

    pub fn scale_values(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
