//! Compressed sparse row storage with a fixed pattern.

use std::sync::Arc;

/// Row-compressed sparsity pattern with sorted column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl Pattern {
    /// Build from per-row column lists (sorted and deduplicated here).
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Position of `(row, col)` in the value array.
    #[inline]
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.row_ptr[row];
        let cols = &self.col_idx[start..self.row_ptr[row + 1]];
        cols.binary_search(&col).ok().map(|i| start + i)
    }

    pub fn row(&self, row: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]]
    }
}

/// Square sparse matrix sharing an immutable pattern.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub pattern: Arc<Pattern>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let nnz = pattern.nnz();
        Self {
            pattern,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        let pattern = Pattern::from_rows((0..n).map(|i| vec![i]).collect());
        Self {
            pattern: Arc::new(pattern),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    /// Add `value` at `(row, col)`; panics if the entry is outside the
    /// pattern.
    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        match self.pattern.find(row, col) {
            Some(k) => self.values[k] += value,
            None => panic!("entry ({row}, {col}) is outside the sparsity pattern"),
        }
    }

    /// Add a dense row-major block.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], block: &[f64]) {
        let nc = cols.len();
        for (i, &r) in rows.iter().enumerate() {
            let start = self.pattern.row_ptr[r];
            let row_cols = &self.pattern.col_idx[start..self.pattern.row_ptr[r + 1]];
            for (j, &c) in cols.iter().enumerate() {
                let v = block[i * nc + j];
                if v == 0.0 {
                    continue;
                }
                match row_cols.binary_search(&c) {
                    Ok(k) => self.values[start + k] += v,
                    Err(_) => panic!("entry ({r}, {c}) is outside the sparsity pattern"),
                }
            }
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map(|k| self.values[k]).unwrap_or(0.0)
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|r| {
                let s = self.pattern.row_ptr[r];
                let e = self.pattern.row_ptr[r + 1];
                self.pattern.col_idx[s..e]
                    .iter()
                    .zip(&self.values[s..e])
                    .map(|(c, v)| v * x[*c])
                    .sum()
            })
            .collect()
    }

    /// `y = A^T x`.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        for (r, xr) in x.iter().enumerate().take(self.n()) {
            let s = self.pattern.row_ptr[r];
            let e = self.pattern.row_ptr[r + 1];
            for (c, v) in self.pattern.col_idx[s..e].iter().zip(&self.values[s..e]) {
                y[*c] += v * xr;
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut d = vec![0.0; n * n];
        for r in 0..n {
            for k in self.pattern.row_ptr[r]..self.pattern.row_ptr[r + 1] {
                d[r * n + self.pattern.col_idx[k]] += self.values[k];
            }
        }
        d
    }

    /// Build from a dense row-major matrix keeping the nonzero entries.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        let rows = (0..n)
            .map(|r| (0..n).filter(|c| dense[r * n + c] != 0.0).collect())
            .collect();
        let pattern = Arc::new(Pattern::from_rows(rows));
        let mut m = Self::zeros(pattern);
        for r in 0..n {
            for c in 0..n {
                if dense[r * n + c] != 0.0 {
                    m.add(r, c, dense[r * n + c]);
                }
            }
        }
        m
    }
}
