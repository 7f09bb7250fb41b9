//! Compressed sparse row matrices holding only nonzero entries.

use crate::numeric::ExactSum;

/// Real matrix stored row-compressed with explicit zeros removed, so that
/// `nnz()` is the exact count of nonzero entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)))
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// in input order and zero results are dropped.
    ///
    /// # Panics
    /// If a triplet lies outside the `rows x cols` shape.
    pub fn from_triplets(rows: usize, cols: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in entries {
            assert!(r < rows && c < cols, "triplet ({r},{c}) outside {rows}x{cols}");
            per_row[r].push((c, v));
        }
        let mut m = SparseMatrix::zeros(rows, cols);
        m.indptr.clear();
        m.indptr.push(0);
        for mut row in per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = row[i].1;
                i += 1;
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                if v != 0.0 {
                    m.indices.push(c);
                    m.values.push(v);
                }
            }
            m.indptr.push(m.indices.len());
        }
        m
    }

    /// Builds a matrix from dense rows, each of length `cols`.
    pub fn from_dense(rows: &[Vec<f64>], cols: usize) -> Option<Self> {
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self::from_triplets(
            rows.len(),
            cols,
            rows.iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v))),
        ))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzero entries of row `r` as `(col, value)` in increasing column order.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All nonzero entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }

    /// `out = self * x + shift`, each entry the correctly rounded sum of the
    /// rounded products and the shift.
    pub fn mul_vec_add_into(&self, x: &[f64], shift: &[f64], out: &mut [f64], acc: &mut ExactSum) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let span = self.indptr[r]..self.indptr[r + 1];
            *o = match span.len() {
                0 => shift[r],
                1 if shift[r] == 0.0 => self.values[span.start] * x[self.indices[span.start]],
                _ => {
                    acc.clear();
                    for k in span {
                        acc.add(self.values[k] * x[self.indices[k]]);
                    }
                    acc.add(shift[r]);
                    acc.value()
                }
            };
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.mul_vec_add(x, &vec![0.0; self.rows])
    }

    /// `self * x + shift` with correctly rounded entries.
    pub fn mul_vec_add(&self, x: &[f64], shift: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_add_into(x, shift, &mut out, &mut ExactSum::new());
        out
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut acc = vec![0.0; other.cols];
        let mut touched = vec![false; other.cols];
        let mut cols_seen: Vec<usize> = Vec::new();
        let mut m = SparseMatrix::zeros(self.rows, other.cols);
        m.indptr.clear();
        m.indptr.push(0);
        for r in 0..self.rows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols_seen.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols_seen.sort_unstable();
            for &c in &cols_seen {
                if acc[c] != 0.0 {
                    m.indices.push(c);
                    m.values.push(acc[c]);
                }
                acc[c] = 0.0;
                touched[c] = false;
            }
            cols_seen.clear();
            m.indptr.push(m.indices.len());
        }
        m
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        Self::from_triplets(self.rows, self.cols, self.triplets().map(|(r, c, v)| (r, c, alpha * v)))
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&SparseMatrix]) -> SparseMatrix {
        let cols = blocks.first().map_or(0, |b| b.cols);
        assert!(blocks.iter().all(|b| b.cols == cols), "vstack column mismatch");
        let mut offset = 0;
        let mut entries = Vec::new();
        for b in blocks {
            entries.extend(b.triplets().map(|(r, c, v)| (r + offset, c, v)));
            offset += b.rows;
        }
        Self::from_triplets(offset, cols, entries)
    }

    /// Places matrices with equal row counts side by side.
    pub fn hstack(blocks: &[&SparseMatrix]) -> SparseMatrix {
        let rows = blocks.first().map_or(0, |b| b.rows);
        assert!(blocks.iter().all(|b| b.rows == rows), "hstack row mismatch");
        let mut offset = 0;
        let mut entries = Vec::new();
        for b in blocks {
            entries.extend(b.triplets().map(|(r, c, v)| (r, c + offset, v)));
            offset += b.cols;
        }
        Self::from_triplets(rows, offset, entries)
    }

    pub fn block_diag(blocks: &[&SparseMatrix]) -> SparseMatrix {
        let (mut ro, mut co) = (0, 0);
        let mut entries = Vec::new();
        for b in blocks {
            entries.extend(b.triplets().map(|(r, c, v)| (r + ro, c + co, v)));
            ro += b.rows;
            co += b.cols;
        }
        Self::from_triplets(ro, co, entries)
    }
}
