//! Compressed sparse row matrices.

use std::io::Write;

use nalgebra::DMatrix;

/// Square or rectangular matrix in compressed-row layout.
///
/// Column indices are strictly increasing within each row and every stored
/// value is nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates one matrix row; repeated columns are summed in insertion order.
#[derive(Clone, Debug, Default)]
pub struct RowBuilder {
    entries: Vec<(usize, f64)>,
}

impl RowBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, col: usize, value: f64) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == col) {
            e.1 += value;
        } else {
            self.entries.push((col, value));
        }
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }
}

impl CsrMatrix {
    /// Builds a matrix from per-row entry lists. Duplicate columns are summed
    /// in list order and exact zeros are dropped.
    pub fn from_rows<I, R>(n_cols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[(usize, f64)]>,
    {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut scratch = RowBuilder::new();
        for row in rows {
            scratch.clear();
            for &(c, v) in row.as_ref() {
                assert!(c < n_cols, "column {c} out of range {n_cols}");
                scratch.add(c, v);
            }
            let mut sorted: Vec<(usize, f64)> =
                scratch.entries.iter().copied().filter(|e| e.1 != 0.0).collect();
            sorted.sort_by_key(|e| e.0);
            for (c, v) in sorted {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n_rows: row_ptr.len() - 1,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates summed in order.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n_rows];
        for &(r, c, v) in triplets {
            rows[r].push((c, v));
        }
        Self::from_rows(n_cols, rows)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_rows(diag.len(), diag.iter().enumerate().map(|(i, &d)| [(i, d)]))
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        Self::from_rows(
            a.ncols(),
            (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| (j, a[(i, j)])).collect::<Vec<_>>()),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
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

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Stored entry `(i, j)` or zero.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_cols];
        for (&c, &v) in self.col_idx.iter().zip(&self.values) {
            s[c] += v;
        }
        s
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n_cols];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                rows[c].push((i, v));
            }
        }
        Self::from_rows(self.n_rows, rows)
    }

    /// Multiplies row `i` by `scale[i]`.
    pub fn scale_rows(&self, scale: &[f64]) -> Self {
        assert_eq!(scale.len(), self.n_rows);
        let mut out = self.clone();
        for i in 0..self.n_rows {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.values[k] *= scale[i];
            }
        }
        out.drop_zeros()
    }

    /// Entrywise sum `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        Self::from_rows(
            self.n_cols,
            (0..self.n_rows).map(|i| {
                let (c1, v1) = self.row(i);
                let (c2, v2) = other.row(i);
                c1.iter()
                    .zip(v1)
                    .chain(c2.iter().zip(v2))
                    .map(|(&c, &v)| (c, v))
                    .collect::<Vec<_>>()
            }),
        )
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n_cols, other.n_rows);
        Self::from_rows(
            other.n_cols,
            (0..self.n_rows).map(|i| {
                let mut acc = RowBuilder::new();
                let (ca, va) = self.row(i);
                for (&k, &a) in ca.iter().zip(va) {
                    let (cb, vb) = other.row(k);
                    for (&j, &b) in cb.iter().zip(vb) {
                        acc.add(j, a * b);
                    }
                }
                acc.entries
            }),
        )
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                a[(i, c)] = v;
            }
        }
        a
    }

    /// Largest absolute stored value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn drop_zeros(self) -> Self {
        if self.values.iter().all(|&v| v != 0.0) {
            return self;
        }
        let n_cols = self.n_cols;
        Self::from_rows(
            n_cols,
            (0..self.n_rows).map(|i| {
                let (c, v) = self.row(i);
                c.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>()
            }),
        )
    }

    /// Writes one `row col value` line per stored entry (0-based indices).
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(out, "{i} {c} {v:.16e}")?;
            }
        }
        Ok(())
    }
}
