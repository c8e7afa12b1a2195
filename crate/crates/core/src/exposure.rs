//! Interbank exposure matrix.
//!
//! Entry `(i, j)` is the nominal amount bank `i` owes bank `j`, i.e. the
//! exposure of creditor `j` to debtor `i`. Row sums are interbank debts,
//! column sums are interbank assets.
//!
//! Storage is compressed by row with a secondary column index, so both the
//! debtor-side and creditor-side sweeps of a cascade step cost `O(nnz)`.

use crate::error::{CascadeError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    // column view: for column j, positions col_ptr[j]..col_ptr[j+1] of col_entries
    // hold indices into cols/vals
    col_ptr: Vec<usize>,
    col_entries: Vec<usize>,
    row_of: Vec<usize>,
}

impl ExposureMatrix {
    pub fn zeros(n: usize) -> Self {
        Self::from_sorted(n, Vec::new())
    }

    /// Build from `(debtor, creditor, amount)` triplets. Duplicate pairs are summed
    /// and exact zeros dropped.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(CascadeError::Config(format!(
                    "exposure ({i}, {j}) out of range for {n} banks"
                )));
            }
            t.push((i, j, v));
        }
        t.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
        for (i, j, v) in t {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        Ok(Self::from_sorted(n, merged))
    }

    /// Build from a dense row-major matrix.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(CascadeError::LengthMismatch {
                    what: "exposure row",
                    got: row.len(),
                    expected: n,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Ok(Self::from_sorted(n, t))
    }

    fn from_sorted(n: usize, t: Vec<(usize, usize, f64)>) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals = Vec::with_capacity(t.len());
        let mut row_of = Vec::with_capacity(t.len());
        for &(i, j, v) in &t {
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
            row_of.push(i);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col_ptr = vec![0usize; n + 1];
        for &j in &cols {
            col_ptr[j + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut fill = col_ptr.clone();
        let mut col_entries = vec![0usize; cols.len()];
        for (k, &j) in cols.iter().enumerate() {
            col_entries[fill[j]] = k;
            fill[j] += 1;
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
            col_ptr,
            col_entries,
            row_of,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    /// Creditors of debtor `i` with the amounts owed to each.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    /// Debtors of creditor `j` with the amounts each owes `j`.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.col_entries[self.col_ptr[j]..self.col_ptr[j + 1]]
            .iter()
            .map(move |&k| (self.row_of[k], self.vals[k]))
    }

    /// All stored entries as `(debtor, creditor, amount)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.vals.len()).map(move |k| (self.row_of[k], self.cols[k], self.vals[k]))
    }

    /// Interbank debts `X_i = sum_j omega_ij`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Interbank assets `Z_j = sum_i omega_ij`.
    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.col(j).map(|(_, v)| v).sum()).collect()
    }

    /// `sum_j w_j * omega_ij` for every debtor `i`.
    pub fn weighted_row_sums(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| w[j] * v).sum()).collect()
    }

    /// `sum_i w_i * omega_ij` for every creditor `j`.
    pub fn weighted_col_sums(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n).map(|j| self.col(j).map(|(i, v)| w[i] * v).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().map(|(i, j, v)| (j, i, v)).collect::<Vec<_>>();
        let mut t = t;
        t.sort_by_key(|e| (e.0, e.1));
        Self::from_sorted(self.n, t)
    }

    /// Scale rows by `row_w` and columns by `col_w`: `row_w_i * col_w_j * omega_ij`.
    pub fn scaled(&self, row_w: &[f64], col_w: &[f64]) -> Self {
        let t = self
            .triplets()
            .map(|(i, j, v)| (i, j, row_w[i] * col_w[j] * v))
            .collect();
        Self::from_sorted(self.n, t)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Embed into an `(n + k)`-bank matrix, shifting indices up by `k`.
    pub(crate) fn shifted(&self, k: usize) -> Vec<(usize, usize, f64)> {
        self.triplets().map(|(i, j, v)| (i + k, j + k, v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_and_views_agree() {
        let m = ExposureMatrix::from_dense(&[
            vec![0.0, 10.0, 2.0],
            vec![0.0, 0.0, 3.0],
            vec![4.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(m.row_sums(), vec![12.0, 3.0, 4.0]);
        assert_eq!(m.col_sums(), vec![4.0, 10.0, 5.0]);
        assert_eq!(m.get(0, 2), 2.0);
        assert_eq!(m.get(1, 0), 0.0);
        let col2: Vec<_> = m.col(2).collect();
        assert_eq!(col2, vec![(0, 2.0), (1, 3.0)]);
        assert_eq!(m.transpose().to_dense()[2][0], 2.0);
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn triplets_merge_duplicates() {
        let m = ExposureMatrix::from_triplets(2, vec![(0, 1, 1.5), (0, 1, 2.5), (1, 0, 0.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), 4.0);
        assert!(ExposureMatrix::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn ragged_dense_rejected() {
        assert!(ExposureMatrix::from_dense(&[vec![0.0, 1.0], vec![0.0]]).is_err());
    }
}
