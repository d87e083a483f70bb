//! Minimal CSR sparse matrix: triplet construction, matvec, transpose matvec.
//!
//! The whole pipeline only needs `y = Ax` and `y = A^T x` products against
//! immutable matrices, so this stays deliberately small.

use serde::Serialize;

/// Compressed sparse row matrix, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets. Duplicate entries are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
        }
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut indices = vec![0usize; triplets.len()];
        let mut values = vec![0.0f64; triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in triplets {
            let pos = cursor[r];
            indices[pos] = c;
            values[pos] = v;
            cursor[r] += 1;
        }
        // sort within each row and merge duplicates
        let mut out_indptr = vec![0usize; nrows + 1];
        let mut out_indices = Vec::with_capacity(triplets.len());
        let mut out_values = Vec::with_capacity(triplets.len());
        for r in 0..nrows {
            let lo = counts[r];
            let hi = counts[r + 1];
            let mut row: Vec<(usize, f64)> = indices[lo..hi]
                .iter()
                .copied()
                .zip(values[lo..hi].iter().copied())
                .collect();
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, v) in row {
                if let Some(last) = out_indices.last() {
                    if *last == c && out_indptr[r] < out_indices.len() {
                        *out_values.last_mut().unwrap() += v;
                        continue;
                    }
                }
                out_indices.push(c);
                out_values.push(v);
            }
            out_indptr[r + 1] = out_indices.len();
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr: out_indptr,
            indices: out_indices,
            values: out_values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// `out = self * x`
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(out.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            out[r] = acc;
        }
    }

    /// `out += alpha * self^T * x`
    pub fn matvec_t_acc(&self, x: &[f64], alpha: f64, out: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(out.len(), self.ncols);
        for r in 0..self.nrows {
            let xr = alpha * x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[self.indices[k]] += self.values[k] * xr;
            }
        }
    }

    /// Entries of one row as (col, value) pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        self.indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// All entries as (row, col, value) triplets, row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                out.push((r, c, v));
            }
        }
        out
    }

    /// Debug dump in a stable sparse-triplet JSON schema.
    pub fn to_debug_json(&self) -> TripletJson {
        let mut rows = Vec::with_capacity(self.nnz());
        let mut cols = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        for (r, c, v) in self.triplets() {
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        TripletJson {
            nrows: self.nrows,
            ncols: self.ncols,
            rows,
            cols,
            values: vals,
        }
    }
}

/// Sparse-triplet JSON schema used by the debug dumps.
#[derive(Debug, Serialize)]
pub struct TripletJson {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose() {
        // [[1, 0, 2], [0, 3, 0]]
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let mut y = vec![0.0; 2];
        m.matvec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.0, 3.0]);
        let mut yt = vec![0.0; 3];
        m.matvec_t_acc(&[1.0, 2.0], 1.0, &mut yt);
        assert_eq!(yt, vec![1.0, 6.0, 2.0]);
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(1, 2, &[(0, 1, 1.0), (0, 1, 2.5), (0, 0, 1.0)]);
        assert_eq!(m.nnz(), 2);
        let mut y = vec![0.0; 1];
        m.matvec(&[0.0, 1.0], &mut y);
        assert_eq!(y[0], 3.5);
    }

    #[test]
    fn triplets_round_trip() {
        let t = vec![(0, 0, 1.0), (1, 2, -4.0), (2, 1, 0.5)];
        let m = CsrMatrix::from_triplets(3, 3, &t);
        let m2 = CsrMatrix::from_triplets(3, 3, &m.triplets());
        assert_eq!(m, m2);
    }
}
