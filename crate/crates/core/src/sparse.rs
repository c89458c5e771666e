//! Row-compressed storage for small symmetric sparse matrices.
//!
//! Both triangles are stored so that row access is symmetric. The matrices
//! assembled from grid stencils have at most `2n + 1` entries per row.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymSparse {
    order: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SymSparse {
    pub fn zeros(order: usize) -> Self {
        SymSparse {
            order,
            rows: vec![Vec::new(); order],
        }
    }

    /// Builds a matrix from entries `(i, j, v)`. Off-diagonal entries are
    /// mirrored; duplicates are summed.
    pub fn from_triplets<I>(order: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); order];
        for (i, j, v) in entries {
            assert!(i < order && j < order, "triplet ({i}, {j}) out of range");
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(j, v) in row.iter() {
                match merged.last_mut() {
                    Some((last, acc)) if *last == j => *acc += v,
                    _ => merged.push((j, v)),
                }
            }
            *row = merged;
        }
        SymSparse { order, rows }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        let n = a.nrows();
        let entries = (0..n).flat_map(|i| {
            (i..n).filter_map(move |j| {
                let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                (v != 0.0).then_some((i, j, v))
            })
        });
        SymSparse::from_triplets(n, entries.collect::<Vec<_>>())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|&(_, v)| v.abs()))
            .fold(0.0, f64::max)
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|&(_, v)| v.is_finite()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.order);
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(_, v)| v).sum()).collect()
    }

    /// `self - shift * diag(weights)`.
    pub fn shifted(&self, shift: f64, weights: &[f64]) -> SymSparse {
        assert_eq!(weights.len(), self.order);
        let mut out = self.clone();
        for (i, row) in out.rows.iter_mut().enumerate() {
            let delta = shift * weights[i];
            if delta == 0.0 {
                continue;
            }
            match row.binary_search_by_key(&i, |&(c, _)| c) {
                Ok(pos) => row[pos].1 -= delta,
                Err(pos) => row.insert(pos, (i, -delta)),
            }
        }
        out
    }

    /// `self + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> SymSparse {
        self.shifted(-1.0, d)
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> SymSparse {
        let mut pos = vec![usize::MAX; self.order];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let rows = idx
            .iter()
            .map(|&i| {
                let mut r: Vec<(usize, f64)> = self.rows[i]
                    .iter()
                    .filter(|&&(j, _)| pos[j] != usize::MAX)
                    .map(|&(j, v)| (pos[j], v))
                    .collect();
                r.sort_by_key(|&(j, _)| j);
                r
            })
            .collect();
        SymSparse {
            order: idx.len(),
            rows,
        }
    }

    /// Dense rectangular block `A[rows, cols]`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        let mut pos = vec![usize::MAX; self.order];
        for (k, &j) in cols.iter().enumerate() {
            pos[j] = k;
        }
        let mut out = DMatrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for &(j, v) in &self.rows[i] {
                if pos[j] != usize::MAX {
                    out[(a, pos[j])] = v;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.order, self.order);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows.iter().enumerate().all(|(i, r)| {
            r.iter()
                .all(|&(j, v)| (v - self.get(j, i)).abs() <= tol * v.abs().max(1.0))
        })
    }
}
