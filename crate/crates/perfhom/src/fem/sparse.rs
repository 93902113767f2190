use std::sync::Arc;

use crate::mesh::TriMesh;

/// Compressed sparse row matrix. All operators assembled here are symmetric,
/// but both triangles are stored so products need no transposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Arc<[usize]>,
    col_idx: Arc<[usize]>,
    pub values: Vec<f64>,
}

/// Sparsity pattern of the P1 operators on one mesh, with the value slots
/// of every local element entry precomputed.
#[derive(Debug, Clone)]
pub struct Pattern {
    n: usize,
    row_ptr: Arc<[usize]>,
    col_idx: Arc<[usize]>,
    tri_slots: Vec<[usize; 9]>,
}

impl Pattern {
    pub fn new(mesh: &TriMesh) -> Self {
        Self::from_triangles(mesh.n_vertices(), &mesh.triangles)
    }

    pub fn from_triangles(n: usize, triangles: &[[usize; 3]]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            row.push(i);
        }
        for t in triangles {
            for &a in t {
                for &b in t {
                    rows[a].push(b);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let slot = |a: usize, b: usize| {
            let cols = &col_idx[row_ptr[a]..row_ptr[a + 1]];
            row_ptr[a] + cols.binary_search(&b).expect("entry is in the pattern")
        };
        let tri_slots = triangles
            .iter()
            .map(|t| {
                let mut s = [0; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        s[3 * i + j] = slot(t[i], t[j]);
                    }
                }
                s
            })
            .collect();
        Pattern {
            n,
            row_ptr: row_ptr.into(),
            col_idx: col_idx.into(),
            tri_slots,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn zeros(&self) -> SparseMatrix {
        SparseMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: vec![0.0; self.col_idx.len()],
        }
    }

    pub(crate) fn tri_slots(&self, t: usize) -> &[usize; 9] {
        &self.tri_slots[t]
    }
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            for &(j, v) in row.iter() {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            n,
            row_ptr: row_ptr.into(),
            col_idx: col_idx.into(),
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub(crate) fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        Arc::ptr_eq(&self.row_ptr, &other.row_ptr) && Arc::ptr_eq(&self.col_idx, &other.col_idx)
            || (self.row_ptr == other.row_ptr && self.col_idx == other.col_idx)
    }

    /// `self += s · other` for matrices sharing one pattern.
    pub fn add_scaled(&mut self, s: f64, other: &SparseMatrix) {
        assert!(self.same_pattern(other), "matrices must share a sparsity pattern");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed() {
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (0, 0, 3.0), (1, 1, 5.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.mul(&[1.0, 1.0]), vec![6.0, 5.0]);
    }
}
