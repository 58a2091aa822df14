//! Small dense/sparse linear algebra used by the oracles and solvers.

use alloc::vec;
use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

pub fn sq(x: f64) -> f64 {
    x * x
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `out += selfᵀ w`
    pub fn add_transpose_mul(&self, w: &[f64], out: &mut [f64]) {
        for (i, wi) in w.iter().enumerate() {
            if *wi != 0.0 {
                axpy(*wi, self.row(i), out);
            }
        }
    }

    pub fn frobenius(&self) -> f64 {
        norm(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    /// Largest singular value by power iteration on `AᵀA`.
    pub fn spectral_norm(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let mut v: Vec<f64> = (0..self.cols).map(|j| 1.0 + 0.01 * j as f64).collect();
        let mut sigma = 0.0;
        for _ in 0..500 {
            let nv = norm(&v);
            if nv == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let av = self.mul_vec(&v);
            let mut atav = vec![0.0; self.cols];
            self.add_transpose_mul(&av, &mut atav);
            let next = libm::sqrt(norm(&atav));
            if (next - sigma).abs() <= 1e-14 * next.max(1.0) {
                return next;
            }
            sigma = next;
            v = atav;
        }
        sigma
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(cols: usize) -> Self {
        CsrMatrix {
            cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row given as `(column, value)` pairs with strictly increasing columns.
    pub fn push_row(&mut self, entries: &[(usize, f64)]) {
        for &(j, v) in entries {
            debug_assert!(j < self.cols);
            self.indices.push(j);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
    }

    pub fn rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set_cols(&mut self, cols: usize) {
        debug_assert!(self.indices.iter().all(|&j| j < cols));
        self.cols = cols;
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }
}

/// Feature storage for datasets: dense for moderate widths, CSR beyond.
#[derive(Clone, Debug, PartialEq)]
pub enum Features {
    Dense(Matrix),
    Sparse(CsrMatrix),
}

impl Features {
    pub fn rows(&self) -> usize {
        match self {
            Features::Dense(m) => m.rows(),
            Features::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Features::Dense(m) => m.cols(),
            Features::Sparse(m) => m.cols(),
        }
    }

    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        match self {
            Features::Dense(m) => dot(m.row(i), w),
            Features::Sparse(m) => m.row(i).map(|(j, v)| v * w[j]).sum(),
        }
    }

    /// `out += s * x_i`
    pub fn row_axpy(&self, i: usize, s: f64, out: &mut [f64]) {
        match self {
            Features::Dense(m) => axpy(s, m.row(i), out),
            Features::Sparse(m) => {
                for (j, v) in m.row(i) {
                    out[j] += s * v;
                }
            }
        }
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        match self {
            Features::Dense(m) => norm(m.row(i)),
            Features::Sparse(m) => libm::sqrt(m.row(i).map(|(_, v)| v * v).sum()),
        }
    }

    /// Non-zero entries of row `i` in column order.
    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        match self {
            Features::Dense(m) => m
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect(),
            Features::Sparse(m) => m.row(i).filter(|(_, v)| *v != 0.0).collect(),
        }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        match self {
            Features::Dense(m) => m.get(i, j),
            Features::Sparse(m) => m.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v),
        }
    }
}
