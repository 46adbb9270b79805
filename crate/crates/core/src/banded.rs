//! Symmetric banded matrix storage.
//!
//! The global quadratic form is block-banded: consecutive 4n×4n element
//! blocks overlap in a 2n×2n sub-block, so the whole matrix fits in a
//! symmetric band of half-bandwidth 4n−1. Only the lower triangle is
//! stored, by diagonal: entry `(j+d, j)` lives at `data[d*dim + j]`.
//! Symmetry is exact because the upper triangle is mirrored on read.

use crate::dense::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    dim: usize,
    half_bandwidth: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(dim: usize, half_bandwidth: usize) -> Self {
        assert!(dim > 0, "banded matrix dimension must be positive");
        let hb = half_bandwidth.min(dim - 1);
        SymBanded { dim, half_bandwidth: hb, data: vec![0.0; (hb + 1) * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    /// Entry `(i, j)`, mirroring across the diagonal; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.half_bandwidth {
            0.0
        } else {
            self.data[d * self.dim + lo]
        }
    }

    /// Accumulates into a lower-triangle entry; requires `i ≥ j` inside the band.
    pub fn add_lower(&mut self, i: usize, j: usize, value: f64) {
        assert!(i >= j, "add_lower expects a lower-triangle index");
        let d = i - j;
        assert!(d <= self.half_bandwidth, "index ({i}, {j}) outside the band");
        self.data[d * self.dim + j] += value;
    }

    /// The main diagonal.
    pub fn diagonal(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    /// Symmetric banded matrix–vector product, fixed summation order.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "matvec dimension mismatch");
        let mut y = vec![0.0; self.dim];
        for j in 0..self.dim {
            y[j] = self.data[j] * x[j];
        }
        for d in 1..=self.half_bandwidth {
            let diag = &self.data[d * self.dim..d * self.dim + (self.dim - d)];
            for (j, &v) in diag.iter().enumerate() {
                y[j + d] += v * x[j];
                y[j] += v * x[j + d];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }
}
