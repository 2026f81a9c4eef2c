//! Small dense/banded linear algebra used by the discretization.
//!
//! The shifted stiffness matrix `(-Δ_h + c I)` is symmetric positive definite,
//! banded, and an M-matrix (positive diagonal, nonpositive off-diagonals,
//! diagonally dominant). Its Cholesky factor inherits nonpositive
//! off-diagonals, so the triangular substitutions add nonnegative quantities
//! only and a nonnegative right-hand side yields a nonnegative solution
//! exactly in floating point. The solver below performs no pivoting, which
//! keeps that structure intact.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Symmetric banded matrix stored by its lower band.
///
/// `band(i, d)` holds the entry `A[i][i-d]` for `d = 0..=bandwidth`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        BandMatrix {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    pub fn band(&self, i: usize, d: usize) -> f64 {
        self.data[i * (self.bandwidth + 1) + d]
    }

    #[inline]
    pub fn band_mut(&mut self, i: usize, d: usize) -> &mut f64 {
        &mut self.data[i * (self.bandwidth + 1) + d]
    }

    /// Set `A[i][j]` with `j <= i` and `i - j <= bandwidth`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        *self.band_mut(i, i - j) = v;
    }

    /// Dense copy, for small cross-checks and the dense eigensolver.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for d in 0..=self.bandwidth.min(i) {
                let v = self.band(i, d);
                if v != 0.0 {
                    m[(i, i - d)] = v;
                    m[(i - d, i)] = v;
                }
            }
        }
        m
    }

    /// Symmetric matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            y[i] += self.band(i, 0) * x[i];
            for d in 1..=self.bandwidth.min(i) {
                let v = self.band(i, d);
                if v != 0.0 {
                    y[i] += v * x[i - d];
                    y[i - d] += v * x[i];
                }
            }
        }
        y
    }
}

/// Cholesky factorization of a symmetric positive definite banded matrix.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    // factor(i, d) = L[i][i-d], d = 0..=bandwidth
    factor: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let n = a.n();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = if i - j <= bw { a.band(i, i - j) } else { 0.0 };
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if j < i {
                    l[i * w + (i - j)] = sum / l[j * w];
                } else {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::numerical(format!(
                            "Cholesky breakdown at row {i}: pivot {sum}"
                        )));
                    }
                    l[i * w] = sum.sqrt();
                }
            }
        }
        Ok(BandedCholesky {
            n,
            bandwidth: bw,
            factor: l,
        })
    }

    #[inline]
    fn l(&self, i: usize, d: usize) -> f64 {
        self.factor[i * (self.bandwidth + 1) + d]
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let bw = self.bandwidth;
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut sum = b[i];
            for d in 1..=bw.min(i) {
                let lv = self.l(i, d);
                if lv != 0.0 {
                    sum -= lv * y[i - d];
                }
            }
            y[i] = sum / self.l(i, 0);
        }
        let mut x = y;
        for i in (0..self.n).rev() {
            let mut sum = x[i];
            let hi = (i + bw).min(self.n - 1);
            for j in i + 1..=hi {
                let lv = self.l(j, j - i);
                if lv != 0.0 {
                    sum -= lv * x[j];
                }
            }
            x[i] = sum / self.l(i, 0);
        }
        x
    }
}

/// All eigenpairs of a small symmetric banded matrix, ascending by eigenvalue.
///
/// Dense solve; intended for the desk-scale grids this crate targets.
pub fn dense_symmetric_eigen(a: &BandMatrix) -> Vec<(f64, Vec<f64>)> {
    let dense = a.to_dense();
    let eig = SymmetricEigen::new(dense);
    let n = a.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order
        .into_iter()
        .map(|k| {
            let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            (eig.eigenvalues[k], v)
        })
        .collect()
}
