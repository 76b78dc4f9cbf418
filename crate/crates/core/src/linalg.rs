//! Symmetric positive-definite solves (banded and dense Cholesky) and the
//! spectral condition number.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{DmpError, Result};

/// Cholesky factor of a symmetric band matrix, stored row by row.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    /// `L[i][j]` for `i - bandwidth <= j <= i` at `i * (bandwidth + 1) + j + bandwidth - i`.
    band: Vec<f64>,
}

impl BandedCholesky {
    /// Factors the band of `matrix`; entries outside the band are ignored.
    /// Returns `None` when a pivot is not positive.
    pub fn new(matrix: &DMatrix<f64>, bandwidth: usize) -> Option<Self> {
        let n = matrix.nrows();
        let w = bandwidth + 1;
        let mut band = vec![0.0; n * w];
        let idx = |i: usize, j: usize| i * w + j + bandwidth - i;
        for i in 0..n {
            let first = i.saturating_sub(bandwidth);
            for j in first..=i {
                let mut sum = matrix[(i, j)];
                for k in first.max(j.saturating_sub(bandwidth))..j {
                    sum -= band[idx(i, k)] * band[idx(j, k)];
                }
                if i == j {
                    if !(sum > 0.0 && sum.is_finite()) {
                        return None;
                    }
                    band[idx(i, i)] = sum.sqrt();
                } else {
                    band[idx(i, j)] = sum / band[idx(j, j)];
                }
            }
        }
        Some(BandedCholesky { n, bandwidth, band })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * (self.bandwidth + 1) + j + self.bandwidth - i]
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut y = rhs.clone();
        for i in 0..n {
            let mut sum = y[i];
            for k in i.saturating_sub(self.bandwidth)..i {
                sum -= self.at(i, k) * y[k];
            }
            y[i] = sum / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n.min(i + self.bandwidth + 1) {
                sum -= self.at(k, i) * y[k];
            }
            y[i] = sum / self.at(i, i);
        }
        y
    }
}

/// Whether a system of size `n` with half-bandwidth `bandwidth` is solved
/// in banded storage.
pub fn prefers_banded(n: usize, bandwidth: usize) -> bool {
    4 * bandwidth < n
}

#[derive(Debug, Clone)]
pub enum Factorization {
    Banded(BandedCholesky),
    Dense(Cholesky<f64, Dyn>),
}

impl Factorization {
    /// Banded factorization when the band is narrow, dense otherwise.
    pub fn new(matrix: &DMatrix<f64>, bandwidth: usize) -> Result<Self> {
        if prefers_banded(matrix.nrows(), bandwidth) {
            Self::banded(matrix, bandwidth)
        } else {
            Self::dense(matrix)
        }
    }

    pub fn banded(matrix: &DMatrix<f64>, bandwidth: usize) -> Result<Self> {
        BandedCholesky::new(matrix, bandwidth)
            .map(Factorization::Banded)
            .ok_or_else(|| DmpError::Conditioning {
                cond: condition_number(matrix),
            })
    }

    pub fn dense(matrix: &DMatrix<f64>) -> Result<Self> {
        Cholesky::new(matrix.clone())
            .map(Factorization::Dense)
            .ok_or_else(|| DmpError::Conditioning {
                cond: condition_number(matrix),
            })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            Factorization::Banded(f) => f.solve(rhs),
            Factorization::Dense(f) => f.solve(rhs),
        }
    }

    pub fn is_banded(&self) -> bool {
        matches!(self, Factorization::Banded(_))
    }
}

/// Spectral condition number `sigma_max / sigma_min`; infinite when the
/// matrix is singular.
pub fn condition_number(matrix: &DMatrix<f64>) -> f64 {
    if matrix.is_empty() {
        return f64::INFINITY;
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return f64::INFINITY;
    }
    let sv = matrix.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Relative residual `|A x - b| / |b|` (zero when `b` is zero and the
/// residual vanishes).
pub fn relative_residual(matrix: &DMatrix<f64>, x: &DVector<f64>, rhs: &DVector<f64>) -> f64 {
    let r = (matrix * x - rhs).norm();
    let b = rhs.norm();
    if b > 0.0 {
        r / b
    } else {
        r
    }
}
