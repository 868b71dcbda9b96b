//! Weighted adjacency snapshots and the regularized, degree-normalized
//! representation matrix that the spectral embedding works on.
//!
//! The preprocessing chain is `W -> log10(W + 1) -> / max -> + tau 11^T ->
//! D^{-1/2} W_tau D^{-1/2}`. Every step is a pure function of its input.

use nalgebra::{DMatrix, DVector};

use crate::error::{CdpError, Result};

/// Average degree below which a snapshot is considered sparse.
pub const SPARSE_AVG_DEGREE: f64 = 5.0;

const SYMMETRY_TOL: f64 = 1e-12;

/// One symmetric, nonnegative weighted adjacency matrix observed at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    t: usize,
    weights: DMatrix<f64>,
}

impl Snapshot {
    /// Validates and wraps `weights`. `t` is 1-based.
    pub fn new(t: usize, weights: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = weights.shape();
        if rows != cols {
            return Err(CdpError::NotSquare { rows, cols });
        }
        if rows < 2 {
            return Err(CdpError::TooFewVertices { n: rows, min: 2 });
        }
        check_nonnegative(&weights)?;
        check_symmetric(&weights)?;
        Ok(Self { t, weights })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn into_weights(self) -> DMatrix<f64> {
        self.weights
    }

    /// Same weights relabelled so that new vertex `i` is old vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(CdpError::ShapeMismatch {
                expected: format!("permutation of length {n}"),
                found: format!("length {}", perm.len()),
            });
        }
        let w = DMatrix::from_fn(n, n, |i, j| self.weights[(perm[i], perm[j])]);
        Ok(Self { t: self.t, weights: w })
    }

    pub fn is_empty(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

fn check_nonnegative(w: &DMatrix<f64>) -> Result<()> {
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            let value = w[(i, j)];
            if !(value.is_finite() && value >= 0.0) {
                return Err(CdpError::InvalidWeight { row: i, col: j, value });
            }
        }
    }
    Ok(())
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(CdpError::NotSquare { rows, cols });
    }
    let scale = m.amax().max(1.0);
    for i in 0..rows {
        for j in (i + 1)..cols {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(CdpError::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Degrees and average degree of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSummary {
    pub degrees: DVector<f64>,
    pub avg_degree: f64,
    pub is_sparse: bool,
}

pub fn degree_summary(snapshot: &Snapshot) -> DegreeSummary {
    let w = snapshot.weights();
    let degrees = DVector::from_iterator(w.nrows(), w.row_iter().map(|r| r.sum()));
    let avg_degree = degrees.mean();
    DegreeSummary {
        degrees,
        avg_degree,
        is_sparse: avg_degree < SPARSE_AVG_DEGREE,
    }
}

/// Elementwise `log10(w + 1)`.
pub fn log_transform(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_nonnegative(w)?;
    Ok(w.map(|x| (x + 1.0).log10()))
}

/// Divides every entry by the largest one.
pub fn max_scale(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let max = w.max();
    if !(max > 0.0) {
        return Err(CdpError::EmptyGraph);
    }
    Ok(w / max)
}

/// Uniform regularizer `sum(W) / (4 n^2)` for a scaled matrix.
pub fn regularizer_tau(scaled: &DMatrix<f64>) -> f64 {
    let n = scaled.nrows() as f64;
    scaled.sum() / (4.0 * n * n)
}

/// Regularized degree-normalized adjacency matrix together with the
/// intermediate quantities it was built from.
#[derive(Debug, Clone)]
pub struct RepresentationMatrix {
    pub m: DMatrix<f64>,
    pub tau: f64,
    pub scaled: DMatrix<f64>,
}

pub fn representation_matrix(snapshot: &Snapshot) -> Result<RepresentationMatrix> {
    representation_from_weights(snapshot.weights())
}

/// Same as [`representation_matrix`] on an unchecked weight matrix.
pub fn representation_from_weights(w: &DMatrix<f64>) -> Result<RepresentationMatrix> {
    let scaled = max_scale(&log_transform(w)?)?;
    let tau = regularizer_tau(&scaled);
    let n = scaled.nrows();

    let w_tau = scaled.add_scalar(tau);
    // tau > 0 whenever the graph has an edge, so every degree is >= n * tau > 0.
    let inv_sqrt_deg: Vec<f64> = w_tau.row_iter().map(|r| 1.0 / r.sum().sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| w_tau[(i, j)] * inv_sqrt_deg[i] * inv_sqrt_deg[j]);

    Ok(RepresentationMatrix { m, tau, scaled })
}
