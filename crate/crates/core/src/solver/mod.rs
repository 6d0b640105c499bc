//! Sparse symmetric positive-definite solves.
//!
//! The direct path is a sparse Cholesky factorization that fails with
//! [`SolverError::NotPositiveDefinite`] instead of producing a wrong answer;
//! the flow engine reads that failure as the onset of a singularity. The
//! iterative path is Jacobi-preconditioned conjugate gradients, which reports
//! [`SolverError::Breakdown`] on a direction of non-positive curvature.

mod cholesky;
mod ordering;

use thiserror::Error;

use crate::fem::SparseSymMatrix;

pub use cholesky::{factorize, Factorization, SymbolicCholesky, PIVOT_TOLERANCE};
pub use ordering::nested_dissection;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("matrix is not positive definite (pivot {value:e} at row {pivot})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("conjugate gradients did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("conjugate gradients broke down at iteration {iteration}: non-positive curvature")]
    Breakdown { iteration: usize },
}

/// Jacobi-preconditioned conjugate gradients, one column at a time. Stops
/// when `‖b − Ax‖ ≤ tol·‖b‖` for every column.
pub fn solve_cg<const K: usize>(
    a: &SparseSymMatrix,
    rhs: &[[f64; K]],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<[f64; K]>, SolverError> {
    let n = a.dim();
    if rhs.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    let diag: Vec<f64> = (0..n).map(|i| a.values()[a.pattern().diag_index(i)]).collect();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(SolverError::Breakdown { iteration: 0 });
    }
    let mut out = vec![[0.0; K]; n];
    for c in 0..K {
        let b: Vec<f64> = rhs.iter().map(|r| r[c]).collect();
        let x = cg_column(a, &b, &diag, tol, max_iter)?;
        for (o, v) in out.iter_mut().zip(x) {
            o[c] = v;
        }
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cg_column(
    a: &SparseSymMatrix,
    b: &[f64],
    diag: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolverError> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for iteration in 0..max_iter {
        let ap = a.mul_vec(&p);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(SolverError::Breakdown { iteration });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * b_norm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::MaxIterations {
        iterations: max_iter,
        residual: dot(&r, &r).sqrt() / b_norm,
    })
}
