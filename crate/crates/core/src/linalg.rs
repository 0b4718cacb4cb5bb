//! Small dense helpers shared by the solver, baselines and diagnostics.
//!
//! The oracle module deliberately does not use anything from here.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{DrsaError, Result};

pub type Matrix = DMatrix<f64>;

/// Matrix with i.i.d. `N(0, std^2)` entries, filled in row-major order so the
/// draw sequence does not depend on the storage layout.
pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Matrix {
    if std == 0.0 {
        return Matrix::zeros(rows, cols);
    }
    let normal = Normal::new(0.0, std).expect("std must be finite and non-negative");
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = normal.sample(rng);
        }
    }
    m
}

pub fn frobenius_sq(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn ensure_finite(m: &Matrix, what: impl FnOnce() -> String) -> Result<()> {
    if all_finite(m) {
        Ok(())
    } else {
        Err(DrsaError::NonFinite(what()))
    }
}

/// Solves `a x = b` for symmetric positive definite `a` via Cholesky.
pub fn solve_spd(a: &Matrix, b: &Matrix, context: &str) -> Result<Matrix> {
    if !all_finite(a) || !all_finite(b) {
        return Err(DrsaError::NonFinite(context.to_string()));
    }
    let chol = a.clone().cholesky().ok_or_else(|| {
        DrsaError::SolveFailed(format!("{context}: system matrix is not positive definite"))
    })?;
    Ok(chol.solve(b))
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Flips the sign of each column so that its entry of largest magnitude is
/// non-negative. Ties resolve to the first such entry.
pub fn canonical_column_signs(v: &mut Matrix) {
    for mut col in v.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if !col.is_empty() && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}
