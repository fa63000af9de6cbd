//! Thin complex linear-algebra helpers shared across modules.
//!
//! All heavy lifting is delegated to `nalgebra`; this module only fixes the
//! dynamic complex matrix/vector aliases and adds the few solver wrappers the
//! estimators need (Hermitian solves with a condition guard, a cheap condition
//! estimate from an LU factorization).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Condition threshold above which a linear system is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Cheap condition estimate: ratio of the largest to smallest pivot magnitude
/// of the LU factorization. Returns `f64::INFINITY` for an exactly singular
/// factorization.
pub fn condition_estimate(matrix: &CMat) -> f64 {
    let lu = matrix.clone().lu();
    let u = lu.u();
    let n = u.nrows().min(u.ncols());
    let mut max_p = 0.0f64;
    let mut min_p = f64::INFINITY;
    for i in 0..n {
        let p = u[(i, i)].norm();
        max_p = max_p.max(p);
        min_p = min_p.min(p);
    }
    if min_p == 0.0 {
        f64::INFINITY
    } else {
        max_p / min_p
    }
}

/// Solve `A x = b` for Hermitian (or general square) `A` via LU with partial
/// pivoting, rejecting systems whose condition estimate exceeds
/// [`CONDITION_LIMIT`].
pub fn guarded_solve(matrix: &CMat, rhs: &CVec) -> Result<CVec> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::dims(format!(
            "solve expects a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.nrows() != rhs.len() {
        return Err(Error::dims(format!(
            "solve rhs length {} does not match matrix size {}",
            rhs.len(),
            matrix.nrows()
        )));
    }
    let cond = condition_estimate(matrix);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::SingularDesign(format!(
            "condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )));
    }
    matrix
        .clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::SingularDesign("LU solve failed".into()))
}

/// Matrix variant of [`guarded_solve`]: solves `A X = B` column by column.
pub fn guarded_solve_mat(matrix: &CMat, rhs: &CMat) -> Result<CMat> {
    if matrix.nrows() != rhs.nrows() {
        return Err(Error::dims(format!(
            "solve rhs has {} rows, matrix is {}x{}",
            rhs.nrows(),
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let cond = condition_estimate(matrix);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::SingularDesign(format!(
            "condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )));
    }
    let lu = matrix.clone().lu();
    lu.solve(rhs)
        .ok_or_else(|| Error::SingularDesign("LU solve failed".into()))
}

/// Frobenius norm of the difference, relative to the Frobenius norm of `b`.
pub fn relative_frobenius(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm()
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Outer product `a b†`.
pub fn outer(a: &CVec, b: &CVec) -> CMat {
    a * b.adjoint()
}
