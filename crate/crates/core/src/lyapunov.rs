//! Discrete-time Lyapunov equation `Psi = A Psi A^T + Xi`.

use nalgebra::{DMatrix, DVector};

use crate::error::{GicaError, Result};
use crate::linalg::{lu_solve, spectral_radius};

/// Solves `Psi = A Psi A^T + Xi` for a stable `A`.
///
/// Vectorizes through `vec(A Psi A^T) = (A (x) A) vec(Psi)` and solves the
/// resulting `n^2 x n^2` system densely. The result is symmetrized.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, xi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || xi.shape() != (n, n) {
        return Err(GicaError::invalid(format!(
            "Lyapunov operands must be square and conformant, got {:?} and {:?}",
            a.shape(),
            xi.shape()
        )));
    }
    let radius = spectral_radius(a);
    if radius >= 1.0 {
        return Err(GicaError::Unstable { radius });
    }
    let system = DMatrix::<f64>::identity(n * n, n * n) - a.kronecker(a);
    let rhs = DVector::from_column_slice(xi.as_slice());
    let v = lu_solve(system, &rhs)
        .ok_or_else(|| GicaError::Singular("Lyapunov system".into()))?;
    let psi = DMatrix::from_column_slice(n, n, v.as_slice());
    Ok((&psi + psi.transpose()) * 0.5)
}
