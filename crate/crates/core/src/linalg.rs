use nalgebra::{DMatrix, DVector};

pub(crate) type Mat2 = [[f64; 2]; 2];

pub(crate) fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Dense LU solve; `None` when the matrix is numerically singular.
pub(crate) fn lu_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = a.amax();
    if scale == 0.0 {
        return None;
    }
    let lu = a.lu();
    let u_min = lu.u().diagonal().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if u_min <= scale * 1e-13 {
        return None;
    }
    lu.solve(b)
}

/// Smallest over largest eigenvalue of a symmetric matrix after scaling
/// it to unit diagonal. Zero when any diagonal entry vanishes.
pub(crate) fn scaled_condition(sym: &DMatrix<f64>) -> f64 {
    let n = sym.nrows();
    let d: Vec<f64> = (0..n).map(|i| sym[(i, i)]).collect();
    if d.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| sym[(i, j)] / (d[i] * d[j]).sqrt());
    let eig = scaled.symmetric_eigenvalues();
    let max = eig.max();
    if max <= 0.0 {
        return 0.0;
    }
    eig.min().max(0.0) / max
}
