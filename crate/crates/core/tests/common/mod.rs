#![allow(dead_code)]

use std::f64::consts::PI;

use gica::var::compute_autocovariance;
use gica::BivariateVarModel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random stable model with companion spectral radius at most `max_radius`.
///
/// Coefficients are drawn uniformly and then rescaled by `s^k` at lag `k`,
/// which multiplies every companion eigenvalue by `s`.
pub fn random_model(seed: u64, p_max: usize, max_radius: f64, correlated: bool) -> BivariateVarModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.random_range(1..=p_max);
    let mut a: Vec<[[f64; 2]; 2]> = (0..p)
        .map(|_| {
            let mut m = [[0.0; 2]; 2];
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.random_range(-0.8..0.8);
                }
            }
            m
        })
        .collect();
    let sxx = rng.random_range(0.5..2.0);
    let syy = rng.random_range(0.5..2.0);
    let rho: f64 = if correlated { rng.random_range(-0.6..0.6) } else { 0.0 };
    let sxy = rho * (sxx * syy as f64).sqrt();
    let sigma = [[sxx, sxy], [sxy, syy]];
    let radius = BivariateVarModel::new(a.clone(), sigma).unwrap().spectral_radius();
    if radius > max_radius {
        let s = max_radius / radius;
        for (k, ak) in a.iter_mut().enumerate() {
            let f = s.powi(k as i32 + 1);
            for v in ak.iter_mut().flatten() {
                *v *= f;
            }
        }
    }
    BivariateVarModel::new(a, sigma).unwrap()
}

pub fn complex_transfer(model: &BivariateVarModel, f_norm: f64) -> [[Complex64; 2]; 2] {
    let mut m = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    for (k, ak) in model.coeffs().iter().enumerate() {
        let z = Complex64::from_polar(1.0, -2.0 * PI * f_norm * (k + 1) as f64);
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] -= ak[r][c] * z;
            }
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

/// Spectral matrix entry `(i, i)` as the Fourier sum of the autocovariance,
/// `P(f) = Gamma_0 + sum_{k>=1} (Gamma_k e^{-jwk} + Gamma_k^T e^{jwk})`.
pub struct FourierPsd {
    gammas: Vec<[[f64; 2]; 2]>,
}

impl FourierPsd {
    pub fn new(model: &BivariateVarModel, lags: usize) -> Self {
        Self {
            gammas: compute_autocovariance(model, lags).unwrap().gammas().to_vec(),
        }
    }

    pub fn auto(&self, i: usize, f_norm: f64) -> f64 {
        // diagonal entries are real: 2 Re(Gamma_k[i][i] e^{-jwk})
        let w = 2.0 * PI * f_norm;
        let mut s = self.gammas[0][i][i];
        for (k, g) in self.gammas.iter().enumerate().skip(1) {
            s += 2.0 * g[i][i] * (w * k as f64).cos();
        }
        s
    }
}

/// Least-squares regression of `y[n]` on `src[n-1..=n-q]` over `n = q..N`,
/// solved from the normal equations by Cholesky. Returns the coefficients
/// and the residual variance with divisor `N - q`.
pub fn ls_regression(y: &[f64], src: &[f64], q: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut xtx = DMatrix::<f64>::zeros(q, q);
    let mut xty = DVector::<f64>::zeros(q);
    let mut row = vec![0.0; q];
    for t in q..n {
        for k in 0..q {
            row[k] = src[t - 1 - k];
        }
        for i in 0..q {
            xty[i] += row[i] * y[t];
            for j in 0..=i {
                xtx[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..q {
        for j in i + 1..q {
            xtx[(i, j)] = xtx[(j, i)];
        }
    }
    let b = xtx.cholesky().expect("regressors are not collinear").solve(&xty);
    let mut ss = 0.0;
    for t in q..n {
        let mut e = y[t];
        for k in 0..q {
            e -= b[k] * src[t - 1 - k];
        }
        ss += e * e;
    }
    (b.iter().copied().collect(), ss / (n - q) as f64)
}

/// Frequency of the spectral maximum of an AR(2) resonance with poles
/// `rho * exp(+-j 2 pi f)`.
pub fn resonance(rho: f64, f: f64) -> f64 {
    ((1.0 + rho * rho) / (2.0 * rho) * (2.0 * PI * f).cos()).acos() / (2.0 * PI)
}
