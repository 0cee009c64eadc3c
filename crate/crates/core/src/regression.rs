//! Ordinary least squares on lagged regressors.
//!
//! Used for the full VAR fit, for the direct restricted fits that drive
//! surrogate generation, and as an estimation oracle in tests. The normal
//! equations are accumulated row by row, so long series never materialize
//! a design matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{GicaError, Result};
use crate::linalg::{lu_solve, scaled_condition};

/// Below this scaled eigenvalue ratio the regressors are treated as collinear.
const RANK_TOL: f64 = 1e-12;

/// One regressor series entering with lags `1..=lags`.
#[derive(Debug, Clone, Copy)]
pub struct Lagged<'a> {
    pub series: &'a [f64],
    pub lags: usize,
}

impl<'a> Lagged<'a> {
    pub fn new(series: &'a [f64], lags: usize) -> Self {
        Self { series, lags }
    }
}

#[derive(Debug, Clone)]
pub struct LaggedFit {
    /// `coeffs[target][regressor][lag - 1]`
    pub coeffs: Vec<Vec<Vec<f64>>>,
    /// `residuals[target]`, aligned with samples `start..n`
    pub residuals: Vec<Vec<f64>>,
    pub start: usize,
}

impl LaggedFit {
    /// Residual (co)variance between two targets, divisor = number of residuals.
    pub fn residual_cov(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.residuals[i], &self.residuals[j]);
        a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>() / a.len() as f64
    }
}

/// Regresses each target on the lagged regressors over samples `start..n`.
///
/// `start` must be at least the largest lag. No intercept is fitted.
pub fn fit_lagged(targets: &[&[f64]], regressors: &[Lagged<'_>], start: usize) -> Result<LaggedFit> {
    let n = targets.first().map(|t| t.len()).unwrap_or(0);
    let max_lag = regressors.iter().map(|r| r.lags).max().unwrap_or(0);
    if start < max_lag {
        return Err(GicaError::invalid("regression start precedes the largest lag"));
    }
    if targets.iter().any(|t| t.len() != n) || regressors.iter().any(|r| r.series.len() != n) {
        return Err(GicaError::invalid("regression series differ in length"));
    }
    let m: usize = regressors.iter().map(|r| r.lags).sum();
    if m == 0 {
        return Err(GicaError::invalid("no regressors"));
    }
    if n <= start + m {
        return Err(GicaError::TooShort {
            needed: start + m + 1,
            available: n,
        });
    }

    let mut xtx = DMatrix::<f64>::zeros(m, m);
    let mut xty: Vec<DVector<f64>> = vec![DVector::zeros(m); targets.len()];
    let mut row = vec![0.0; m];
    for t in start..n {
        fill_row(&mut row, regressors, t);
        for i in 0..m {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..m {
                xtx[(i, j)] += ri * row[j];
            }
            for (k, target) in targets.iter().enumerate() {
                xty[k][i] += ri * target[t];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            xtx[(i, j)] = xtx[(j, i)];
        }
    }

    if scaled_condition(&xtx) < RANK_TOL {
        return Err(GicaError::RankDeficient(
            "regressors are constant or collinear".into(),
        ));
    }

    let mut coeffs = Vec::with_capacity(targets.len());
    let mut residuals = Vec::with_capacity(targets.len());
    for (k, target) in targets.iter().enumerate() {
        let beta = lu_solve(xtx.clone(), &xty[k])
            .ok_or_else(|| GicaError::RankDeficient("normal equations are singular".into()))?;
        let mut res = Vec::with_capacity(n - start);
        for t in start..n {
            fill_row(&mut row, regressors, t);
            let pred: f64 = row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            res.push(target[t] - pred);
        }
        let mut per_reg = Vec::with_capacity(regressors.len());
        let mut off = 0;
        for r in regressors {
            per_reg.push(beta.as_slice()[off..off + r.lags].to_vec());
            off += r.lags;
        }
        coeffs.push(per_reg);
        residuals.push(res);
    }
    Ok(LaggedFit {
        coeffs,
        residuals,
        start,
    })
}

fn fill_row(row: &mut [f64], regressors: &[Lagged<'_>], t: usize) {
    let mut off = 0;
    for r in regressors {
        for k in 1..=r.lags {
            row[off + k - 1] = r.series[t - k];
        }
        off += r.lags;
    }
}
