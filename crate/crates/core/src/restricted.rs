//! Restricted models of the target derived analytically from the
//! autocovariance of the full process.
//!
//! * AR-on-Y: `Y_n = sum_{k<=q} b_yy,k Y_{n-k} + U_{y|y,n}` (used by GC and GI)
//! * X-on-Y:  `Y_n = sum_{k<=q} b_yx,k X_{n-k} + U_{y|x,n}` (used by GA; the
//!   residual variance uses all `q` lags, the GA transfer matrix the first `p`)
//!
//! Both are linear projections of `Y_n` onto a `q`-lag past; coefficients
//! solve the normal equations built from `Gamma_0 .. Gamma_q`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GicaError, Result};
use crate::linalg::lu_solve;
use crate::var::AutocovarianceSequence;

/// Truncation lag of the restricted models.
pub const DEFAULT_RESTRICTED_LAG: usize = 20;

const X: usize = 0;
const Y: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictedKind {
    ArOnY,
    XOnY,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedModel {
    pub kind: RestrictedKind,
    pub q: usize,
    pub coeffs: Vec<f64>,
    pub resid_var: f64,
}

/// Regression of `Y_n` on the past of Y (AR-on-Y).
pub fn restricted_ar(gammas: &AutocovarianceSequence, q: usize) -> Result<RestrictedModel> {
    project(gammas, q, Y, RestrictedKind::ArOnY)
}

/// Regression of `Y_n` on the past of X (X-on-Y).
pub fn restricted_x(gammas: &AutocovarianceSequence, q: usize) -> Result<RestrictedModel> {
    project(gammas, q, X, RestrictedKind::XOnY)
}

fn project(
    gammas: &AutocovarianceSequence,
    q: usize,
    source: usize,
    kind: RestrictedKind,
) -> Result<RestrictedModel> {
    if q == 0 {
        return Err(GicaError::invalid("restricted lag must be at least 1"));
    }
    if gammas.max_lag() < q {
        return Err(GicaError::invalid(format!(
            "autocovariance known up to lag {}, restricted lag {q} requested",
            gammas.max_lag()
        )));
    }
    // Sigma_past[i][j] = E[S_{n-1-i} S_{n-1-j}] = Gamma_{j-i}[s][s]
    let past = DMatrix::from_fn(q, q, |i, j| {
        gammas.cov(source, source, j as isize - i as isize)
    });
    debug_assert!((&past - past.transpose()).amax() <= 1e-12 * past.amax().max(1.0));
    // Sigma_{Y_n, past}[k] = E[Y_n S_{n-1-k}] = Gamma_{k+1}[y][s]
    let cross = DVector::from_fn(q, |k, _| gammas.cov(Y, source, k as isize + 1));

    let coeffs = lu_solve(past, &cross).ok_or_else(|| {
        GicaError::Singular(format!(
            "{q}x{q} covariance of the {} past",
            if source == Y { "target" } else { "driver" }
        ))
    })?;
    let var_y = gammas.cov(Y, Y, 0);
    let resid_var = var_y - cross.dot(&coeffs);
    if !(resid_var > 0.0) {
        return Err(GicaError::Singular(format!(
            "restricted residual variance {resid_var} is not positive"
        )));
    }
    Ok(RestrictedModel {
        kind,
        q,
        coeffs: coeffs.iter().copied().collect(),
        resid_var,
    })
}
