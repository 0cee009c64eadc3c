//! Full bivariate AR model: identification, order selection and exact
//! autocovariance.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GicaError, Result};
use crate::linalg::{spectral_radius, Mat2};
use crate::lyapunov::solve_discrete_lyapunov;
use crate::regression::{fit_lagged, Lagged};
use crate::timeseries::TimeSeriesPair;

/// Default maximum order scanned by [`select_order_aic`].
pub const DEFAULT_MAX_ORDER: usize = 14;

/// `S_n = sum_k A_k S_{n-k} + U_n` with `S = [X, Y]` and `cov(U) = Sigma`.
///
/// Row 0 of each `A_k` holds `a_xx,k`, `a_xy,k`; row 1 holds `a_yx,k`, `a_yy,k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct BivariateVarModel {
    a: Vec<Mat2>,
    sigma: Mat2,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    p: usize,
    #[serde(rename = "A")]
    a: Vec<Mat2>,
    #[serde(rename = "Sigma")]
    sigma: Mat2,
}

impl TryFrom<RawModel> for BivariateVarModel {
    type Error = GicaError;

    fn try_from(raw: RawModel) -> Result<Self> {
        if raw.p != raw.a.len() {
            return Err(GicaError::invalid(format!(
                "model order {} does not match {} coefficient matrices",
                raw.p,
                raw.a.len()
            )));
        }
        BivariateVarModel::new(raw.a, raw.sigma)
    }
}

impl From<BivariateVarModel> for RawModel {
    fn from(m: BivariateVarModel) -> Self {
        RawModel {
            p: m.a.len(),
            a: m.a,
            sigma: m.sigma,
        }
    }
}

impl BivariateVarModel {
    pub fn new(a: Vec<Mat2>, sigma: Mat2) -> Result<Self> {
        if a.is_empty() {
            return Err(GicaError::invalid("model order must be at least 1"));
        }
        if a.iter().flatten().flatten().chain(sigma.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(GicaError::invalid("non-finite model parameter"));
        }
        let [[sxx, sxy], [syx, syy]] = sigma;
        if !(sxx > 0.0 && syy > 0.0) {
            return Err(GicaError::invalid("residual variances must be positive"));
        }
        if (sxy - syx).abs() > 1e-12 * (sxx * syy).sqrt() {
            return Err(GicaError::invalid("residual covariance must be symmetric"));
        }
        if sxx * syy - sxy * syx < -1e-12 * sxx * syy {
            return Err(GicaError::invalid("residual covariance must be positive semi-definite"));
        }
        Ok(Self { a, sigma })
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// Coefficient matrices `A_1 .. A_p`.
    pub fn coeffs(&self) -> &[Mat2] {
        &self.a
    }

    pub fn sigma(&self) -> Mat2 {
        self.sigma
    }

    /// `sigma^2_{x|xy}`
    pub fn var_x(&self) -> f64 {
        self.sigma[0][0]
    }

    /// `sigma^2_{y|xy}`
    pub fn var_y(&self) -> f64 {
        self.sigma[1][1]
    }

    /// Correlation between the two innovations.
    pub fn residual_correlation(&self) -> f64 {
        self.sigma[0][1] / (self.sigma[0][0] * self.sigma[1][1]).sqrt()
    }

    /// Same dynamics with the off-diagonal innovation covariance dropped.
    pub fn strictly_causal(&self) -> Self {
        let mut m = self.clone();
        m.sigma[0][1] = 0.0;
        m.sigma[1][0] = 0.0;
        m
    }

    /// Lag-1 companion matrix of size `2p x 2p`.
    pub fn companion(&self) -> DMatrix<f64> {
        companion_of(&self.a)
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.companion())
    }

    pub fn check_stable(&self) -> Result<()> {
        let radius = self.spectral_radius();
        if radius < 1.0 {
            Ok(())
        } else {
            Err(GicaError::Unstable { radius })
        }
    }
}

pub(crate) fn companion_of(a: &[Mat2]) -> DMatrix<f64> {
    let p = a.len();
    let dim = 2 * p;
    let mut c = DMatrix::zeros(dim, dim);
    for (k, ak) in a.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                c[(i, 2 * k + j)] = ak[i][j];
            }
        }
    }
    for i in 2..dim {
        c[(i, i - 2)] = 1.0;
    }
    c
}

/// AR(2) coefficients of a complex-conjugate pole pair with modulus `rho`
/// at normalized frequency `f_norm`.
pub fn poles_to_ar_coeffs(rho: f64, f_norm: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&rho) {
        return Err(GicaError::invalid(format!(
            "pole modulus must lie in [0, 1), got {rho}"
        )));
    }
    if !(0.0..=0.5).contains(&f_norm) {
        return Err(GicaError::invalid(format!(
            "normalized frequency must lie in [0, 0.5], got {f_norm}"
        )));
    }
    Ok((2.0 * rho * (2.0 * PI * f_norm).cos(), -rho * rho))
}

/// Vector least-squares fit of order `p`.
///
/// Residuals cover samples `p+1 .. N`; `Sigma` uses divisor `N - p`.
pub fn fit_var(pair: &TimeSeriesPair, p: usize) -> Result<BivariateVarModel> {
    if p == 0 {
        return Err(GicaError::invalid("model order must be at least 1"));
    }
    let n = pair.len();
    let needed = 4 * p + 3;
    if n < needed {
        return Err(GicaError::TooShort {
            needed,
            available: n,
        });
    }
    let (x, y) = (pair.x(), pair.y());
    let fit = fit_lagged(&[x, y], &[Lagged::new(x, p), Lagged::new(y, p)], p)?;
    let a = (0..p)
        .map(|k| {
            [
                [fit.coeffs[0][0][k], fit.coeffs[0][1][k]],
                [fit.coeffs[1][0][k], fit.coeffs[1][1][k]],
            ]
        })
        .collect();
    let cxy = fit.residual_cov(0, 1);
    let sigma = [[fit.residual_cov(0, 0), cxy], [cxy, fit.residual_cov(1, 1)]];
    BivariateVarModel::new(a, sigma)
}

/// Multivariate AIC, `N ln det(Sigma_p) + 2 * 4p`, for `p = 1 ..= p_max`.
pub fn aic_profile(pair: &TimeSeriesPair, p_max: usize) -> Result<Vec<f64>> {
    if p_max == 0 {
        return Err(GicaError::invalid("maximum scanned order must be at least 1"));
    }
    let n = pair.len() as f64;
    (1..=p_max)
        .map(|p| {
            let s = fit_var(pair, p)?.sigma();
            let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
            Ok(n * det.ln() + 2.0 * 4.0 * p as f64)
        })
        .collect()
}

/// Order minimizing the AIC; ties go to the smaller order.
pub fn select_order_aic(pair: &TimeSeriesPair, p_max: usize) -> Result<usize> {
    let aic = aic_profile(pair, p_max)?;
    let mut best = 0;
    for (i, v) in aic.iter().enumerate() {
        if *v < aic[best] {
            best = i;
        }
    }
    Ok(best + 1)
}

/// `Gamma_k = E[S_n S_{n-k}^T]` for `k = 0 ..= q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovarianceSequence {
    gammas: Vec<Mat2>,
}

impl AutocovarianceSequence {
    pub fn new(gammas: Vec<Mat2>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(GicaError::invalid("autocovariance sequence is empty"));
        }
        Ok(Self { gammas })
    }

    pub fn max_lag(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn gamma(&self, k: usize) -> Mat2 {
        self.gammas[k]
    }

    pub fn gammas(&self) -> &[Mat2] {
        &self.gammas
    }

    /// `E[S_i,n S_j,n-lag]` for any signed lag within range.
    pub fn cov(&self, i: usize, j: usize, lag: isize) -> f64 {
        if lag >= 0 {
            self.gammas[lag as usize][i][j]
        } else {
            self.gammas[(-lag) as usize][j][i]
        }
    }
}

/// Exact autocovariance of a stable model up to lag `q`.
///
/// Lags below `p` come from the discrete Lyapunov equation of the companion
/// form; higher lags follow the Yule-Walker recursion.
pub fn compute_autocovariance(model: &BivariateVarModel, q: usize) -> Result<AutocovarianceSequence> {
    model.check_stable()?;
    let p = model.order();
    let dim = 2 * p;
    let companion = model.companion();
    let mut xi = DMatrix::zeros(dim, dim);
    for i in 0..2 {
        for j in 0..2 {
            xi[(i, j)] = model.sigma[i][j];
        }
    }
    let psi = solve_discrete_lyapunov(&companion, &xi)?;

    let upto = q.max(p - 1);
    let mut gammas: Vec<Mat2> = Vec::with_capacity(upto + 1);
    for k in 0..p {
        gammas.push([
            [psi[(0, 2 * k)], psi[(0, 2 * k + 1)]],
            [psi[(1, 2 * k)], psi[(1, 2 * k + 1)]],
        ]);
    }
    for k in p..=upto {
        let mut g = [[0.0; 2]; 2];
        for (l, al) in model.a.iter().enumerate() {
            let prev = gammas[k - l - 1];
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] += al[i][0] * prev[0][j] + al[i][1] * prev[1][j];
                }
            }
        }
        gammas.push(g);
    }
    gammas.truncate(q + 1);
    AutocovarianceSequence::new(gammas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, SimSpec, System};
    use approx::assert_abs_diff_eq;

    fn ar1_in_y(a: f64) -> BivariateVarModel {
        BivariateVarModel::new(vec![[[0.0, 0.0], [0.0, a]]], [[1.0, 0.0], [0.0, 1.0]]).unwrap()
    }

    fn open_loop(b: f64, c: f64, n: usize, seed: u64) -> TimeSeriesPair {
        simulate(&SimSpec::new(System::OpenLoop { b, c }, n, seed)).unwrap()
    }

    #[test]
    fn pole_rule_examples() {
        let (a1, a2) = poles_to_ar_coeffs(0.9, 0.3).unwrap();
        assert_abs_diff_eq!(a1, -0.5562, epsilon = 5e-5);
        assert_abs_diff_eq!(a2, -0.81, epsilon = 1e-15);
        assert_eq!(poles_to_ar_coeffs(0.0, 0.17).unwrap(), (0.0, -0.0));
        let (a1, a2) = poles_to_ar_coeffs(0.8, 0.1).unwrap();
        assert_abs_diff_eq!(a1, 1.2944, epsilon = 5e-5);
        assert_abs_diff_eq!(a2, -0.64, epsilon = 1e-15);
        assert!(poles_to_ar_coeffs(1.0, 0.1).is_err());
    }

    #[test]
    fn json_envelope_round_trip() {
        let m = BivariateVarModel::new(
            vec![[[0.1, -0.2], [0.3, 0.4]], [[0.01, 0.0], [0.0, -0.05]]],
            [[1.5, 0.1], [0.1, 0.7]],
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"p\":2") && s.contains("\"Sigma\""));
        let back: BivariateVarModel = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let bad = s.replace("\"p\":2", "\"p\":3");
        assert!(serde_json::from_str::<BivariateVarModel>(&bad).is_err());
    }

    #[test]
    fn white_noise_autocovariance() {
        let m = BivariateVarModel::new(vec![[[0.0; 2]; 2]], [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let g = compute_autocovariance(&m, 5).unwrap();
        assert_eq!(g.max_lag(), 5);
        assert_abs_diff_eq!(g.gamma(0)[0][0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.gamma(0)[1][1], 1.0, epsilon = 1e-14);
        for k in 1..=5 {
            assert!(g.gamma(k).iter().flatten().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn ar1_autocovariance_closed_form() {
        let g = compute_autocovariance(&ar1_in_y(0.5), 10).unwrap();
        for k in 0..=10 {
            let want = 4.0 / 3.0 * 0.5f64.powi(k as i32);
            assert_abs_diff_eq!(g.gamma(k)[1][1], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn unstable_model_fails_loudly() {
        let m = ar1_in_y(1.01);
        assert!(matches!(compute_autocovariance(&m, 5), Err(GicaError::Unstable { .. })));
    }

    #[test]
    fn autocovariance_decays_and_obeys_recursion() {
        let m = crate::sim::System::OpenLoop { b: 1.0, c: 0.5 }.bivariate_model().unwrap();
        let g = compute_autocovariance(&m, 20).unwrap();
        let norm = |a: Mat2| a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm(g.gamma(20)) < norm(g.gamma(0)));
        for k in 2..=20 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut rhs = 0.0;
                    for (l, al) in m.coeffs().iter().enumerate() {
                        let prev = g.gamma(k - l - 1);
                        rhs += al[i][0] * prev[0][j] + al[i][1] * prev[1][j];
                    }
                    assert!((g.gamma(k)[i][j] - rhs).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn autocovariance_matches_long_realization() {
        let m = System::OpenLoop { b: 1.0, c: 0.5 }.bivariate_model().unwrap();
        let g = compute_autocovariance(&m, 5).unwrap();
        let pair = open_loop(1.0, 0.5, 1_000_000, 2024);
        let s = [pair.x(), pair.y()];
        let n = pair.len();
        for k in 0..=5 {
            for i in 0..2 {
                for j in 0..2 {
                    let emp: f64 =
                        (k..n).map(|t| s[i][t] * s[j][t - k]).sum::<f64>() / (n - k) as f64;
                    let exact = g.gamma(k)[i][j];
                    // relative to the lag-0 scale: some lags are near zero
                    let scale = (g.gamma(0)[i][i] * g.gamma(0)[j][j]).sqrt();
                    assert!(
                        (emp - exact).abs() < 0.02 * exact.abs().max(scale * 0.25),
                        "k={k} ({i},{j}) emp {emp} exact {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn fit_on_white_noise() {
        let pair = open_loop(0.0, 0.0, 10_000, 5);
        // replace X with a white series: open loop X is an oscillator
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(77);
        let x: Vec<f64> = (0..pair.len())
            .map(|_| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
        let pair = TimeSeriesPair::new(x, pair.y().to_vec(), 1.0).unwrap();
        let m = fit_var(&pair, 2).unwrap();
        assert!(m.coeffs().iter().flatten().flatten().all(|v| v.abs() < 0.05));
        assert!((0.9..=1.1).contains(&m.var_x()) && (0.9..=1.1).contains(&m.var_y()));
    }

    #[test]
    fn fit_recovers_open_loop_coefficients() {
        let truth = System::OpenLoop { b: 1.0, c: 0.5 }.bivariate_model().unwrap();
        let m = fit_var(&open_loop(1.0, 0.5, 100_000, 9), 2).unwrap();
        for (a, b) in m.coeffs().iter().flatten().flatten().zip(truth.coeffs().iter().flatten().flatten()) {
            assert!((a - b).abs() < 0.02, "{a} vs {b}");
        }
        assert_abs_diff_eq!(m.coeffs()[0][1][0], -0.5, epsilon = 0.02);
    }

    #[test]
    fn fit_error_shrinks_with_length() {
        let truth = System::OpenLoop { b: 1.0, c: 0.5 }.bivariate_model().unwrap();
        let err = |n: usize| -> f64 {
            (0..5u64)
                .map(|seed| {
                    let m = fit_var(&open_loop(1.0, 0.5, n, 100 + seed), 2).unwrap();
                    m.coeffs()
                        .iter()
                        .flatten()
                        .flatten()
                        .zip(truth.coeffs().iter().flatten().flatten())
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                })
                .sum()
        };
        assert!(err(100_000) < err(10_000));
    }

    #[test]
    fn constant_driver_is_rank_deficient() {
        let pair = open_loop(1.0, 0.0, 500, 3);
        let flat = TimeSeriesPair::new(vec![2.5; 500], pair.y().to_vec(), 1.0).unwrap();
        let err = fit_var(&flat, 2).unwrap_err();
        assert!(err.to_string().contains("rank-deficient"));
        let zero = TimeSeriesPair::new(vec![0.0; 500], pair.y().to_vec(), 1.0).unwrap();
        assert!(matches!(fit_var(&zero, 1), Err(GicaError::RankDeficient(_))));
    }

    #[test]
    fn fit_needs_enough_rows() {
        let pair = open_loop(1.0, 0.5, 10, 3);
        assert!(matches!(fit_var(&pair, 2), Err(GicaError::TooShort { .. })));
    }

    #[test]
    fn aic_rejects_zero_max_order() {
        let pair = open_loop(1.0, 0.5, 500, 3);
        assert!(select_order_aic(&pair, 0).is_err());
    }

    #[test]
    fn aic_penalty_structure() {
        let pair = open_loop(1.0, 0.5, 5000, 31);
        let aic = aic_profile(&pair, 8).unwrap();
        let min = aic.iter().cloned().fold(f64::INFINITY, f64::min);
        // true order 2: over-parameterizing by dp costs at most the penalty 8 dp
        let chosen = select_order_aic(&pair, 8).unwrap();
        assert!(chosen >= 2);
        assert!(aic[1] - min <= 8.0 * (chosen as f64 - 2.0) + 1e-9);
    }
}
