//! Transfer functions, spectra and the spectral GC / GI / GA measures.
//!
//! All computations run on normalized frequency `f = f_hz / fs` over the
//! one-sided range `[0, 0.5]`. The directed-coherence family reads only the
//! diagonal of the innovation covariance (strict causality).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{GicaError, Result};
use crate::linalg::spectral_radius;
use crate::restricted::{RestrictedKind, RestrictedModel};
use crate::var::{companion_of, BivariateVarModel};

pub type CMat2 = [[Complex64; 2]; 2];

/// Default number of grid points on `[0, 0.5]`.
pub const DEFAULT_GRID_POINTS: usize = 2049;

/// Uniform grid from 0 to 0.5 (normalized) inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    n_points: usize,
    fs: f64,
}

impl FrequencyGrid {
    pub fn new(n_points: usize, fs: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(GicaError::invalid("frequency grid needs at least 2 points"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(GicaError::invalid(format!("sampling frequency must be positive, got {fs}")));
        }
        Ok(Self { n_points, fs })
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Spacing in normalized frequency.
    pub fn step(&self) -> f64 {
        0.5 / (self.n_points - 1) as f64
    }

    pub fn normalized(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            0.5
        } else {
            0.5 * i as f64 / (self.n_points - 1) as f64
        }
    }

    pub fn hz(&self, i: usize) -> f64 {
        self.normalized(i) * self.fs
    }

    pub fn normalized_values(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.normalized(i)).collect()
    }

    pub fn hz_values(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.hz(i)).collect()
    }

    /// Index of the grid point closest to `f_hz`.
    pub fn nearest(&self, f_hz: f64) -> usize {
        let i = (f_hz / self.fs / self.step()).round();
        (i.max(0.0) as usize).min(self.n_points - 1)
    }
}

/// One real value per grid point for a named measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    pub name: String,
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
}

impl SpectralProfile {
    pub fn new(name: impl Into<String>, grid: FrequencyGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            name: name.into(),
            grid,
            values,
        }
    }

    /// `(frequency_hz, value)` of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        self.extremum(|a, b| a > b)
    }

    /// `(frequency_hz, value)` of the smallest value.
    pub fn argmin(&self) -> (f64, f64) {
        self.extremum(|a, b| a < b)
    }

    fn extremum(&self, better: impl Fn(f64, f64) -> bool) -> (f64, f64) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if better(v, self.values[best]) {
                best = i;
            }
        }
        (self.grid.hz(best), self.values[best])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `2 * integral` over the full band `[0, fs/2]`.
    pub fn full_band(&self) -> f64 {
        integrate_band(self, 0.0, self.grid.fs() / 2.0)
            .map(|b| b.integral)
            .unwrap_or(f64::NAN)
    }
}

fn unit_delays(f_norm: f64, lags: usize) -> Vec<Complex64> {
    // z^{-k} on the unit circle, k = 1..=lags
    let w = -2.0 * PI * f_norm;
    (1..=lags).map(|k| Complex64::from_polar(1.0, w * k as f64)).collect()
}

fn inverse2(m: CMat2) -> Option<CMat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if det.norm() <= 1e-14 * scale * scale {
        return None;
    }
    let inv = det.inv();
    Some([
        [m[1][1] * inv, -m[0][1] * inv],
        [-m[1][0] * inv, m[0][0] * inv],
    ])
}

/// `H(f) = [I - sum_k A_k e^{-j 2 pi f k}]^{-1}` at every grid point.
pub fn full_transfer(model: &BivariateVarModel, grid: &FrequencyGrid) -> Result<Vec<CMat2>> {
    model.check_stable()?;
    (0..grid.len())
        .map(|i| {
            let f = grid.normalized(i);
            let z = unit_delays(f, model.order());
            let mut m: CMat2 = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
            for (ak, zk) in model.coeffs().iter().zip(&z) {
                for r in 0..2 {
                    for c in 0..2 {
                        m[r][c] -= ak[r][c] * zk;
                    }
                }
            }
            inverse2(m).ok_or_else(|| {
                GicaError::Singular(format!("transfer matrix at normalized frequency {f}"))
            })
        })
        .collect()
}

/// Spectral radius of the mixed model that pairs the full X equation with
/// the X-on-Y restricted equation.
pub fn mixed_model_radius(model: &BivariateVarModel, rx: &RestrictedModel) -> f64 {
    let byx = byx_terms(model, rx);
    let a: Vec<_> = (0..model.order())
        .map(|k| {
            let row_x = model.coeffs()[k][0];
            [row_x, [byx.get(k).copied().unwrap_or(0.0), 0.0]]
        })
        .collect();
    spectral_radius(&companion_of(&a))
}

/// Restricted X coefficients entering `B_yx(z)`: the first `p` lags, where
/// `p` is the order of the full model.
pub fn byx_terms<'a>(model: &BivariateVarModel, rx: &'a RestrictedModel) -> &'a [f64] {
    &rx.coeffs[..rx.coeffs.len().min(model.order())]
}

/// `G(f) = [[1 - A_xx, -A_xy], [-B_yx, 1]]^{-1}` at every grid point, with
/// `B_yx` limited to [`byx_terms`].
///
/// Only the X row of `model` is used. Stability of the mixed model is not
/// enforced here; see [`mixed_model_radius`].
pub fn restricted_transfer_ga(
    model: &BivariateVarModel,
    rx: &RestrictedModel,
    grid: &FrequencyGrid,
) -> Result<Vec<CMat2>> {
    if rx.kind != RestrictedKind::XOnY {
        return Err(GicaError::invalid("GA transfer needs the X-on-Y restricted model"));
    }
    let byx = byx_terms(model, rx);
    let lags = model.order();
    (0..grid.len())
        .map(|i| {
            let f = grid.normalized(i);
            let z = unit_delays(f, lags);
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            let mut m: CMat2 = [[one, zero], [zero, one]];
            for (k, ak) in model.coeffs().iter().enumerate() {
                m[0][0] -= ak[0][0] * z[k];
                m[0][1] -= ak[0][1] * z[k];
            }
            for (k, b) in byx.iter().enumerate() {
                m[1][0] -= b * z[k];
            }
            inverse2(m).ok_or_else(|| {
                GicaError::Singular(format!("restricted transfer matrix at normalized frequency {f}"))
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PsdProfiles {
    pub p_x: SpectralProfile,
    pub p_y: SpectralProfile,
    /// `|P_xy|`
    pub cross: SpectralProfile,
}

fn psd_from(model: &BivariateVarModel, h: &[CMat2], grid: &FrequencyGrid) -> PsdProfiles {
    let s = model.sigma();
    let mut px = Vec::with_capacity(h.len());
    let mut py = Vec::with_capacity(h.len());
    let mut pc = Vec::with_capacity(h.len());
    for hf in h {
        // P = H Sigma H^*
        let mut hs = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                hs[r][c] = hf[r][0] * s[0][c] + hf[r][1] * s[1][c];
            }
        }
        let entry = |r: usize, c: usize| hs[r][0] * hf[c][0].conj() + hs[r][1] * hf[c][1].conj();
        px.push(entry(0, 0).re.max(0.0));
        py.push(entry(1, 1).re.max(0.0));
        pc.push(entry(0, 1).norm());
    }
    PsdProfiles {
        p_x: SpectralProfile::new("psd_x", *grid, px),
        p_y: SpectralProfile::new("psd_y", *grid, py),
        cross: SpectralProfile::new("psd_cross_abs", *grid, pc),
    }
}

/// Power spectra `P = H Sigma H^*` (full innovation covariance).
pub fn psd(model: &BivariateVarModel, grid: &FrequencyGrid) -> Result<PsdProfiles> {
    let h = full_transfer(model, grid)?;
    Ok(psd_from(model, &h, grid))
}

/// Causal and isolated parts of the target spectrum at each frequency:
/// `(sigma_x^2 |H_yx|^2, sigma_y^2 |H_yy|^2)`.
fn target_parts(model: &BivariateVarModel, h: &[CMat2]) -> Vec<(f64, f64)> {
    h.iter()
        .map(|hf| (model.var_x() * hf[1][0].norm_sqr(), model.var_y() * hf[1][1].norm_sqr()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct DirectedCoherence {
    /// `|gamma_YX|^2`, share of the target spectrum from the driver
    pub from_driver: SpectralProfile,
    /// `|gamma_YY|^2`, share of the target spectrum from the target itself
    pub from_target: SpectralProfile,
}

fn dc_from(model: &BivariateVarModel, h: &[CMat2], grid: &FrequencyGrid) -> Result<DirectedCoherence> {
    let mut yx = Vec::with_capacity(h.len());
    let mut yy = Vec::with_capacity(h.len());
    for (i, (causal, isolated)) in target_parts(model, h).into_iter().enumerate() {
        let total = causal + isolated;
        if !(total > 0.0) {
            return Err(GicaError::Singular(format!(
                "target spectrum vanishes at {} Hz",
                grid.hz(i)
            )));
        }
        yx.push(causal / total);
        yy.push(isolated / total);
    }
    Ok(DirectedCoherence {
        from_driver: SpectralProfile::new("dc_yx", *grid, yx),
        from_target: SpectralProfile::new("dc_yy", *grid, yy),
    })
}

/// Squared directed coherences from driver and from target.
pub fn directed_coherence(model: &BivariateVarModel, grid: &FrequencyGrid) -> Result<DirectedCoherence> {
    let h = full_transfer(model, grid)?;
    dc_from(model, &h, grid)
}

fn gc_from(model: &BivariateVarModel, h: &[CMat2], grid: &FrequencyGrid) -> SpectralProfile {
    let values = target_parts(model, h)
        .into_iter()
        .map(|(causal, isolated)| (causal / isolated).ln_1p())
        .collect();
    SpectralProfile::new("gc", *grid, values)
}

fn gi_from(model: &BivariateVarModel, h: &[CMat2], grid: &FrequencyGrid) -> SpectralProfile {
    let values = target_parts(model, h)
        .into_iter()
        .map(|(causal, isolated)| {
            if causal == 0.0 {
                f64::INFINITY
            } else {
                (isolated / causal).ln_1p()
            }
        })
        .collect();
    SpectralProfile::new("gi", *grid, values)
}

/// Spectral GC, `ln(P_Y / (sigma_y^2 |H_yy|^2)) = -ln(1 - |gamma_YX|^2)`.
pub fn spectral_gc(model: &BivariateVarModel, grid: &FrequencyGrid) -> Result<SpectralProfile> {
    let h = full_transfer(model, grid)?;
    Ok(gc_from(model, &h, grid))
}

/// Spectral GI, `ln(P_Y / (sigma_x^2 |H_yx|^2)) = -ln(1 - |gamma_YY|^2)`.
///
/// `+inf` wherever the causal part of the target spectrum is exactly zero.
pub fn spectral_gi(model: &BivariateVarModel, grid: &FrequencyGrid) -> Result<SpectralProfile> {
    let h = full_transfer(model, grid)?;
    Ok(gi_from(model, &h, grid))
}

#[derive(Debug, Clone)]
pub struct GaProfiles {
    /// `ln(|H_yy|^2 / |G_yy|^2)`, integrates to zero
    pub a_bar: SpectralProfile,
    /// `A_Y + a_bar`
    pub a: SpectralProfile,
    /// time-domain GA, `ln(sigma_{y|x}^2 / sigma_{y|xy}^2)`
    pub a_y: f64,
    pub h_yy_sq: SpectralProfile,
    pub g_yy_sq: SpectralProfile,
}

fn ga_from(
    model: &BivariateVarModel,
    rx: &RestrictedModel,
    h: &[CMat2],
    g: &[CMat2],
    grid: &FrequencyGrid,
) -> Result<GaProfiles> {
    let a_y = log_ratio(rx.resid_var, model.var_y())?;
    let hyy: Vec<f64> = h.iter().map(|m| m[1][1].norm_sqr()).collect();
    let gyy: Vec<f64> = g.iter().map(|m| m[1][1].norm_sqr()).collect();
    let a_bar: Vec<f64> = hyy.iter().zip(&gyy).map(|(h, g)| (h / g).ln()).collect();
    let a = a_bar.iter().map(|v| a_y + v).collect();
    Ok(GaProfiles {
        a_bar: SpectralProfile::new("ga_bar", *grid, a_bar),
        a: SpectralProfile::new("ga", *grid, a),
        a_y,
        h_yy_sq: SpectralProfile::new("hyy_sq", *grid, hyy),
        g_yy_sq: SpectralProfile::new("gyy_sq", *grid, gyy),
    })
}

/// Spectral GA from the full model and its X-on-Y restriction.
pub fn spectral_ga(
    model: &BivariateVarModel,
    rx: &RestrictedModel,
    grid: &FrequencyGrid,
) -> Result<GaProfiles> {
    let h = full_transfer(model, grid)?;
    let g = restricted_transfer_ga(model, rx, grid)?;
    ga_from(model, rx, &h, &g, grid)
}

fn log_ratio(num: f64, den: f64) -> Result<f64> {
    if !(num > 0.0 && den > 0.0) {
        return Err(GicaError::invalid(format!(
            "variances must be positive, got {num} and {den}"
        )));
    }
    Ok((num / den).ln())
}

/// Time-domain GC, GI and GA in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeDomain {
    pub f_xy: f64,
    pub f_y: f64,
    pub a_y: f64,
}

/// `F_xy = ln(s_y|y / s_y|xy)`, `A_y = ln(s_y|x / s_y|xy)`, and `F_y` as the
/// full-band integral of the GI profile.
pub fn time_domain_measures(
    var_full: f64,
    var_ar: f64,
    var_x: f64,
    gi: &SpectralProfile,
) -> Result<TimeDomain> {
    Ok(TimeDomain {
        f_xy: log_ratio(var_ar, var_full)?,
        f_y: integrate_band(gi, 0.0, gi.grid.fs() / 2.0)?.integral,
        a_y: log_ratio(var_x, var_full)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandIntegral {
    /// `2 * integral` over the band in normalized frequency, nats
    pub integral: f64,
    /// `integral / (2 * bandwidth)`, nats
    pub mean: f64,
}

/// Trapezoidal integration of `profile` over `[f_lo, f_hi]` Hz.
///
/// Band edges between grid points use the piecewise-linear interpolant, so
/// the full band reproduces the plain trapezoid rule on the grid.
pub fn integrate_band(profile: &SpectralProfile, f_lo: f64, f_hi: f64) -> Result<BandIntegral> {
    let grid = &profile.grid;
    let nyquist = grid.fs() / 2.0;
    if !(f_lo >= 0.0 && f_hi <= nyquist * (1.0 + 1e-12)) {
        return Err(GicaError::invalid(format!(
            "band [{f_lo}, {f_hi}] Hz outside [0, {nyquist}] Hz"
        )));
    }
    if !(f_lo < f_hi) {
        return Err(GicaError::invalid(format!("empty or inverted band [{f_lo}, {f_hi}] Hz")));
    }
    let lo = f_lo / grid.fs();
    let hi = (f_hi / grid.fs()).min(0.5);
    let step = grid.step();
    let v = &profile.values;
    let at = |f: f64| -> f64 {
        let pos = f / step;
        let snapped = pos.round();
        if (pos - snapped).abs() < 1e-9 {
            return v[(snapped as usize).min(v.len() - 1)];
        }
        let i = (pos.floor() as usize).min(v.len() - 2);
        let t = pos - i as f64;
        if t == 0.0 {
            v[i]
        } else if t == 1.0 {
            v[i + 1]
        } else {
            v[i] + t * (v[i + 1] - v[i])
        }
    };

    let first = (lo / step).floor() as usize + 1;
    let last = ((hi / step).ceil() as usize).min(v.len() - 1);
    let mut knots: Vec<(f64, f64)> = vec![(lo, at(lo))];
    for i in first..last {
        let f = grid.normalized(i);
        if f > lo + 1e-9 * step && f < hi - 1e-9 * step {
            knots.push((f, v[i]));
        }
    }
    knots.push((hi, at(hi)));

    let mut sum = 0.0;
    for w in knots.windows(2) {
        let ((f0, v0), (f1, v1)) = (w[0], w[1]);
        if v0 == f64::INFINITY || v1 == f64::INFINITY {
            sum = f64::INFINITY;
            break;
        }
        sum += 0.5 * (f1 - f0) * (v0 + v1);
    }
    let integral = 2.0 * sum;
    Ok(BandIntegral {
        integral,
        mean: integral / (2.0 * (hi - lo)),
    })
}

/// Every spectral quantity of one model, computed from a single pass of
/// transfer-function evaluations.
#[derive(Debug, Clone)]
pub struct Spectra {
    pub psd: PsdProfiles,
    pub dc: DirectedCoherence,
    pub gc: SpectralProfile,
    pub gi: SpectralProfile,
    pub ga: GaProfiles,
}

/// Computes all profiles; `model` should already be strictly causal.
pub fn all_spectra(
    model: &BivariateVarModel,
    rx: &RestrictedModel,
    grid: &FrequencyGrid,
) -> Result<Spectra> {
    let h = full_transfer(model, grid)?;
    let g = restricted_transfer_ga(model, rx, grid)?;
    Ok(Spectra {
        psd: psd_from(model, &h, grid),
        dc: dc_from(model, &h, grid)?,
        gc: gc_from(model, &h, grid),
        gi: gi_from(model, &h, grid),
        ga: ga_from(model, rx, &h, &g, grid)?,
    })
}
