//! The full measure pipeline on a given model, and its report.

use serde::{Deserialize, Serialize};

use crate::error::{GicaError, Result};
use crate::restricted::{restricted_ar, restricted_x, RestrictedModel};
use crate::serde_nats;
use crate::spectral::{
    all_spectra, integrate_band, mixed_model_radius, time_domain_measures, FrequencyGrid,
    SpectralProfile, Spectra, TimeDomain,
};
use crate::surrogate::SignificanceVerdict;
use crate::var::{compute_autocovariance, AutocovarianceSequence, BivariateVarModel};

pub const REPORT_SCHEMA: u32 = 1;

/// Innovation correlation above which strict causality is questioned.
pub const RESIDUAL_CORRELATION_WARN: f64 = 0.2;
/// Relative shift in restricted variance between `q` and `2q` that
/// triggers a truncation warning.
pub const TRUNCATION_WARN: f64 = 1e-4;
/// Disagreement between full-band integrals and time-domain values, nats.
pub const CONSISTENCY_WARN: f64 = 1e-3;

/// Name used for the time-domain (full-band) values.
pub const FULL_BAND: &str = "full";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Gc,
    Gi,
    Ga,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Gc, Measure::Gi, Measure::Ga];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Gc => "gc",
            Measure::Gi => "gi",
            Measure::Ga => "ga",
        }
    }
}

/// A named frequency band in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub name: String,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Band {
    pub fn new(name: impl Into<String>, f_lo: f64, f_hi: f64) -> Self {
        Self {
            name: name.into(),
            f_lo,
            f_hi,
        }
    }

    /// Very-low-frequency band of cerebrovascular variability.
    pub fn vlf() -> Self {
        Self::new("VLF", 0.02, 0.07)
    }

    /// Low-frequency band of cerebrovascular variability.
    pub fn lf() -> Self {
        Self::new("LF", 0.07, 0.2)
    }

    pub fn defaults() -> Vec<Band> {
        vec![Self::vlf(), Self::lf()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureTriple {
    #[serde(with = "serde_nats")]
    pub gc: f64,
    #[serde(with = "serde_nats")]
    pub gi: f64,
    #[serde(with = "serde_nats")]
    pub ga: f64,
}

impl MeasureTriple {
    pub fn get(&self, m: Measure) -> f64 {
        match m {
            Measure::Gc => self.gc,
            Measure::Gi => self.gi,
            Measure::Ga => self.ga,
        }
    }
}

/// Band means (default display) plus the band integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandValues {
    pub name: String,
    pub f_lo: f64,
    pub f_hi: f64,
    #[serde(with = "serde_nats")]
    pub gc: f64,
    #[serde(with = "serde_nats")]
    pub gi: f64,
    #[serde(with = "serde_nats")]
    pub ga: f64,
    pub integral: MeasureTriple,
}

impl BandValues {
    pub fn mean(&self, m: Measure) -> f64 {
        match m {
            Measure::Gc => self.gc,
            Measure::Gi => self.gi,
            Measure::Ga => self.ga,
        }
    }
}

/// Bookkeeping about how the analysed model was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisInfo {
    pub n: usize,
    pub fs: f64,
    pub order: usize,
    pub order_method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aic: Option<Vec<f64>>,
    pub q: usize,
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detrend_cutoff_hz: Option<f64>,
    pub residual_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub schema: u32,
    #[serde(rename = "F_xy", with = "serde_nats")]
    pub f_xy: f64,
    #[serde(rename = "F_y", with = "serde_nats")]
    pub f_y: f64,
    #[serde(rename = "A_y", with = "serde_nats")]
    pub a_y: f64,
    /// Full-band integrals of the spectral profiles.
    pub full_band: MeasureTriple,
    pub bands: Vec<BandValues>,
    #[serde(default)]
    pub significance: Vec<SignificanceVerdict>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisInfo>,
}

impl MeasureReport {
    /// Time-domain value for [`FULL_BAND`], band mean otherwise.
    pub fn value(&self, measure: Measure, band: &str) -> Option<f64> {
        if band == FULL_BAND {
            return Some(match measure {
                Measure::Gc => self.f_xy,
                Measure::Gi => self.f_y,
                Measure::Ga => self.a_y,
            });
        }
        self.band(band).map(|b| b.mean(measure))
    }

    pub fn band(&self, name: &str) -> Option<&BandValues> {
        self.bands.iter().find(|b| b.name == name)
    }

    /// `FULL_BAND` followed by the band names in report order.
    pub fn band_names(&self) -> Vec<String> {
        std::iter::once(FULL_BAND.to_string())
            .chain(self.bands.iter().map(|b| b.name.clone()))
            .collect()
    }
}

/// Everything derived from one full model.
#[derive(Debug, Clone)]
pub struct MeasureSet {
    /// The strictly causal model the measures were computed from.
    pub model: BivariateVarModel,
    pub residual_correlation: f64,
    pub q: usize,
    pub grid: FrequencyGrid,
    pub autocov: AutocovarianceSequence,
    pub restricted_ar: RestrictedModel,
    pub restricted_x: RestrictedModel,
    pub spectra: Spectra,
    pub time: TimeDomain,
    pub warnings: Vec<String>,
}

/// Runs restricted-model identification and every spectral measure.
///
/// The innovation covariance is reduced to its diagonal first, so the
/// autocovariance, the restricted models and the spectra all describe the
/// same strictly causal process.
pub fn analyze_model(model: &BivariateVarModel, q: usize, grid: &FrequencyGrid) -> Result<MeasureSet> {
    if q == 0 {
        return Err(GicaError::invalid("restricted lag must be at least 1"));
    }
    let mut warnings = Vec::new();
    let rho = model.residual_correlation();
    if rho.abs() > RESIDUAL_CORRELATION_WARN {
        warnings.push(format!(
            "innovation correlation {rho:.3} exceeds {RESIDUAL_CORRELATION_WARN}; \
             measures assume strictly causal (uncorrelated) innovations"
        ));
    }
    let causal = model.strictly_causal();
    let autocov = compute_autocovariance(&causal, 2 * q)?;
    let ar = restricted_ar(&autocov, q)?;
    let rx = restricted_x(&autocov, q)?;

    let ar2 = restricted_ar(&autocov, 2 * q)?;
    let rx2 = restricted_x(&autocov, 2 * q)?;
    for (short, long, label) in [(&ar, &ar2, "AR"), (&rx, &rx2, "X")] {
        let shift = (short.resid_var - long.resid_var).abs() / long.resid_var;
        if shift > TRUNCATION_WARN {
            warnings.push(format!(
                "restricted {label} variance moves by {shift:.2e} (relative) between q={q} and q={}; \
                 consider a larger q",
                2 * q
            ));
        }
    }

    let radius = mixed_model_radius(&causal, &rx);
    if radius >= 1.0 {
        warnings.push(format!(
            "model pairing the driver equation with the X-on-Y restriction is unstable \
             (spectral radius {radius:.4}); spectral GA need not integrate to A_y"
        ));
    }

    let spectra = all_spectra(&causal, &rx, grid)?;
    let time = time_domain_measures(causal.var_y(), ar.resid_var, rx.resid_var, &spectra.gi)?;

    let gc_int = spectra.gc.full_band();
    if (gc_int - time.f_xy).abs() > CONSISTENCY_WARN {
        warnings.push(format!(
            "full-band GC integral {gc_int:.5} differs from F_xy {:.5} by more than {CONSISTENCY_WARN}",
            time.f_xy
        ));
    }
    let ga_int = spectra.ga.a.full_band();
    if (ga_int - time.a_y).abs() > CONSISTENCY_WARN {
        warnings.push(format!(
            "full-band GA integral {ga_int:.5} differs from A_y {:.5} by more than {CONSISTENCY_WARN}",
            time.a_y
        ));
    }

    Ok(MeasureSet {
        model: causal,
        residual_correlation: rho,
        q,
        grid: *grid,
        autocov,
        restricted_ar: ar,
        restricted_x: rx,
        spectra,
        time,
        warnings,
    })
}

impl MeasureSet {
    pub fn profile(&self, m: Measure) -> &SpectralProfile {
        match m {
            Measure::Gc => &self.spectra.gc,
            Measure::Gi => &self.spectra.gi,
            Measure::Ga => &self.spectra.ga.a,
        }
    }

    pub fn band(&self, band: &Band) -> Result<BandValues> {
        let mut means = [0.0; 3];
        let mut ints = [0.0; 3];
        for (k, m) in Measure::ALL.iter().enumerate() {
            let b = integrate_band(self.profile(*m), band.f_lo, band.f_hi)?;
            means[k] = b.mean;
            ints[k] = b.integral;
        }
        Ok(BandValues {
            name: band.name.clone(),
            f_lo: band.f_lo,
            f_hi: band.f_hi,
            gc: means[0],
            gi: means[1],
            ga: means[2],
            integral: MeasureTriple {
                gc: ints[0],
                gi: ints[1],
                ga: ints[2],
            },
        })
    }

    pub fn report(&self, bands: &[Band]) -> Result<MeasureReport> {
        let mut values: Vec<BandValues> = Vec::with_capacity(bands.len());
        for b in bands {
            if b.name == FULL_BAND || values.iter().any(|v| v.name == b.name) {
                return Err(GicaError::invalid(format!("duplicate or reserved band name {:?}", b.name)));
            }
            values.push(self.band(b)?);
        }
        Ok(MeasureReport {
            schema: REPORT_SCHEMA,
            f_xy: self.time.f_xy,
            f_y: self.time.f_y,
            a_y: self.time.a_y,
            full_band: MeasureTriple {
                gc: self.spectra.gc.full_band(),
                gi: self.spectra.gi.full_band(),
                ga: self.spectra.ga.a.full_band(),
            },
            bands: values,
            significance: Vec::new(),
            warnings: self.warnings.clone(),
            analysis: None,
        })
    }
}
