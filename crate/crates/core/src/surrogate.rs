//! Model-based bootstrap surrogates under the null hypotheses of no
//! coupling (H1) and no internal target dynamics (H2), and the resulting
//! significance verdicts.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GicaError, Result};
use crate::linalg::{spectral_radius, Mat2};
use crate::measures::{analyze_model, Band, Measure, MeasureReport};
use crate::regression::{fit_lagged, Lagged};
use crate::serde_nats;
use crate::sim::derive_seed;
use crate::spectral::FrequencyGrid;
use crate::timeseries::TimeSeriesPair;
use crate::var::{companion_of, fit_var};

pub const DEFAULT_SURROGATES: usize = 100;
pub const MIN_SURROGATES: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Samples generated and discarded before a surrogate is retained.
pub const SURROGATE_BURN_IN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    /// No coupling from driver to target; tests GC and GI.
    H1,
    /// No internal dynamics of the target; tests GA.
    H2,
}

impl Hypothesis {
    /// Measures whose null distribution this hypothesis provides.
    pub fn measures(self) -> &'static [Measure] {
        match self {
            Hypothesis::H1 => &[Measure::Gc, Measure::Gi],
            Hypothesis::H2 => &[Measure::Ga],
        }
    }

    pub fn for_measure(m: Measure) -> Self {
        match m {
            Measure::Gc | Measure::Gi => Hypothesis::H1,
            Measure::Ga => Hypothesis::H2,
        }
    }

    fn stream(self) -> u64 {
        match self {
            Hypothesis::H1 => 0,
            Hypothesis::H2 => 1 << 32,
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::H1 => "h1",
            Hypothesis::H2 => "h2",
        })
    }
}

impl FromStr for Hypothesis {
    type Err = GicaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h1" => Ok(Hypothesis::H1),
            "h2" => Ok(Hypothesis::H2),
            _ => Err(GicaError::invalid(format!("unknown hypothesis {s:?}, expected h1 or h2"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub n_surrogates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub hypothesis: Hypothesis,
}

impl SurrogateConfig {
    pub fn new(n_surrogates: usize, alpha: f64, seed: u64, hypothesis: Hypothesis) -> Result<Self> {
        if n_surrogates < MIN_SURROGATES {
            return Err(GicaError::invalid(format!(
                "at least {MIN_SURROGATES} surrogates are required, got {n_surrogates}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(GicaError::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self {
            n_surrogates,
            alpha,
            seed,
            hypothesis,
        })
    }
}

/// The coupled generator: the driver's ARX row plus the restricted target row.
#[derive(Debug, Clone)]
pub struct SurrogateGenerator {
    hypothesis: Hypothesis,
    /// `lags[k]` multiplies `[X, Y]_{n-1-k}`.
    lags: Vec<Mat2>,
    resid_x: Vec<f64>,
    resid_y: Vec<f64>,
    n: usize,
}

impl SurrogateGenerator {
    /// Fits the driver row at order `p` and the target row at lag `q` by
    /// least squares, and checks that the coupled recursion is stable.
    pub fn fit(pair: &TimeSeriesPair, p: usize, q: usize, hypothesis: Hypothesis) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(GicaError::invalid("model orders must be at least 1"));
        }
        let (x, y) = (pair.x(), pair.y());
        let fx = fit_lagged(&[x], &[Lagged::new(x, p), Lagged::new(y, p)], p)?;
        let source = match hypothesis {
            Hypothesis::H1 => y,
            Hypothesis::H2 => x,
        };
        let fy = fit_lagged(&[y], &[Lagged::new(source, q)], q)?;

        let mut lags = vec![[[0.0; 2]; 2]; p.max(q)];
        for k in 0..p {
            lags[k][0] = [fx.coeffs[0][0][k], fx.coeffs[0][1][k]];
        }
        for k in 0..q {
            let b = fy.coeffs[0][0][k];
            lags[k][1] = match hypothesis {
                Hypothesis::H1 => [0.0, b],
                Hypothesis::H2 => [b, 0.0],
            };
        }
        let radius = spectral_radius(&companion_of(&lags));
        if radius >= 1.0 {
            return Err(GicaError::Unstable { radius });
        }
        let mut fx = fx;
        let mut fy = fy;
        Ok(Self {
            hypothesis,
            lags,
            resid_x: fx.residuals.swap_remove(0),
            resid_y: fy.residuals.swap_remove(0),
            n: pair.len(),
        })
    }

    pub fn hypothesis(&self) -> Hypothesis {
        self.hypothesis
    }

    /// Surrogate `index`: residuals of each channel are shuffled
    /// independently and cycled through a burn-in, then a fresh pass
    /// produces the retained samples.
    pub fn generate(&self, seed: u64, index: usize, fs: f64) -> Result<TimeSeriesPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, self.hypothesis.stream() + index as u64));
        let mut ex = self.resid_x.clone();
        let mut ey = self.resid_y.clone();
        ex.shuffle(&mut rng);
        ey.shuffle(&mut rng);

        let total = SURROGATE_BURN_IN + self.n;
        let mut x = vec![0.0; total];
        let mut y = vec![0.0; total];
        for t in 0..total {
            let r = if t < SURROGATE_BURN_IN { t } else { t - SURROGATE_BURN_IN };
            let mut vx = ex[r % ex.len()];
            let mut vy = ey[r % ey.len()];
            for (k, a) in self.lags.iter().enumerate().take(t) {
                let (xp, yp) = (x[t - k - 1], y[t - k - 1]);
                vx += a[0][0] * xp + a[0][1] * yp;
                vy += a[1][0] * xp + a[1][1] * yp;
            }
            x[t] = vx;
            y[t] = vy;
        }
        TimeSeriesPair::new(x.split_off(SURROGATE_BURN_IN), y.split_off(SURROGATE_BURN_IN), fs)
    }
}

/// `config.n_surrogates` surrogate pairs of the same length as `pair`.
pub fn generate_surrogates(
    pair: &TimeSeriesPair,
    p: usize,
    q: usize,
    config: &SurrogateConfig,
) -> Result<Vec<TimeSeriesPair>> {
    let gen = SurrogateGenerator::fit(pair, p, q, config.hypothesis)?;
    (0..config.n_surrogates)
        .into_par_iter()
        .map(|i| gen.generate(config.seed, i, pair.fs()))
        .collect()
}

/// Percentile `pct` in `[0, 100]` by linear interpolation between the
/// closest order statistics.
pub fn percentile(values: &[f64], pct: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(GicaError::invalid("percentile of an empty sample"));
    }
    if !(0.0..=100.0).contains(&pct) {
        return Err(GicaError::invalid(format!("percentile {pct} outside [0, 100]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = pct / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    if w == 0.0 || v[lo] == v[hi] {
        return Ok(v[lo]);
    }
    Ok(v[lo] + w * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Upper,
    Lower,
    TwoSided,
}

impl Tail {
    pub fn for_measure(m: Measure) -> Self {
        match m {
            Measure::Gc => Tail::Upper,
            Measure::Gi => Tail::Lower,
            Measure::Ga => Tail::TwoSided,
        }
    }

    /// Percentiles (ascending) that bound the acceptance region.
    pub fn percentiles(self, alpha: f64) -> Vec<f64> {
        match self {
            Tail::Upper => vec![100.0 * (1.0 - alpha)],
            Tail::Lower => vec![100.0 * alpha],
            Tail::TwoSided => vec![50.0 * alpha, 100.0 * (1.0 - alpha / 2.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceVerdict {
    pub measure: Measure,
    pub band: String,
    pub hypothesis: Hypothesis,
    #[serde(with = "serde_nats")]
    pub original_value: f64,
    pub percentiles: Vec<f64>,
    #[serde(with = "serde_nats::vec")]
    pub thresholds: Vec<f64>,
    pub significant: bool,
    pub tail: Tail,
}

/// Verdict for one measure in one band against its surrogate distribution.
pub fn test_measure(
    measure: Measure,
    band: &str,
    original: f64,
    surrogate_values: &[f64],
    hypothesis: Hypothesis,
    alpha: f64,
) -> Result<SignificanceVerdict> {
    if Hypothesis::for_measure(measure) != hypothesis {
        return Err(GicaError::HypothesisMismatch {
            measure: measure.name().to_string(),
            hypothesis: hypothesis.to_string(),
        });
    }
    let tail = Tail::for_measure(measure);
    let percentiles = tail.percentiles(alpha);
    let thresholds = percentiles
        .iter()
        .map(|&pct| percentile(surrogate_values, pct))
        .collect::<Result<Vec<_>>>()?;
    // comparisons against NaN are false, so NaN is never significant
    let significant = match tail {
        Tail::Upper => original > thresholds[0],
        Tail::Lower => original < thresholds[0],
        Tail::TwoSided => original < thresholds[0] || original > thresholds[1],
    };
    Ok(SignificanceVerdict {
        measure,
        band: band.to_string(),
        hypothesis,
        original_value: original,
        percentiles,
        thresholds,
        significant,
        tail,
    })
}

/// Verdicts for every measure the hypothesis covers, in every band of the
/// original report.
pub fn significance_test(
    original: &MeasureReport,
    surrogates: &[MeasureReport],
    config: &SurrogateConfig,
) -> Result<Vec<SignificanceVerdict>> {
    if surrogates.is_empty() {
        return Err(GicaError::invalid("empty surrogate distribution"));
    }
    let mut out = Vec::new();
    for &m in config.hypothesis.measures() {
        for band in original.band_names() {
            let orig = original
                .value(m, &band)
                .ok_or_else(|| GicaError::invalid(format!("band {band:?} missing from report")))?;
            let dist = surrogates
                .iter()
                .map(|r| {
                    r.value(m, &band)
                        .ok_or_else(|| GicaError::invalid(format!("band {band:?} missing from surrogate report")))
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(test_measure(m, &band, orig, &dist, config.hypothesis, config.alpha)?);
        }
    }
    Ok(out)
}

/// Everything needed to turn a series into measure reports.
#[derive(Debug, Clone)]
pub struct MeasurePipeline {
    pub p: usize,
    pub q: usize,
    pub grid: FrequencyGrid,
    pub bands: Vec<Band>,
}

impl MeasurePipeline {
    /// Fits order `p` to the (demeaned) pair and reports all measures.
    pub fn report(&self, pair: &TimeSeriesPair) -> Result<MeasureReport> {
        let model = fit_var(&pair.demeaned()?, self.p)?;
        analyze_model(&model, self.q, &self.grid)?.report(&self.bands)
    }
}

/// Generates surrogates, measures each of them, and tests `original`.
pub fn run_surrogate_test(
    pair: &TimeSeriesPair,
    original: &MeasureReport,
    pipeline: &MeasurePipeline,
    config: &SurrogateConfig,
) -> Result<Vec<SignificanceVerdict>> {
    let gen = SurrogateGenerator::fit(pair, pipeline.p, pipeline.q, config.hypothesis)?;
    let reports = (0..config.n_surrogates)
        .into_par_iter()
        .map(|i| pipeline.report(&gen.generate(config.seed, i, pair.fs())?))
        .collect::<Result<Vec<_>>>()?;
    significance_test(original, &reports, config)
}
