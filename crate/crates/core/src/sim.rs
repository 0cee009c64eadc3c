//! Generators for the simulated systems: open loop, closed loop, a target
//! driven by an unobserved confounder, and the four-setting autonomy versus
//! isolation comparison.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GicaError, Result};
use crate::linalg::{spectral_radius, Mat2};
use crate::measures::{analyze_model, MeasureSet};
use crate::spectral::{FrequencyGrid, SpectralProfile};
use crate::timeseries::TimeSeriesPair;
use crate::var::{fit_var, poles_to_ar_coeffs, select_order_aic, BivariateVarModel};

/// Discarded samples before a realization is retained.
pub const SIM_BURN_IN: usize = 1000;

const RHO_X: f64 = 0.9;
const F_X: f64 = 0.3;
const RHO_Y: f64 = 0.8;
const F_Y: f64 = 0.1;
const RHO_Z: f64 = 0.8;
const F_Z: f64 = 0.2;
const CONFOUNDED_XY: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum S2Setting {
    /// Isolated white target.
    I,
    /// Isolated target with an autonomous oscillation.
    Ii,
    /// Driven target without self-dependencies.
    Iii,
    /// Driven target with an autonomous oscillation.
    Iv,
}

impl S2Setting {
    pub const ALL: [S2Setting; 4] = [S2Setting::I, S2Setting::Ii, S2Setting::Iii, S2Setting::Iv];

    /// `(b, c)` of the open-loop form.
    pub fn params(self) -> (f64, f64) {
        match self {
            S2Setting::I => (0.0, 0.0),
            S2Setting::Ii => (1.0, 0.0),
            S2Setting::Iii => (0.0, 1.0),
            S2Setting::Iv => (1.0, 1.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            S2Setting::I => "i",
            S2Setting::Ii => "ii",
            S2Setting::Iii => "iii",
            S2Setting::Iv => "iv",
        }
    }
}

impl FromStr for S2Setting {
    type Err = GicaError;

    fn from_str(s: &str) -> Result<Self> {
        S2Setting::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| GicaError::invalid(format!("unknown setting {s:?}, expected i, ii, iii or iv")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum System {
    OpenLoop { b: f64, c: f64 },
    ClosedLoop { b: f64, c: f64, d: f64 },
    Confounded { a: f64, b: f64 },
    SupplementS2 { setting: S2Setting },
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            System::OpenLoop { b, c } => write!(f, "open_loop(b={b}, c={c})"),
            System::ClosedLoop { b, c, d } => write!(f, "closed_loop(b={b}, c={c}, d={d})"),
            System::Confounded { a, b } => write!(f, "confounded(a={a}, b={b})"),
            System::SupplementS2 { setting } => write!(f, "supplement_s2({})", setting.label()),
        }
    }
}

impl System {
    fn check_params(&self) -> Result<()> {
        let params: Vec<(&str, f64)> = match *self {
            System::OpenLoop { b, c } => vec![("b", b), ("c", c)],
            System::ClosedLoop { b, c, d } => vec![("b", b), ("c", c), ("d", d)],
            System::Confounded { a, b } => vec![("a", a), ("b", b)],
            System::SupplementS2 { .. } => vec![],
        };
        for (name, v) in params {
            if !(0.0..=1.0).contains(&v) {
                return Err(GicaError::invalid(format!("parameter {name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Exact two-process model; not available for the confounded system.
    pub fn bivariate_model(&self) -> Result<BivariateVarModel> {
        match build_true_model(self)? {
            TrueModel::Bivariate(m) => Ok(m),
            TrueModel::Trivariate(_) => Err(GicaError::invalid(
                "the confounded system has no exact bivariate model of (X, Y)",
            )),
        }
    }
}

/// One simulation request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub system: System,
    pub n: usize,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(system: System, n: usize, seed: u64) -> Self {
        Self { system, n, seed }
    }
}

/// Lag matrices of `[X, Y, Z]` with unit-variance independent innovations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrivariateModel {
    pub a: Vec<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrueModel {
    Bivariate(BivariateVarModel),
    Trivariate(TrivariateModel),
}

impl TrueModel {
    fn lags(&self) -> Vec<DMatrix<f64>> {
        match self {
            TrueModel::Bivariate(m) => m
                .coeffs()
                .iter()
                .map(|a| DMatrix::from_fn(2, 2, |i, j| a[i][j]))
                .collect(),
            TrueModel::Trivariate(m) => m.a.iter().map(|a| DMatrix::from_fn(3, 3, |i, j| a[i][j])).collect(),
        }
    }
}

/// Assembles the coefficients of a system from its pole placement and
/// coupling parameters.
pub fn build_true_model(system: &System) -> Result<TrueModel> {
    system.check_params()?;
    let (ax1, ax2) = poles_to_ar_coeffs(RHO_X, F_X)?;
    let two = |b: f64, c: f64, d: f64| -> Result<BivariateVarModel> {
        let (ay1, ay2) = poles_to_ar_coeffs(b * RHO_Y, F_Y)?;
        let a1: Mat2 = [[ax1, -d], [-c, ay1]];
        let a2: Mat2 = [[ax2, 0.0], [0.0, ay2]];
        let m = BivariateVarModel::new(vec![a1, a2], [[1.0, 0.0], [0.0, 1.0]])?;
        m.check_stable()?;
        Ok(m)
    };
    Ok(match *system {
        System::OpenLoop { b, c } => TrueModel::Bivariate(two(b, c, 0.0)?),
        System::ClosedLoop { b, c, d } => TrueModel::Bivariate(two(b, c, d)?),
        System::SupplementS2 { setting } => {
            let (b, c) = setting.params();
            TrueModel::Bivariate(two(b, c, 0.0)?)
        }
        System::Confounded { a, b } => {
            let (ay1, ay2) = poles_to_ar_coeffs(b * RHO_Y, F_Y)?;
            let (az1, az2) = poles_to_ar_coeffs(RHO_Z, F_Z)?;
            let model = TrueModel::Trivariate(TrivariateModel {
                a: vec![
                    [[ax1, 0.0, 0.0], [-CONFOUNDED_XY, ay1, -a], [0.0, 0.0, az1]],
                    [[ax2, 0.0, 0.0], [0.0, ay2, 0.0], [0.0, 0.0, az2]],
                ],
            });
            let radius = spectral_radius(&companion(&model.lags()));
            if radius >= 1.0 {
                return Err(GicaError::Unstable { radius });
            }
            model
        }
    })
}

fn companion(lags: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = lags[0].nrows();
    let dim = d * lags.len();
    let mut c = DMatrix::zeros(dim, dim);
    for (k, a) in lags.iter().enumerate() {
        c.view_mut((0, k * d), (d, d)).copy_from(a);
    }
    for i in d..dim {
        c[(i, i - d)] = 1.0;
    }
    c
}

/// Mixes a base seed with a stream index (SplitMix64 finalizer), so that
/// parallel work items draw from unrelated generators.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A realization of `(X, Y)` at unit sampling frequency.
///
/// Innovations are standard Gaussian draws from ChaCha8 seeded by
/// `spec.seed`; the first [`SIM_BURN_IN`] samples are discarded. The
/// confounder of the confounded system is generated but not returned.
pub fn simulate(spec: &SimSpec) -> Result<TimeSeriesPair> {
    if spec.n < 2 {
        return Err(GicaError::invalid("realization length must be at least 2"));
    }
    let lags = build_true_model(&spec.system)?.lags();
    let d = lags[0].nrows();
    let p = lags.len();
    let total = SIM_BURN_IN + spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut s = vec![vec![0.0; total]; d];
    for t in 0..total {
        for i in 0..d {
            let mut v: f64 = StandardNormal.sample(&mut rng);
            for (k, a) in lags.iter().enumerate().take(p.min(t)) {
                for j in 0..d {
                    v += a[(i, j)] * s[j][t - k - 1];
                }
            }
            s[i][t] = v;
        }
    }
    let x = s[0][SIM_BURN_IN..].to_vec();
    let y = s[1][SIM_BURN_IN..].to_vec();
    TimeSeriesPair::new(x, y, 1.0)
}

/// Measures computed from the true parameters of a two-process system.
pub fn theoretical_profiles(system: &System, q: usize, grid: &FrequencyGrid) -> Result<MeasureSet> {
    analyze_model(&system.bivariate_model()?, q, grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfoundedStudyConfig {
    pub a: f64,
    pub b: f64,
    pub n_runs: usize,
    pub n: usize,
    pub seed: u64,
    pub p_max: usize,
    pub q: usize,
}

/// Pointwise averages over the successful runs.
#[derive(Debug, Clone)]
pub struct ConfoundedStudy {
    pub gc: SpectralProfile,
    pub gi: SpectralProfile,
    pub ga: SpectralProfile,
    pub orders: Vec<usize>,
    pub failures: usize,
}

/// Fits `(X, Y)` realizations of the confounded system with AIC order
/// selection and averages the estimated spectral profiles.
///
/// Failed runs are skipped; the study fails when they reach 5% of the runs.
pub fn run_confounded_study(cfg: &ConfoundedStudyConfig, grid: &FrequencyGrid) -> Result<ConfoundedStudy> {
    if cfg.n_runs == 0 {
        return Err(GicaError::invalid("at least one run is required"));
    }
    let system = System::Confounded { a: cfg.a, b: cfg.b };
    build_true_model(&system)?;
    let runs: Vec<Result<(usize, MeasureSet)>> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|r| {
            let spec = SimSpec::new(system, cfg.n, derive_seed(cfg.seed, r as u64));
            let pair = simulate(&spec)?.demeaned()?;
            let p = select_order_aic(&pair, cfg.p_max)?;
            let set = analyze_model(&fit_var(&pair, p)?, cfg.q, grid)?;
            Ok((p, set))
        })
        .collect();

    let mut sums = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    let mut orders = Vec::new();
    let mut failures = 0;
    for run in runs {
        match run {
            Ok((p, set)) => {
                orders.push(p);
                let profiles = [&set.spectra.gc, &set.spectra.gi, &set.spectra.ga.a];
                for (sum, prof) in sums.iter_mut().zip(profiles) {
                    for (s, v) in sum.iter_mut().zip(&prof.values) {
                        *s += v;
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    if failures * 20 >= cfg.n_runs {
        return Err(GicaError::invalid(format!(
            "{failures} of {} runs failed, at least 5%",
            cfg.n_runs
        )));
    }
    let used = orders.len() as f64;
    let [gc, gi, ga] = sums.map(|s| s.into_iter().map(|v| v / used).collect::<Vec<_>>());
    Ok(ConfoundedStudy {
        gc: SpectralProfile::new("gc", *grid, gc),
        gi: SpectralProfile::new("gi", *grid, gi),
        ga: SpectralProfile::new("ga", *grid, ga),
        orders,
        failures,
    })
}
