//! Time- and frequency-domain measures of Granger causality (GC), Granger
//! isolation (GI) and Granger autonomy (GA) for bivariate processes.
//!
//! The pipeline is: precondition a [`TimeSeriesPair`], identify a full
//! [`BivariateVarModel`] by least squares, derive the autocovariance of the
//! fitted process, project it onto the restricted AR-on-Y and X-on-Y models,
//! and evaluate the spectral measures on a [`FrequencyGrid`]. Every spectral
//! measure integrates (one-sided, times two) to its time-domain counterpart.

pub mod error;
pub mod lyapunov;
pub mod measures;
pub mod regression;
pub mod restricted;
pub mod sim;
pub mod spectral;
pub mod surrogate;
pub mod timeseries;
pub mod var;

mod linalg;
mod serde_nats;

pub use error::{GicaError, Result};
pub use measures::{analyze_model, Band, BandValues, MeasureReport, MeasureSet};
pub use restricted::{restricted_ar, restricted_x, RestrictedKind, RestrictedModel};
pub use spectral::{FrequencyGrid, SpectralProfile};
pub use timeseries::TimeSeriesPair;
pub use var::{AutocovarianceSequence, BivariateVarModel};
