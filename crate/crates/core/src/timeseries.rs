//! Loading, validation and preconditioning of bivariate series.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{GicaError, Result};

/// Minimum number of samples accepted by [`highpass_detrend`].
pub const MIN_DETREND_LEN: usize = 20;

/// Default cut-off of the slow-trend filter, in Hz.
pub const DEFAULT_DETREND_CUTOFF_HZ: f64 = 0.0156;

/// Two synchronous real series: `x` is the driver, `y` the target.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPair {
    x: Vec<f64>,
    y: Vec<f64>,
    fs: f64,
}

impl TimeSeriesPair {
    pub fn new(x: Vec<f64>, y: Vec<f64>, fs: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(GicaError::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(GicaError::TooShort {
                needed: 2,
                available: x.len(),
            });
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(GicaError::invalid(format!(
                "sampling frequency must be positive, got {fs}"
            )));
        }
        for (name, s) in [("x", &x), ("y", &y)] {
            if let Some(i) = s.iter().position(|v| !v.is_finite()) {
                return Err(GicaError::invalid(format!(
                    "non-finite sample in {name} at index {i}"
                )));
            }
        }
        Ok(Self { x, y, fs })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean removal on both channels.
    pub fn demeaned(&self) -> Result<Self> {
        Self::new(remove_mean(&self.x)?, remove_mean(&self.y)?, self.fs)
    }

    /// Zero-phase high-pass on both channels followed by mean removal.
    pub fn preconditioned(&self, cutoff_hz: Option<f64>) -> Result<Self> {
        let (x, y) = match cutoff_hz {
            Some(fc) => (
                highpass_detrend(&self.x, self.fs, fc)?,
                highpass_detrend(&self.y, self.fs, fc)?,
            ),
            None => (self.x.clone(), self.y.clone()),
        };
        Self::new(remove_mean(&x)?, remove_mean(&y)?, self.fs)
    }
}

/// Selects one CSV column either by 0-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Column::Index(i) => write!(f, "{i}"),
            Column::Name(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub x: Column,
    pub y: Column,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            x: Column::Index(0),
            y: Column::Index(1),
        }
    }
}

impl FromStr for ColumnSpec {
    type Err = GicaError;

    /// Parses `"0,1"` or `"map,cbfv"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
            return Err(GicaError::invalid(format!(
                "column spec must name two columns as `x,y`, got {s:?}"
            )));
        }
        let col = |p: &str| match p.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(p.to_string()),
        };
        Ok(Self {
            x: col(parts[0]),
            y: col(parts[1]),
        })
    }
}

fn looks_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

fn resolve(col: &Column, header: Option<&csv::StringRecord>, width: usize) -> Result<usize> {
    match col {
        Column::Index(i) if *i < width => Ok(*i),
        Column::Index(i) => Err(GicaError::invalid(format!(
            "column {i} out of range ({width} columns)"
        ))),
        Column::Name(name) => header
            .and_then(|h| h.iter().position(|f| f.trim() == name))
            .ok_or_else(|| GicaError::invalid(format!("no column named {name:?}"))),
    }
}

/// Reads two numeric columns of a comma-separated file.
///
/// A header line is detected when any field of the first record fails to
/// parse as a number. Rows are reported 1-based as file lines.
pub fn load_pair(path: impl AsRef<Path>, fs: f64, columns: &ColumnSpec) -> Result<TimeSeriesPair> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| GicaError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let csv_err = |e: csv::Error| GicaError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };

    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => return Err(GicaError::TooShort { needed: 2, available: 0 }),
    };
    let width = first.len();
    if width < 2 {
        return Err(GicaError::TooFewColumns { found: width });
    }
    let has_header = !first.iter().all(looks_numeric);
    let header = has_header.then(|| first.clone());
    let ix = resolve(&columns.x, header.as_ref(), width)?;
    let iy = resolve(&columns.y, header.as_ref(), width)?;

    let mut cols: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    // once a column has an empty trailing cell it may not resume
    let mut ended = [false, false];
    let mut handle = |rec: &csv::StringRecord| -> Result<()> {
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        for (k, &ci) in [ix, iy].iter().enumerate() {
            let cell = rec.get(ci).unwrap_or("");
            if cell.is_empty() {
                ended[k] = true;
                continue;
            }
            let value = cell.parse::<f64>().ok().filter(|v| v.is_finite());
            match value {
                Some(v) if !ended[k] => cols[k].push(v),
                _ => {
                    return Err(GicaError::BadCell {
                        row,
                        column: ci + 1,
                        value: cell.to_string(),
                    })
                }
            }
        }
        Ok(())
    };

    if !has_header {
        handle(&first)?;
    }
    for rec in records {
        handle(&rec.map_err(csv_err)?)?;
    }
    let [x, y] = cols;
    TimeSeriesPair::new(x, y, fs)
}

/// Writes the pair as `x,y` CSV with 15 significant digits.
pub fn write_pair(path: impl AsRef<Path>, pair: &TimeSeriesPair) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| GicaError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(out, "x,y").map_err(io_err)?;
    for (x, y) in pair.x().iter().zip(pair.y()) {
        writeln!(out, "{x:.14e},{y:.14e}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn mean(series: &[f64]) -> f64 {
    let n = series.len() as f64;
    let m = series.iter().sum::<f64>() / n;
    // second pass picks up the rounding error of the first
    m + series.iter().map(|v| v - m).sum::<f64>() / n
}

/// Subtracts the sample mean.
///
/// A mean below the rounding floor of the data is treated as zero, which
/// makes the operation idempotent.
pub fn remove_mean(series: &[f64]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(GicaError::invalid("cannot remove the mean of an empty series"));
    }
    let m = mean(series);
    let scale = series.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if m.abs() <= 8.0 * f64::EPSILON * scale {
        return Ok(series.to_vec());
    }
    Ok(series.iter().map(|v| v - m).collect())
}

/// Zero-phase slow-trend removal.
///
/// A first-order recursive high-pass (pole set from `cutoff`) is run
/// forward and then backward over the series, which is extended at both
/// ends by odd reflection over three time constants and trimmed back.
pub fn highpass_detrend(series: &[f64], fs: f64, cutoff: f64) -> Result<Vec<f64>> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(GicaError::invalid(format!("sampling frequency must be positive, got {fs}")));
    }
    if !(cutoff > 0.0 && cutoff < fs / 2.0) {
        return Err(GicaError::invalid(format!(
            "cut-off {cutoff} Hz outside (0, {}) Hz",
            fs / 2.0
        )));
    }
    let n = series.len();
    if n < MIN_DETREND_LEN {
        return Err(GicaError::TooShort {
            needed: MIN_DETREND_LEN,
            available: n,
        });
    }

    // bilinear design: unit gain at Nyquist, -3 dB per pass at the cutoff
    let w = (std::f64::consts::PI * cutoff / fs).tan();
    let alpha = (1.0 - w) / (1.0 + w);
    let tau_samples = fs / (2.0 * std::f64::consts::PI * cutoff);
    let pad = ((3.0 * tau_samples).ceil() as usize).clamp(1, n - 1);

    let (first, last) = (series[0], series[n - 1]);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|k| 2.0 * first - series[k]));
    ext.extend_from_slice(series);
    ext.extend((1..=pad).map(|k| 2.0 * last - series[n - 1 - k]));

    highpass_in_place(&mut ext, alpha);
    ext.reverse();
    highpass_in_place(&mut ext, alpha);
    ext.reverse();

    Ok(ext[pad..pad + n].to_vec())
}

fn highpass_in_place(buf: &mut [f64], alpha: f64) {
    let mut prev_in = buf[0];
    let mut prev_out = 0.0;
    for v in buf.iter_mut() {
        let input = *v;
        prev_out = alpha * prev_out + 0.5 * (1.0 + alpha) * (input - prev_in);
        prev_in = input;
        *v = prev_out;
    }
}
