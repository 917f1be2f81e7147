//! Rate ingestion, log-return construction and rolling windows.

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::NaiveDate;
use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt_f64;

/// Sample-variance threshold below which a return column is treated as pegged.
pub const EPS_VAR: f64 = 1e-12;

const MISSING_MARKERS: [&str; 3] = ["", "NA", "ND"];

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("empty input: a header row is required")]
    EmptyInput,
    #[error("date column `{0}` not found in header")]
    DateColumnNotFound(String),
    #[error("duplicate asset code `{code}` at column {col}")]
    DuplicateAsset { code: String, col: usize },
    #[error("malformed date `{value}` at row {row}")]
    MalformedDate { row: usize, value: String },
    #[error("duplicate date {date} at row {row}")]
    DuplicateDate { row: usize, date: NaiveDate },
    #[error("date {date} at row {row} is earlier than the previous row")]
    UnorderedDate { row: usize, date: NaiveDate },
    #[error("malformed rate `{value}` at ({row}, {col})")]
    MalformedRate { row: usize, col: usize, value: String },
    #[error("non-positive rate at ({row}, {col})")]
    NonPositiveRate { row: usize, col: usize },
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("asset `{0}` has no observations")]
    AllMissing(String),
    #[error("asset `{asset}` has {usable} usable observations, need at least 2")]
    InsufficientObservations { asset: String, usable: usize },
    #[error("window length {window_len} exceeds the {available} available observations")]
    WindowTooLong { window_len: usize, available: usize },
    #[error("window length and step must both be at least 1")]
    InvalidWindowing,
    #[error("returns matrix shape {rows}x{cols} does not match {dates} dates and {assets} assets")]
    ShapeMismatch { rows: usize, cols: usize, dates: usize, assets: usize },
}

/// How gaps in the rate panel are resolved before differencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Remove any date on which at least one asset is missing.
    #[default]
    DropDate,
    /// Carry the last observed rate forward. Leading dates before every
    /// asset has started are dropped.
    ForwardFill,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Field delimiter; sniffed from the header (tab or comma) when `None`.
    pub delimiter: Option<u8>,
    /// Name of the date column; the first column when `None`.
    pub date_column: Option<String>,
}

/// Spot rates indexed by business date, one column per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePanel {
    dates: Vec<NaiveDate>,
    assets: Vec<String>,
    /// Row-major `dates x assets`.
    values: Vec<Option<f64>>,
}

impl RatePanel {
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for (col, code) in assets.iter().enumerate() {
            if !seen.insert(code.as_str()) {
                return Err(DataError::DuplicateAsset { code: code.clone(), col: col + 1 });
            }
        }
        for (row, pair) in dates.windows(2).enumerate() {
            if pair[1] == pair[0] {
                return Err(DataError::DuplicateDate { row: row + 2, date: pair[1] });
            }
            if pair[1] < pair[0] {
                return Err(DataError::UnorderedDate { row: row + 2, date: pair[1] });
            }
        }
        if values.len() != dates.len() {
            return Err(DataError::ShapeMismatch {
                rows: values.len(),
                cols: assets.len(),
                dates: dates.len(),
                assets: assets.len(),
            });
        }
        let mut flat = Vec::with_capacity(dates.len() * assets.len());
        for (row, line) in values.into_iter().enumerate() {
            if line.len() != assets.len() {
                return Err(DataError::RaggedRow { row: row + 1, found: line.len(), expected: assets.len() });
            }
            for (col, v) in line.iter().enumerate() {
                if let Some(x) = v {
                    if !(*x > 0.0) || !x.is_finite() {
                        return Err(DataError::NonPositiveRate { row: row + 1, col: col + 1 });
                    }
                }
            }
            flat.extend(line);
        }
        Ok(Self { dates, assets, values: flat })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn get(&self, t: usize, i: usize) -> Option<f64> {
        self.values[t * self.assets.len() + i]
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let s = raw.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d").or_else(|_| NaiveDate::parse_from_str(s, "%m/%d/%Y")).ok()
}

fn sniff_delimiter(bytes: &[u8]) -> u8 {
    let header = bytes.split(|b| *b == b'\n').next().unwrap_or_default();
    if header.contains(&b'\t') && !header.contains(&b',') {
        b'\t'
    } else {
        b','
    }
}

/// Parse a delimited rate table. Row numbers in errors are 1-based file lines
/// (the header is line 1); column numbers are 1-based field positions.
pub fn load_rates<R: Read>(mut source: R, opts: &LoadOptions) -> Result<RatePanel, DataError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes).map_err(|e| DataError::Csv(e.to_string()))?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(DataError::EmptyInput);
    }
    let delimiter = opts.delimiter.unwrap_or_else(|| sniff_delimiter(&bytes));
    let mut reader =
        csv::ReaderBuilder::new().delimiter(delimiter).has_headers(true).flexible(true).from_reader(bytes.as_slice());

    let header = reader.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let date_col = match &opts.date_column {
        None => 0,
        Some(name) => {
            header.iter().position(|h| h.trim() == name).ok_or_else(|| DataError::DateColumnNotFound(name.clone()))?
        }
    };
    let asset_cols: Vec<usize> = (0..header.len()).filter(|&c| c != date_col).collect();
    let mut assets = Vec::with_capacity(asset_cols.len());
    let mut seen = HashSet::new();
    for &c in &asset_cols {
        let code = header[c].trim().to_string();
        if !seen.insert(code.clone()) {
            return Err(DataError::DuplicateAsset { code, col: c + 1 });
        }
        assets.push(code);
    }

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() != header.len() {
            return Err(DataError::RaggedRow { row, found: record.len(), expected: header.len() });
        }
        let date = parse_date(&record[date_col])
            .ok_or_else(|| DataError::MalformedDate { row, value: record[date_col].to_string() })?;
        if let Some(&prev) = dates.last() {
            if date == prev {
                return Err(DataError::DuplicateDate { row, date });
            }
            if date < prev {
                return Err(DataError::UnorderedDate { row, date });
            }
        }
        dates.push(date);
        for &c in &asset_cols {
            let raw = record[c].trim();
            if MISSING_MARKERS.contains(&raw) {
                values.push(None);
                continue;
            }
            let x: f64 =
                raw.parse().map_err(|_| DataError::MalformedRate { row, col: c + 1, value: raw.to_string() })?;
            if !(x > 0.0) || !x.is_finite() {
                return Err(DataError::NonPositiveRate { row, col: c + 1 });
            }
            values.push(Some(x));
        }
    }
    Ok(RatePanel { dates, assets, values })
}

/// Log returns on a common set of dates. Row `t` holds the return realised
/// between retained dates `t` and `t + 1`; `dates[t]` is the later of the two.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    dates: Vec<NaiveDate>,
    assets: Vec<String>,
    returns: DMatrix<f64>,
    zero_variance: Vec<bool>,
}

impl ReturnsPanel {
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<String>, returns: DMatrix<f64>) -> Result<Self, DataError> {
        if returns.nrows() != dates.len() || returns.ncols() != assets.len() {
            return Err(DataError::ShapeMismatch {
                rows: returns.nrows(),
                cols: returns.ncols(),
                dates: dates.len(),
                assets: assets.len(),
            });
        }
        let zero_variance = zero_variance_flags(returns.as_view());
        Ok(Self { dates, assets, returns, zero_variance })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn zero_variance_flags(&self) -> &[bool] {
        &self.zero_variance
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    /// Writes `date,<asset>...` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["date".to_string()];
        header.extend(self.assets.iter().cloned());
        w.write_record(&header)?;
        for (t, d) in self.dates.iter().enumerate() {
            let mut row = vec![d.format("%Y-%m-%d").to_string()];
            row.extend(self.returns.row(t).iter().map(|&x| fmt_f64(x)));
            w.write_record(&row)?;
        }
        w.flush()
    }
}

/// Unbiased sample variance of one column.
pub fn sample_variance<'a>(xs: impl ExactSizeIterator<Item = &'a f64> + Clone) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
}

pub fn zero_variance_flags(data: DMatrixView<'_, f64>) -> Vec<bool> {
    data.column_iter().map(|c| sample_variance(c.iter()) < EPS_VAR).collect()
}

pub fn log_returns(panel: &RatePanel, policy: MissingPolicy) -> Result<ReturnsPanel, DataError> {
    let n = panel.n_assets();
    let t_in = panel.n_dates();
    for i in 0..n {
        let usable = (0..t_in).filter(|&t| panel.get(t, i).is_some()).count();
        if usable == 0 {
            return Err(DataError::AllMissing(panel.assets[i].clone()));
        }
        if usable < 2 {
            return Err(DataError::InsufficientObservations { asset: panel.assets[i].clone(), usable });
        }
    }

    let mut kept_dates = Vec::new();
    let mut kept_rows: Vec<Vec<f64>> = Vec::new();
    match policy {
        MissingPolicy::DropDate => {
            for t in 0..t_in {
                let row: Option<Vec<f64>> = (0..n).map(|i| panel.get(t, i)).collect();
                if let Some(row) = row {
                    kept_dates.push(panel.dates[t]);
                    kept_rows.push(row);
                }
            }
        }
        MissingPolicy::ForwardFill => {
            let mut last: Vec<Option<f64>> = vec![None; n];
            for t in 0..t_in {
                for (i, slot) in last.iter_mut().enumerate() {
                    if let Some(x) = panel.get(t, i) {
                        *slot = Some(x);
                    }
                }
                if let Some(row) = last.iter().copied().collect::<Option<Vec<f64>>>() {
                    kept_dates.push(panel.dates[t]);
                    kept_rows.push(row);
                }
            }
        }
    }
    if kept_rows.len() < 2 {
        let asset = panel.assets.first().cloned().unwrap_or_default();
        return Err(DataError::InsufficientObservations { asset, usable: kept_rows.len() });
    }

    let t_out = kept_rows.len() - 1;
    let returns = DMatrix::from_fn(t_out, n, |t, i| kept_rows[t + 1][i].ln() - kept_rows[t][i].ln());
    ReturnsPanel::new(kept_dates[1..].to_vec(), panel.assets.clone(), returns)
}

/// A contiguous, inclusive range of rows of a [`ReturnsPanel`].
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    panel: &'a ReturnsPanel,
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

impl<'a> Window<'a> {
    pub fn panel(&self) -> &'a ReturnsPanel {
        self.panel
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label_date(&self) -> NaiveDate {
        self.panel.dates[self.end]
    }

    pub fn data(&self) -> DMatrixView<'a, f64> {
        self.panel.returns.rows(self.start, self.len())
    }

    /// Copies the given columns (in the given order) into an owned matrix.
    pub fn columns(&self, cols: &[usize]) -> DMatrix<f64> {
        let view = self.data();
        DMatrix::from_fn(view.nrows(), cols.len(), |t, k| view[(t, cols[k])])
    }

    /// Pegged status recomputed on this window only.
    pub fn zero_variance_flags(&self) -> Vec<bool> {
        zero_variance_flags(self.data())
    }
}

pub fn make_windows(returns: &ReturnsPanel, window_len: usize, step: usize) -> Result<Vec<Window<'_>>, DataError> {
    if window_len == 0 || step == 0 {
        return Err(DataError::InvalidWindowing);
    }
    let t = returns.len();
    if window_len > t {
        return Err(DataError::WindowTooLong { window_len, available: t });
    }
    let count = (t - window_len) / step + 1;
    Ok((0..count)
        .map(|k| Window { panel: returns, index: k, start: k * step, end: k * step + window_len - 1 })
        .collect())
}
