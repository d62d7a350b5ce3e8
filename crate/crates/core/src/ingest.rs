// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV ingestion: column selection, time ordering, cleaning, response
//! transform, covariate lagging and covariate scaling.

use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::MIN_SEGMENT_N;
use crate::sample::TimeSeriesSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    Log,
}

/// Affine rescaling of the covariate. Bandwidths are in covariate units, so
/// covariates on a wide scale (e.g. 0 to 100 scores) need one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateScale {
    #[default]
    None,
    /// Min-max map onto [0, 1].
    Unit,
    /// Zero mean, unit standard deviation.
    Standard,
}

impl CovariateScale {
    fn apply(self, x: &mut [f64]) -> Result<()> {
        let (shift, width) = match self {
            CovariateScale::None => return Ok(()),
            CovariateScale::Unit => {
                let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            }
            CovariateScale::Standard => {
                let n = x.len() as f64;
                let m = x.iter().sum::<f64>() / n;
                (m, (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt())
            }
        };
        if width.is_nan() || width <= 0.0 {
            return Err(Error::InvalidInput("covariate is constant; cannot rescale".into()));
        }
        x.iter_mut().for_each(|v| *v = (*v - shift) / width);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSchema {
    /// Ordering column; row order is used when absent.
    pub time_column: Option<String>,
    pub response_column: String,
    /// Covariate column; when absent the lagged response is the covariate.
    pub covariate_column: Option<String>,
    pub lag: usize,
    pub transform: Transform,
    #[serde(default)]
    pub covariate_scale: CovariateScale,
}

impl Default for IngestSchema {
    fn default() -> Self {
        Self {
            time_column: None,
            response_column: "y".into(),
            covariate_column: None,
            lag: 1,
            transform: Transform::None,
            covariate_scale: CovariateScale::None,
        }
    }
}

impl IngestSchema {
    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = vec![&self.response_column];
        names.extend(self.time_column.as_deref());
        names.extend(self.covariate_column.as_deref());
        for (i, a) in names.iter().enumerate() {
            if names[i + 1..].contains(a) {
                return Err(Error::InvalidConfig(format!("column '{a}' named twice")));
            }
        }
        if self.covariate_column.is_none() && self.lag == 0 {
            return Err(Error::InvalidConfig(
                "lag must be at least 1 when the covariate is the lagged response".into(),
            ));
        }
        Ok(())
    }
}

/// Loaded sample plus the bookkeeping needed for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub sample: TimeSeriesSample,
    /// Original time cell of every retained observation.
    pub time_labels: Vec<String>,
    pub rows_read: usize,
    /// Rows discarded for missing or unusable values (lag rows excluded).
    pub rows_dropped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimeKind {
    Integer,
    Date,
    DateTime,
}

fn parse_time(cell: &str) -> Option<(TimeKind, i64)> {
    if let Ok(v) = cell.parse::<i64>() {
        return Some((TimeKind::Integer, v));
    }
    if let Ok(d) = NaiveDate::parse_from_str(cell, "%Y-%m-%d") {
        let epoch = NaiveDate::from_ymd_opt(1970, 1, 1)?;
        return Some((TimeKind::Date, (d - epoch).num_days()));
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(cell) {
        return Some((TimeKind::DateTime, t.timestamp()));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(cell, fmt) {
            return Some((TimeKind::DateTime, t.and_utc().timestamp()));
        }
    }
    None
}

fn parse_value(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

struct Row {
    time: i64,
    label: String,
    y: f64,
    x: Option<f64>,
}

/// Reads `path` according to `schema`.
pub fn load_csv(path: impl AsRef<Path>, schema: &IngestSchema) -> Result<Ingested> {
    let file = std::fs::File::open(path.as_ref())?;
    load_reader(file, schema)
}

/// As [`load_csv`] from any reader.
pub fn load_reader(reader: impl std::io::Read, schema: &IngestSchema) -> Result<Ingested> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let t_col = schema.time_column.as_deref().map(|c| column(&headers, c)).transpose()?;
    let y_col = column(&headers, &schema.response_column)?;
    let x_col = schema.covariate_column.as_deref().map(|c| column(&headers, c)).transpose()?;

    let mut rows = Vec::new();
    let mut kind: Option<TimeKind> = None;
    let mut rows_read = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        rows_read += 1;
        let (time, label) = match t_col {
            Some(c) => {
                let cell = record.get(c).unwrap_or("").trim();
                let Some((k, v)) = parse_time(cell) else { continue };
                match kind {
                    None => kind = Some(k),
                    Some(prev) if prev != k => {
                        return Err(Error::InvalidInput(format!(
                            "row {}: time value '{cell}' mixes formats",
                            i + 2
                        )))
                    }
                    _ => {}
                }
                (v, cell.to_string())
            }
            None => (i as i64, i.to_string()),
        };
        let Some(mut y) = record.get(y_col).and_then(parse_value) else { continue };
        if schema.transform == Transform::Log {
            if y <= 0.0 {
                continue;
            }
            y = y.ln();
        }
        let x = match x_col {
            Some(c) => match record.get(c).and_then(parse_value) {
                Some(v) => Some(v),
                None => continue,
            },
            None => None,
        };
        rows.push(Row { time, label, y, x });
    }
    let rows_dropped = rows_read - rows.len();
    rows.sort_by_key(|r| r.time);
    if let Some(w) = rows.windows(2).find(|w| w[0].time == w[1].time) {
        return Err(Error::InvalidInput(format!("duplicate time value '{}'", w[1].label)));
    }

    let lag = schema.lag;
    let usable = rows.len().saturating_sub(lag);
    if usable < MIN_SEGMENT_N {
        return Err(Error::NotEnoughRows {
            usable,
            min: MIN_SEGMENT_N,
        });
    }
    let covariate = |i: usize| match rows[i].x {
        Some(_) => rows[i - lag].x.expect("covariate present"),
        None => rows[i - lag].y,
    };
    let times = rows[lag..].iter().map(|r| r.time).collect();
    let y = rows[lag..].iter().map(|r| r.y).collect();
    let mut x: Vec<f64> = (lag..rows.len()).map(covariate).collect();
    schema.covariate_scale.apply(&mut x)?;
    let time_labels = rows[lag..].iter().map(|r| r.label.clone()).collect();
    Ok(Ingested {
        sample: TimeSeriesSample::new(times, y, x)?,
        time_labels,
        rows_read,
        rows_dropped,
    })
}
