//! Right-censored survival datasets: loading, validation, summary statistics,
//! subsetting and CSV persistence.
//!
//! A dataset is an ordered list of `(covariates, event, time)` triplets. Row
//! order is significant: split assignments consume randomness in dataset
//! order, so reproducing a split requires reproducing the order.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names used by [`SurvivalDataset::write_csv`].
pub const TIME_COLUMN: &str = "time";
pub const EVENT_COLUMN: &str = "event";

const CENSORED_VALUES: [&str; 3] = ["0", "false", "False"];

/// One observation: covariates, event indicator and observed time.
///
/// `time` is the minimum of the (unobserved) event and censoring times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub covariates: Vec<f64>,
    /// `true` when the event was observed, `false` when censored.
    pub event: bool,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalDataset {
    name: String,
    feature_names: Vec<String>,
    records: Vec<SurvivalRecord>,
}

/// How CSV columns map onto survival triplets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub time_column: String,
    pub event_column: String,
    /// `None` selects every column other than the time and event columns.
    pub feature_columns: Option<Vec<String>>,
    /// Strings read as an observed event. The censored spellings
    /// `0`, `false` and `False` are always accepted.
    pub event_true_values: BTreeSet<String>,
}

impl ColumnMapping {
    pub fn new(time_column: impl Into<String>, event_column: impl Into<String>) -> Self {
        ColumnMapping {
            time_column: time_column.into(),
            event_column: event_column.into(),
            feature_columns: None,
            event_true_values: ["1", "true", "True"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }

    pub fn with_features<S: Into<String>>(mut self, features: impl IntoIterator<Item = S>) -> Self {
        self.feature_columns = Some(features.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_event_true_values<S: Into<String>>(
        mut self,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        self.event_true_values = values.into_iter().map(Into::into).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_column == self.event_column {
            return Err(Error::InvalidMapping(format!(
                "time and event both map to `{}`",
                self.time_column
            )));
        }
        if let Some(features) = &self.feature_columns {
            for reserved in [&self.time_column, &self.event_column] {
                if features.contains(reserved) {
                    return Err(Error::InvalidMapping(format!(
                        "`{reserved}` cannot be both a feature and a label column"
                    )));
                }
            }
            let mut seen = BTreeSet::new();
            for f in features {
                if !seen.insert(f) {
                    return Err(Error::InvalidMapping(format!("feature `{f}` listed twice")));
                }
            }
        }
        if self.event_true_values.is_empty() {
            return Err(Error::InvalidMapping("no event values configured".into()));
        }
        Ok(())
    }

    fn parse_event(&self, raw: &str) -> Option<bool> {
        if self.event_true_values.contains(raw) {
            Some(true)
        } else if CENSORED_VALUES.contains(&raw) {
            Some(false)
        } else {
            None
        }
    }
}

/// The summary row reported per dataset: sample count, censoring rate,
/// feature count and time range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_samples: usize,
    pub n_events: usize,
    pub censored_fraction: f64,
    pub n_features: usize,
    pub time_min: f64,
    pub time_max: f64,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} samples, {:.0}% censored, {} features",
            self.n_samples,
            self.censored_fraction * 100.0,
            self.n_features
        )
    }
}

impl SurvivalDataset {
    /// Builds a dataset, checking the record invariants. Empty datasets are
    /// allowed here; [`load_csv`] rejects them.
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        records: Vec<SurvivalRecord>,
    ) -> Result<Self> {
        let d = feature_names.len();
        for (i, r) in records.iter().enumerate() {
            if !(r.time.is_finite() && r.time >= 0.0) {
                return Err(Error::NegativeTime {
                    row: i + 1,
                    time: r.time,
                });
            }
            if r.covariates.len() != d {
                return Err(Error::MalformedRecord {
                    row: i + 1,
                    message: format!("expected {d} covariates, got {}", r.covariates.len()),
                });
            }
        }
        Ok(SurvivalDataset {
            name: name.into(),
            feature_names,
            records,
        })
    }

    /// Covariate-free dataset from parallel time/event slices. Mostly useful
    /// for tests and synthetic data.
    pub fn from_times(name: impl Into<String>, times: &[f64], events: &[bool]) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::LengthMismatch {
                assignment: events.len(),
                dataset: times.len(),
            });
        }
        let records = times
            .iter()
            .zip(events)
            .map(|(&time, &event)| SurvivalRecord {
                covariates: Vec::new(),
                event,
                time,
            })
            .collect();
        Self::new(name, Vec::new(), records)
    }

    /// Parses CSV text. `name` becomes the dataset identifier.
    pub fn read_csv<R: Read>(reader: R, mapping: &ColumnMapping, name: &str) -> Result<Self> {
        mapping.validate()?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::MalformedRecord {
                row: 0,
                message: e.to_string(),
            })?
            .iter()
            .map(String::from)
            .collect();
        let mut seen = BTreeSet::new();
        for h in &header {
            if !seen.insert(h.as_str()) {
                return Err(Error::DuplicateColumn(h.clone()));
            }
        }
        let position = |col: &str| {
            header
                .iter()
                .position(|h| h == col)
                .ok_or_else(|| Error::MissingColumn(col.to_string()))
        };
        let time_idx = position(&mapping.time_column)?;
        let event_idx = position(&mapping.event_column)?;
        let feature_idx: Vec<usize> = match &mapping.feature_columns {
            Some(cols) => cols.iter().map(|c| position(c)).collect::<Result<_>>()?,
            None => (0..header.len())
                .filter(|&i| i != time_idx && i != event_idx)
                .collect(),
        };
        let feature_names = feature_idx.iter().map(|&i| header[i].clone()).collect();

        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row_no = i + 1;
            let row = row.map_err(|e| Error::MalformedRecord {
                row: row_no,
                message: e.to_string(),
            })?;
            let field = |idx: usize| row.get(idx).unwrap_or("");
            let unparsable = |idx: usize| Error::UnparsableValue {
                row: row_no,
                column: header[idx].clone(),
                value: field(idx).to_string(),
            };

            let time: f64 = field(time_idx).parse().map_err(|_| unparsable(time_idx))?;
            if time.is_nan() || time.is_infinite() {
                return Err(unparsable(time_idx));
            }
            if time < 0.0 {
                return Err(Error::NegativeTime { row: row_no, time });
            }
            let event = mapping
                .parse_event(field(event_idx))
                .ok_or_else(|| unparsable(event_idx))?;
            let covariates = feature_idx
                .iter()
                .map(|&j| match field(j).parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(unparsable(j)),
                })
                .collect::<Result<Vec<_>>>()?;
            records.push(SurvivalRecord {
                covariates,
                event,
                time,
            });
        }
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(SurvivalDataset {
            name: name.to_string(),
            feature_names,
            records,
        })
    }

    /// Writes the dataset as CSV: features first, then `time` and `event`
    /// (as `0`/`1`). Floats use the shortest representation that parses back
    /// to the same value.
    pub fn write_csv_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.extend([TIME_COLUMN, EVENT_COLUMN]);
        // names may need quoting; values never do
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(&header)?;
        w.flush()?;
        drop(w);
        for r in &self.records {
            for x in &r.covariates {
                write!(out, "{x:?},")?;
            }
            writeln!(out, "{:?},{}", r.time, u8::from(r.event))?;
        }
        out.flush()
    }

    /// Fails if a feature name would collide with the `time`/`event` columns
    /// that [`write_csv_to`](Self::write_csv_to) appends.
    pub fn check_writable(&self) -> Result<()> {
        match self
            .feature_names
            .iter()
            .find(|f| *f == TIME_COLUMN || *f == EVENT_COLUMN)
        {
            Some(bad) => Err(Error::ReservedColumnName(bad.clone())),
            None => Ok(()),
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.check_writable()?;
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    /// Selects records in the given order. An empty selection is allowed.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let n = self.records.len();
        let mut taken = vec![false; n];
        let mut records = Vec::with_capacity(indices.len());
        for &index in indices {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
            if std::mem::replace(&mut taken[index], true) {
                return Err(Error::DuplicateIndex(index));
            }
            records.push(self.records[index].clone());
        }
        Ok(SurvivalDataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            records,
        })
    }

    pub fn summarize(&self) -> Result<DatasetSummary> {
        if self.records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_events = self.records.iter().filter(|r| r.event).count();
        let (time_min, time_max) = self
            .times()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                (lo.min(t), hi.max(t))
            });
        Ok(DatasetSummary {
            name: self.name.clone(),
            n_samples: self.len(),
            n_events,
            censored_fraction: (self.len() - n_events) as f64 / self.len() as f64,
            n_features: self.n_features(),
            time_min,
            time_max,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.time)
    }

    pub fn events(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        self.records.iter().map(|r| r.event)
    }

    pub fn n_events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }
}

/// Loads a dataset from a CSV file; the file stem becomes the dataset name.
pub fn load_csv(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<SurvivalDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    SurvivalDataset::read_csv(BufReader::new(file), mapping, &name)
}
