//! Right-censored survival data: ingestion, standardization, splitting and
//! bootstrap resampling.
//!
//! A [`Dataset`] is immutable after construction and safe to share read-only
//! across parallel workers. All randomized operations take an explicit seeded
//! stream and are pure functions of `(input, seed)`.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// One observation: covariates `x`, observed time `t = min(t*, c)` and the
/// event indicator `d = 1{t = t*}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvRecord {
    pub x: Vec<f64>,
    pub time: f64,
    pub event: bool,
}

/// Per-column affine transform `(value - mean) / sd`, fitted once on training
/// data and then applied verbatim to any other point (never refitted on test
/// statistics).
///
/// The variance convention is population variance (divide by n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    /// `(mean, sd)` per feature column; identity `(0, 1)` for columns that
    /// were not listed as continuous.
    pub feature_stats: Vec<(f64, f64)>,
    /// `(mean, sd)` for observed time.
    pub time_stats: (f64, f64),
}

impl Standardization {
    pub fn identity(dim: usize) -> Self {
        Standardization {
            feature_stats: vec![(0.0, 1.0); dim],
            time_stats: (0.0, 1.0),
        }
    }

    /// Fit from the records at `rows`, standardizing the listed feature
    /// columns and time.
    pub fn fit(records: &[SurvRecord], rows: &[usize], continuous: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Contract("cannot fit standardization on an empty row set".into()));
        }
        let dim = records[rows[0]].x.len();
        let mut stats = vec![(0.0, 1.0); dim];
        for &j in continuous {
            if j >= dim {
                return Err(Error::Contract(format!("feature index {j} out of range (d={dim})")));
            }
            let (mean, sd) = mean_sd(rows.iter().map(|&i| records[i].x[j]))?;
            if sd == 0.0 {
                return Err(Error::DegenerateFeature(format!("column {j}")));
            }
            stats[j] = (mean, sd);
        }
        let (tmean, tsd) = mean_sd(rows.iter().map(|&i| records[i].time))?;
        if tsd == 0.0 {
            return Err(Error::DegenerateFeature("time".into()));
        }
        Ok(Standardization { feature_stats: stats, time_stats: (tmean, tsd) })
    }

    pub fn apply_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.feature_stats)
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply_time(&self, t: f64) -> f64 {
        (t - self.time_stats.0) / self.time_stats.1
    }

    pub fn invert_time(&self, t_std: f64) -> f64 {
        t_std * self.time_stats.1 + self.time_stats.0
    }

    fn apply_record(&self, r: &SurvRecord) -> SurvRecord {
        SurvRecord { x: self.apply_x(&r.x), time: self.apply_time(r.time), event: r.event }
    }
}

/// Population mean and standard deviation.
fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> Result<(f64, f64)> {
    let n = values.clone().count();
    if n == 0 {
        return Err(Error::Contract("empty column".into()));
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    Ok((mean, var.sqrt()))
}

/// A right-censored survival dataset with shared dimension `d`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<SurvRecord>,
    pub feature_names: Vec<String>,
    /// The transform already applied to `records`, if any.
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(records: Vec<SurvRecord>, feature_names: Vec<String>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation("dataset has no records".into()));
        }
        let d = feature_names.len();
        for (i, r) in records.iter().enumerate() {
            if r.x.len() != d {
                return Err(Error::Validation(format!(
                    "record {i} has {} covariates, expected {d}",
                    r.x.len()
                )));
            }
            if !(r.time >= 0.0) {
                return Err(Error::Validation(format!("record {i} has negative time {}", r.time)));
            }
        }
        if !records.iter().any(|r| r.event) {
            return Err(Error::Validation("dataset contains no events".into()));
        }
        Ok(Dataset { records, feature_names, standardization: None })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Covariate dimension d.
    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    pub fn censoring_fraction(&self) -> f64 {
        1.0 - self.n_events() as f64 / self.len() as f64
    }

    /// Apply a fitted transform to every record, recording it on the result.
    pub fn transformed(&self, std: &Standardization) -> Dataset {
        Dataset {
            records: self.records.iter().map(|r| std.apply_record(r)).collect(),
            feature_names: self.feature_names.clone(),
            standardization: Some(std.clone()),
        }
    }
}

/// Column mapping for delimited-text ingestion.
#[derive(Debug, Clone)]
pub struct Schema {
    pub time_col: String,
    pub event_col: String,
    pub feature_cols: Vec<String>,
}

/// Load a comma-separated file with a header row. Values use '.' as the
/// decimal point; the event column must contain 0 or 1; missing values are
/// rejected.
pub fn load_delimited(path: &Path, schema: &Schema) -> Result<Dataset> {
    if schema.feature_cols.is_empty() {
        return Err(Error::Schema("schema lists no feature columns".into()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column '{name}' not found in header")))
    };
    let time_idx = col(&schema.time_col)?;
    let event_idx = col(&schema.event_col)?;
    let feat_idx: Vec<usize> = schema
        .feature_cols
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for (row_num, row) in reader.records().enumerate() {
        let row = row?;
        let field = |idx: usize| -> Result<f64> {
            let raw = row.get(idx).unwrap_or("");
            if raw.trim().is_empty() {
                return Err(Error::Parse { row: row_num + 1, msg: "missing value".into() });
            }
            raw.trim().parse::<f64>().map_err(|_| Error::Parse {
                row: row_num + 1,
                msg: format!("non-numeric value '{raw}'"),
            })
        };
        let time = field(time_idx)?;
        if time < 0.0 {
            return Err(Error::Validation(format!("negative time {time} at data row {}", row_num + 1)));
        }
        let ev = field(event_idx)?;
        let event = if ev == 0.0 {
            false
        } else if ev == 1.0 {
            true
        } else {
            return Err(Error::Validation(format!(
                "event value {ev} at data row {} is not in {{0,1}}",
                row_num + 1
            )));
        };
        let x: Vec<f64> = feat_idx.iter().map(|&i| field(i)).collect::<Result<_>>()?;
        records.push(SurvRecord { x, time, event });
    }
    Dataset::new(records, schema.feature_cols.clone())
}

/// Standardize the listed feature columns and time to mean 0, variance 1
/// (population convention), with statistics fitted on the whole dataset.
pub fn standardize(ds: &Dataset, continuous: &[usize]) -> Result<Dataset> {
    let all: Vec<usize> = (0..ds.len()).collect();
    let std = Standardization::fit(&ds.records, &all, continuous)?;
    Ok(ds.transformed(&std))
}

/// Standardize with statistics fitted on the training rows only, applied to
/// every record. This is the no-leakage variant used by the experiment
/// pipeline.
pub fn standardize_on(ds: &Dataset, fit_rows: &[usize], continuous: &[usize]) -> Result<Dataset> {
    let std = Standardization::fit(&ds.records, fit_rows, continuous)?;
    Ok(ds.transformed(&std))
}

/// Disjoint train/validation index sets covering the dataset exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub valid_indices: Vec<usize>,
}

impl SplitPlan {
    pub fn valid_set(&self) -> HashSet<usize> {
        self.valid_indices.iter().copied().collect()
    }
}

/// Uniformly random partition into `floor(n * fraction)` training rows and
/// the rest; deterministic given the stream.
pub fn split(ds: &Dataset, fraction: f64, rng: &mut SeedStream) -> Result<SplitPlan> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Contract(format!("split fraction {fraction} not in (0, 1)")));
    }
    let n = ds.len();
    let n_train = ((n as f64 * fraction).floor() as usize).clamp(1, n.saturating_sub(1));
    if n < 2 {
        return Err(Error::Contract("need at least 2 records to split".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut train: Vec<usize> = idx[..n_train].to_vec();
    let mut valid: Vec<usize> = idx[n_train..].to_vec();
    train.sort_unstable();
    valid.sort_unstable();
    Ok(SplitPlan { train_indices: train, valid_indices: valid })
}

/// Draw `|train|` indices i.i.d. uniformly with replacement from the training
/// set only.
pub fn bootstrap_resample(train_indices: &[usize], rng: &mut SeedStream) -> Result<Vec<usize>> {
    if train_indices.is_empty() {
        return Err(Error::Contract("bootstrap resample of an empty training set".into()));
    }
    let n = train_indices.len();
    Ok((0..n).map(|_| train_indices[rng.random_range(0..n)]).collect())
}
