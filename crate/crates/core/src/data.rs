//! Datasets, CSV ingestion, fold plans and fold-level preprocessing.
//!
//! Feature matrices are column-major `DMatrix<f64>` (n rows × d columns).
//! Missing feature values are carried as `NaN` until [`impute_median`] runs
//! inside a fold.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to per-column standard deviations.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    target: Vec<f64>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, target: Vec<f64>, feature_names: Vec<String>) -> Result<Self> {
        let (n, d) = features.shape();
        if n != target.len() {
            return Err(Error::InvalidInput(format!(
                "feature matrix has {n} rows but target has {} entries",
                target.len()
            )));
        }
        if d != feature_names.len() {
            return Err(Error::InvalidInput(format!(
                "feature matrix has {d} columns but {} names were given",
                feature_names.len()
            )));
        }
        if d < 1 {
            return Err(Error::InvalidInput("dataset needs at least one feature".into()));
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!("dataset needs at least 2 rows, got {n}")));
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("target row {i}")));
        }
        Ok(Self { features, target, feature_names })
    }

    /// Builds a dataset with generated feature names `x0..x{d-1}`.
    pub fn from_xy(features: DMatrix<f64>, target: Vec<f64>) -> Result<Self> {
        let names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(features, target, names)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn has_missing(&self) -> bool {
        self.features.iter().any(|v| v.is_nan())
    }

    /// Row subset in the given order. Indices may repeat.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let features = select_rows(&self.features, rows);
        let target = rows.iter().map(|&i| self.target[i]).collect();
        Self::new(features, target, self.feature_names.clone())
    }

    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Self> {
        Self::new(features, self.target.clone(), self.feature_names.clone())
    }
}

pub(crate) fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Reads a CSV with a mandatory header. Empty feature cells become `NaN`,
/// rows with an empty target are dropped.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, target_column)
}

pub fn read_csv<R: std::io::Read>(reader: R, target_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::UnknownColumn(target_column.to_string()))?;
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != target_idx).collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut target = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |col: usize| -> Result<f64> {
            let raw = record.get(col).unwrap_or("").trim();
            if raw.is_empty() {
                return Ok(f64::NAN);
            }
            raw.parse::<f64>().map_err(|_| Error::NonNumeric {
                column: header[col].clone(),
                row: row_no + 1,
                value: raw.to_string(),
            })
        };
        let y = parse(target_idx)?;
        if y.is_nan() {
            continue;
        }
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            row.push(parse(c)?);
        }
        rows.push(row);
        target.push(y);
    }

    let n = rows.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 rows with a target value, found {n}"
        )));
    }
    let d = feature_cols.len();
    let features = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    for (j, &c) in feature_cols.iter().enumerate() {
        if features.column(j).iter().all(|v| v.is_nan()) {
            return Err(Error::EmptyColumn(header[c].clone()));
        }
    }
    let names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    Dataset::new(features, target, names)
}

/// Reads the named columns (in the given order) for prediction; other
/// columns, including any target, are ignored. Empty cells become `NaN`.
pub fn read_feature_csv<R: std::io::Read>(reader: R, names: &[String]) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let cols = names
        .iter()
        .map(|name| header.iter().position(|h| h == name).ok_or_else(|| Error::UnknownColumn(name.clone())))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::new();
    let mut n = 0;
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        for &c in &cols {
            let raw = record.get(c).unwrap_or("").trim();
            values.push(if raw.is_empty() {
                f64::NAN
            } else {
                raw.parse::<f64>().map_err(|_| Error::NonNumeric {
                    column: header[c].clone(),
                    row: row_no + 1,
                    value: raw.to_string(),
                })?
            });
        }
        n += 1;
    }
    Ok(DMatrix::from_row_slice(n, cols.len(), &values))
}

pub fn write_csv<W: std::io::Write>(ds: &Dataset, target_name: &str, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    header.push(target_name);
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = (0..ds.d())
            .map(|j| {
                let v = ds.features()[(i, j)];
                if v.is_nan() { String::new() } else { v.to_string() }
            })
            .collect();
        rec.push(ds.target()[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Median of the non-NaN values; even counts average the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { 0.5 * (v[m - 1] + v[m]) } else { v[m] })
}

/// Per-column medians learned on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianImputer {
    pub medians: Vec<f64>,
}

impl MedianImputer {
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let medians = x
            .column_iter()
            .enumerate()
            .map(|(j, col)| {
                median(col.as_slice())
                    .ok_or_else(|| Error::InvalidInput(format!("column {j} is entirely missing in training data")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { medians })
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.medians.len(), x.ncols())?;
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            for v in col.iter_mut() {
                if v.is_nan() {
                    *v = self.medians[j];
                }
            }
        }
        Ok(out)
    }
}

/// Replaces NaNs in `apply_to` with per-column medians computed on `train`.
pub fn impute_median(train: &Dataset, apply_to: &Dataset) -> Result<Dataset> {
    let imputer = MedianImputer::fit(train.features())?;
    apply_to.with_features(imputer.apply(apply_to.features())?)
}

/// Drops columns whose most frequent value covers strictly more than
/// `mode_freq_threshold` of the rows.
pub fn drop_quasi_constant(ds: &Dataset, mode_freq_threshold: f64) -> Result<Dataset> {
    if !(mode_freq_threshold > 0.0 && mode_freq_threshold <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "mode frequency threshold must be in (0, 1], got {mode_freq_threshold}"
        )));
    }
    let n = ds.n() as f64;
    let keep: Vec<usize> = (0..ds.d())
        .filter(|&j| {
            let mut counts: HashMap<u64, usize> = HashMap::new();
            for v in ds.features().column(j).iter().filter(|v| !v.is_nan()) {
                // -0.0 and 0.0 are the same value.
                let key = if *v == 0.0 { 0u64 } else { v.to_bits() };
                *counts.entry(key).or_default() += 1;
            }
            let mode = counts.values().copied().max().unwrap_or(0) as f64;
            mode / n <= mode_freq_threshold
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::InvalidInput("all feature columns are quasi-constant".into()));
    }
    let x = ds.features();
    let features = DMatrix::from_fn(ds.n(), keep.len(), |i, j| x[(i, keep[j])]);
    let names = keep.iter().map(|&j| ds.feature_names()[j].clone()).collect();
    Dataset::new(features, ds.target().to_vec(), names)
}

/// Seeded subsample without replacement; a no-op when `n <= max_samples`.
pub fn subsample(ds: &Dataset, max_samples: usize, seed: u64) -> Result<Dataset> {
    if ds.n() <= max_samples {
        return Ok(ds.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..ds.n()).collect();
    idx.shuffle(&mut rng);
    idx.truncate(max_samples);
    idx.sort_unstable();
    ds.select_rows(&idx)
}

/// A k-fold partition of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Shuffles `0..n` with a seeded generator and deals positions round-robin
/// into `k` folds, so fold sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!("fold count {k} must be in [2, n={n}]")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, seed, assignments })
}

/// Inner-loop fold count: 3 for at least 1,000 outer-training rows, else 5.
pub fn inner_fold_count(n_outer_train: usize) -> usize {
    if n_outer_train >= 1000 { 3 } else { 5 }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut count, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        count += 1;
        sum += v;
    }
    let mean = sum / count as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
    (mean, var.sqrt())
}

/// Population mean and standard deviation.
pub fn population_stats(values: &[f64]) -> (f64, f64) {
    mean_std(values.iter().copied())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let (means, stds) = x
            .column_iter()
            .map(|col| {
                let (m, s) = mean_std(col.iter().copied());
                (m, s.max(STD_FLOOR))
            })
            .unzip();
        Self { means, stds }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.means.len(), x.ncols())?;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            (x[(i, j)] - self.means[j]) / self.stds[j]
        }))
    }
}

/// Maps each column's training range onto [−1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub clip: bool,
}

impl MinMaxScaler {
    pub fn fit(x: &DMatrix<f64>, clip: bool) -> Self {
        let (mins, maxs) = x
            .column_iter()
            .map(|col| col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
            .unzip();
        Self { mins, maxs, clip }
    }

    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        let range = self.maxs[j] - self.mins[j];
        // A constant training column carries no information; map it to the centre.
        let s = if range > 0.0 { 2.0 * (v - self.mins[j]) / range - 1.0 } else { 0.0 };
        if self.clip { s.clamp(-1.0, 1.0) } else { s }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.mins.len(), x.ncols())?;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| self.transform_value(j, x[(i, j)])))
    }
}
