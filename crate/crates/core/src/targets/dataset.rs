//! Labelled tabular data, the Covertype CSV reader, and a binary cache.
//!
//! Cache layout (all integers `u64`, all reals `f64`, little endian):
//!
//! ```text
//! "STFLDST1" | rows | cols | n_train | n_test
//! | features, column-major (cols × rows) | labels (rows)
//! | train indices (n_train) | test indices (n_test)
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result, SvgdError};

pub const DATASET_MAGIC: &[u8; 8] = b"STFLDST1";

/// Covertype rows carry 54 features followed by the class label.
pub const COVERTYPE_FEATURES: usize = 54;
/// Row count of the full UCI Covertype file.
pub const COVERTYPE_ROWS: usize = 581_012;

/// Row-major features with ±1 labels and a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    cols: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<f64>, cols: usize, train: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        if cols == 0 {
            return Err(invalid("dataset needs at least one feature column"));
        }
        if features.len() != labels.len() * cols {
            return Err(invalid(format!(
                "{} feature values do not fill {} rows of {cols} columns",
                features.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|l| **l != 1.0 && **l != -1.0) {
            return Err(invalid(format!("labels must be +1 or -1, got {l}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite feature value"));
        }
        let rows = labels.len();
        if let Some(i) = train.iter().chain(&test).find(|&&i| i >= rows) {
            return Err(invalid(format!("split index {i} out of range for {rows} rows")));
        }
        Ok(Self { features, labels, cols, train, test })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.cols..(i + 1) * self.cols]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Shuffles `0..rows` with `seed` and assigns the first `train_fraction`
    /// to training. Both index lists are returned sorted.
    pub fn split(&mut self, train_fraction: f64, seed: u64) {
        let rows = self.rows();
        let mut idx: Vec<usize> = (0..rows).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((rows as f64) * train_fraction).round() as usize;
        let mut train = idx[..n_train].to_vec();
        let mut test = idx[n_train..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        self.train = train;
        self.test = test;
    }

    /// Standardizes every column to zero mean and unit variance using
    /// statistics of the training rows. Constant columns are only centered.
    pub fn standardize(&mut self) {
        let n = self.train.len().max(1) as f64;
        for c in 0..self.cols {
            let mean = self.train.iter().map(|&i| self.features[i * self.cols + c]).sum::<f64>() / n;
            let var = self.train.iter().map(|&i| (self.features[i * self.cols + c] - mean).powi(2)).sum::<f64>() / n;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            for r in 0..self.rows() {
                let v = &mut self.features[r * self.cols + c];
                *v = (*v - mean) / sd;
            }
        }
    }

    /// A deterministic subset of at most `size` training rows, sorted.
    pub fn train_subsample(&self, size: usize, seed: u64) -> Vec<usize> {
        if size >= self.train.len() {
            return self.train.clone();
        }
        let mut idx = self.train.clone();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(size);
        idx.sort_unstable();
        idx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovertypeOptions {
    pub seed: u64,
    pub train_fraction: f64,
    /// When set, the number of data rows must match exactly.
    pub expected_rows: Option<usize>,
}

impl Default for CovertypeOptions {
    fn default() -> Self {
        Self { seed: 0, train_fraction: 0.8, expected_rows: None }
    }
}

/// Reads the UCI Covertype CSV (54 features and a class label per row; a
/// header line is detected and skipped), labels class 2 as `+1` and every
/// other class as `−1`, splits rows 80/20 under `options.seed` and
/// standardizes features on the training rows.
pub fn load_covertype(path: impl AsRef<Path>, options: &CovertypeOptions) -> Result<Dataset> {
    let reader = BufReader::new(File::open(path)?);
    let width = COVERTYPE_FEATURES + 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut fields = Vec::with_capacity(width);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        fields.clear();
        let mut parse_failed = false;
        for tok in line.split(',') {
            match tok.trim().parse::<f64>() {
                Ok(v) => fields.push(v),
                Err(_) => {
                    parse_failed = true;
                    break;
                }
            }
        }
        if parse_failed {
            if lineno == 0 {
                continue;
            }
            return Err(SvgdError::Format { line: lineno + 1, message: "non-numeric field".into() });
        }
        if fields.len() != width {
            return Err(SvgdError::Format {
                line: lineno + 1,
                message: format!("expected {width} columns, found {}", fields.len()),
            });
        }
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(SvgdError::Format { line: lineno + 1, message: "non-finite field".into() });
        }
        features.extend_from_slice(&fields[..COVERTYPE_FEATURES]);
        labels.push(if fields[COVERTYPE_FEATURES] == 2.0 { 1.0 } else { -1.0 });
    }
    if let Some(expected) = options.expected_rows {
        if labels.len() != expected {
            return Err(SvgdError::Format {
                line: labels.len(),
                message: format!("expected {expected} data rows, found {}", labels.len()),
            });
        }
    }
    let mut data = Dataset::new(features, labels, COVERTYPE_FEATURES, Vec::new(), Vec::new())?;
    data.split(options.train_fraction, options.seed);
    data.standardize();
    Ok(data)
}

pub fn write_dataset_cache(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DATASET_MAGIC)?;
    for v in [data.rows(), data.cols, data.train.len(), data.test.len()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for c in 0..data.cols {
        for r in 0..data.rows() {
            w.write_all(&data.features[r * data.cols + c].to_le_bytes())?;
        }
    }
    for l in &data.labels {
        w.write_all(&l.to_le_bytes())?;
    }
    for i in data.train.iter().chain(&data.test) {
        w.write_all(&(*i as u64).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_cache(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(SvgdError::Format { line: 0, message: "bad dataset cache magic".into() });
    }
    let mut word = [0u8; 8];
    let mut next_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word))
    };
    let rows = next_u64(&mut r)? as usize;
    let cols = next_u64(&mut r)? as usize;
    let n_train = next_u64(&mut r)? as usize;
    let n_test = next_u64(&mut r)? as usize;
    let mut features = vec![0.0; rows * cols];
    let mut buf = [0u8; 8];
    for c in 0..cols {
        for row in 0..rows {
            r.read_exact(&mut buf)?;
            features[row * cols + c] = f64::from_le_bytes(buf);
        }
    }
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        r.read_exact(&mut buf)?;
        labels.push(f64::from_le_bytes(buf));
    }
    let mut read_indices = |n: usize| -> Result<Vec<usize>> {
        (0..n)
            .map(|_| {
                r.read_exact(&mut buf)?;
                Ok(u64::from_le_bytes(buf) as usize)
            })
            .collect()
    };
    let train = read_indices(n_train)?;
    let test = read_indices(n_test)?;
    Dataset::new(features, labels, cols, train, test)
}
