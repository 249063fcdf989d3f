//! Regression datasets: an input matrix (rows = samples) and a target
//! matrix (columns = independent outputs), with CSV persistence.
//!
//! Column convention: target columns carry a `y_` prefix in the header,
//! which is how [`Dataset::read_csv`] splits inputs from targets.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: DMatrix<f64>,
    targets: DMatrix<f64>,
    input_names: Vec<String>,
    target_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        inputs: DMatrix<f64>,
        targets: DMatrix<f64>,
        input_names: Vec<String>,
        target_names: Vec<String>,
    ) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "inputs have {} rows, targets {}",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        if input_names.len() != inputs.ncols() || target_names.len() != targets.ncols() {
            return Err(Error::DimensionMismatch(
                "column names must match matrix widths".into(),
            ));
        }
        if !target_names.iter().all(|n| n.starts_with("y_")) {
            return Err(Error::InvalidConfig(
                "target column names must carry the y_ prefix".into(),
            ));
        }
        Ok(Self {
            inputs,
            targets,
            input_names,
            target_names,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.ncols()
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn target_names(&self) -> &[String] {
        &self.target_names
    }

    pub fn target_column(&self, j: usize) -> DVector<f64> {
        self.targets.column(j).into_owned()
    }

    /// First `n` rows as an owned dataset (nested training subsets).
    pub fn head(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::InvalidConfig(format!(
                "requested {} rows from a dataset of {}",
                n,
                self.len()
            )));
        }
        Ok(Self {
            inputs: self.inputs.rows(0, n).into_owned(),
            targets: self.targets.rows(0, n).into_owned(),
            input_names: self.input_names.clone(),
            target_names: self.target_names.clone(),
        })
    }

    /// Rows selected by index, in order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        if rows.iter().any(|&r| r >= self.len()) {
            return Err(Error::InvalidConfig("row index out of range".into()));
        }
        let inputs = DMatrix::from_fn(rows.len(), self.input_dim(), |i, j| {
            self.inputs[(rows[i], j)]
        });
        let targets = DMatrix::from_fn(rows.len(), self.output_dim(), |i, j| {
            self.targets[(rows[i], j)]
        });
        Ok(Self {
            inputs,
            targets,
            input_names: self.input_names.clone(),
            target_names: self.target_names.clone(),
        })
    }

    /// FNV-1a hash of the column schema; stored in model files to guard
    /// against evaluating a model on a dataset with mismatched columns.
    pub fn schema_hash(&self) -> String {
        let desc = format!(
            "in:{}|out:{}",
            self.input_names.join(","),
            self.target_names.join(",")
        );
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in desc.bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{hash:016x}")
    }

    /// Per-column variance of a target (population variance).
    pub fn target_variance(&self, j: usize) -> f64 {
        let col = self.targets.column(j);
        let n = self.len().max(1) as f64;
        let mean = col.sum() / n;
        col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let header: Vec<&str> = self
            .input_names
            .iter()
            .chain(self.target_names.iter())
            .map(|s| s.as_str())
            .collect();
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut record = Vec::with_capacity(self.input_dim() + self.output_dim());
            for j in 0..self.input_dim() {
                record.push(format!("{:.17e}", self.inputs[(i, j)]));
            }
            for j in 0..self.output_dim() {
                record.push(format!("{:.17e}", self.targets[(i, j)]));
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let names: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        let split = names
            .iter()
            .position(|n| n.starts_with("y_"))
            .ok_or_else(|| Error::InvalidConfig("no y_ target columns in CSV".into()))?;
        let (input_names, target_names) = (names[..split].to_vec(), names[split..].to_vec());
        if !target_names.iter().all(|n| n.starts_with("y_")) {
            return Err(Error::InvalidConfig(
                "target columns must be contiguous at the end of the header".into(),
            ));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for record in r.records() {
            let record = record?;
            let row: std::result::Result<Vec<f64>, _> =
                record.iter().map(|s| s.parse::<f64>()).collect();
            let row =
                row.map_err(|e| Error::InvalidConfig(format!("bad numeric field: {e}")))?;
            if row.len() != names.len() {
                return Err(Error::InvalidConfig("ragged CSV row".into()));
            }
            rows.push(row);
        }
        let n = rows.len();
        let inputs = DMatrix::from_fn(n, split, |i, j| rows[i][j]);
        let targets = DMatrix::from_fn(n, names.len() - split, |i, j| rows[i][split + j]);
        Dataset::new(inputs, targets, input_names, target_names)
    }
}

/// Toy regression set with a global linear trend: `x ~ U(0, 6)`,
/// `y = 6 * (0.5 sin(2x) + 0.1 N(0,1)) + 3x`.
pub fn toy_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random_range(0.0..6.0);
        let y_raw = 0.5 * (2.0 * x).sin() + 0.1 * normal.sample(&mut rng);
        xs.push(x);
        ys.push(6.0 * y_raw + 3.0 * x);
    }
    Dataset::new(
        DMatrix::from_vec(n, 1, xs),
        DMatrix::from_vec(n, 1, ys),
        vec!["x".into()],
        vec!["y_val".into()],
    )
    .expect("toy dataset shapes are consistent")
}
