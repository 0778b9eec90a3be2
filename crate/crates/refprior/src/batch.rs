//! Row-major sample and noise batches.

use std::io::Write;
use std::path::Path;

use crate::csvio;
use crate::error::{Error, Result};

/// An S x D batch of parameter samples with provenance: which method produced
/// it and under which seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    pub method: String,
    pub seed: u64,
}

impl SampleBatch {
    pub fn from_flat(values: Vec<f64>, rows: usize, cols: usize, method: &str, seed: u64) -> Result<Self> {
        if rows * cols != values.len() || cols == 0 {
            return Err(Error::Argument(format!(
                "sample batch shape {}x{} does not fit {} values",
                rows,
                cols,
                values.len()
            )));
        }
        Ok(SampleBatch { values, rows, cols, method: method.to_string(), seed })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, method: &str, seed: u64) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        if cols == 0 {
            return Err(Error::Argument("sample batch must have at least one column".into()));
        }
        let mut values = Vec::with_capacity(n * cols);
        for r in &rows {
            if r.len() != cols {
                return Err(Error::Argument("ragged sample batch".into()));
            }
            values.extend_from_slice(r);
        }
        Self::from_flat(values, n, cols, method, seed)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    /// Single column as a plain vector; the usual access path for scalar models.
    pub fn column(&self, d: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[d]).collect()
    }

    /// One draw per CSV row, columns `theta_0..theta_{D-1}`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let header: Vec<String> = (0..self.cols).map(|d| format!("theta_{}", d)).collect();
        writeln!(w, "{}", header.join(","))?;
        for r in self.iter_rows() {
            csvio::write_row(w, r)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path, method: &str) -> Result<Self> {
        let (_, rows) = csvio::read_rows(path)?;
        if rows.is_empty() {
            return Err(Error::Argument(format!("{}: no samples", path.display())));
        }
        Self::from_rows(rows, method, 0)
    }
}

/// An S x d batch of standard-normal noise, kept alongside the sample batch it
/// generated so gradients can be replayed through the same draws.
#[derive(Debug, Clone)]
pub struct NoiseBatch {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    pub seed: u64,
}

impl NoiseBatch {
    pub fn from_flat(values: Vec<f64>, rows: usize, cols: usize, seed: u64) -> Result<Self> {
        if rows * cols != values.len() || cols == 0 {
            return Err(Error::Argument(format!(
                "noise batch shape {}x{} does not fit {} values",
                rows,
                cols,
                values.len()
            )));
        }
        Ok(NoiseBatch { values, rows, cols, seed })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}
