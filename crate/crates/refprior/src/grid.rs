//! Discretized distributions on one-dimensional grids.
//!
//! Estimators that produce density values at grid points are turned into
//! samplable distributions here: weights are normalized in log space and
//! draws use inverse-CDF lookup over the cumulative weights.

use rand::Rng;
use std::io::Write;

use crate::batch::SampleBatch;
use crate::csvio::fmt_f64;
use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// `g` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, g: usize) -> Vec<f64> {
    if g == 1 {
        return vec![(lo + hi) / 2.0];
    }
    let step = (hi - lo) / (g - 1) as f64;
    (0..g).map(|i| lo + step * i as f64).collect()
}

/// Midpoints of `g` equal cells partitioning `[lo, hi]`.
pub fn midpoints(lo: f64, hi: f64, g: usize) -> Vec<f64> {
    let step = (hi - lo) / g as f64;
    (0..g).map(|i| lo + step * (i as f64 + 0.5)).collect()
}

#[derive(Debug, Clone)]
pub struct DiscreteGridDistribution {
    points: Vec<f64>,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl DiscreteGridDistribution {
    /// Normalize unnormalized log weights over `points`. The weights are
    /// shifted by their maximum before exponentiation, so only relative
    /// magnitudes matter.
    pub fn from_log_weights(points: Vec<f64>, log_weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != log_weights.len() {
            return Err(Error::Argument(format!(
                "{} points with {} weights",
                points.len(),
                log_weights.len()
            )));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::NonFinite("grid weights must be finite or -inf".into()));
        }
        let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY || max == f64::MIN {
            return Err(Error::Domain("all grid weights are zero".into()));
        }
        let raw: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cum.push(acc);
        }
        Ok(DiscreteGridDistribution { points, probs, cum })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cum
    }

    /// Inverse-CDF draws. Rounding at the top of the CDF clamps to the last
    /// atom rather than indexing past it.
    pub fn sample(&self, n: usize, rng: &mut SeedStream, method: &str, seed: u64) -> Result<SampleBatch> {
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.gen();
            let idx = self.cum.partition_point(|&c| c <= u).min(self.points.len() - 1);
            values.push(self.points[idx]);
        }
        SampleBatch::from_flat(values, n, 1, method, seed)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "point,probability")?;
        for (p, q) in self.points.iter().zip(&self.probs) {
            writeln!(w, "{},{}", fmt_f64(*p), fmt_f64(*q))?;
        }
        Ok(())
    }
}
