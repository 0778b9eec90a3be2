//! Kolmogorov-Smirnov evaluation against known reference priors.
//!
//! The learned and baseline samplers are judged by the exact two-sample KS
//! statistic `sup_x |F_a(x) - F_b(x)|` against draws from the true prior,
//! discretized over a working interval when the target is improper. The
//! asymptotic two-sample threshold `c(alpha) sqrt((n+m)/(nm))` decides
//! rejection, and `ksd_curve` traces the statistic as the sample size grows.

use serde::Serialize;

use crate::batch::SampleBatch;
use crate::csvio::fmt_f64;
use crate::error::{Error, Result};
use crate::grid::{midpoints, DiscreteGridDistribution};
use crate::models::LikelihoodModel;
use crate::rng::SeedStream;

/// Empirical CDF of a scalar sample: right-continuous, `F(x)` = fraction of
/// samples `<= x`.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Ecdf> {
        check_scalar_sample(samples, "ecdf")?;
        let mut sorted = samples.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Ecdf { sorted })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }
}

fn check_scalar_sample(samples: &[f64], what: &str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Argument(format!("{} needs a nonempty sample", what)));
    }
    if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{} given non-finite sample value {}", what, v)));
    }
    Ok(())
}

/// Exact two-sample KS statistic via a merged walk over both sorted samples.
/// Both empirical CDFs are step functions, so the supremum is attained at a
/// sample point; the walk advances through each distinct merged value
/// (consuming ties from both sides) and records the CDF gap there.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    check_scalar_sample(a, "ks_statistic")?;
    check_scalar_sample(b, "ks_statistic")?;
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(f64::total_cmp);
    sb.sort_unstable_by(f64::total_cmp);
    let (n, m) = (sa.len(), sb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < n || j < m {
        let v = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < n && sa[i] == v {
            i += 1;
        }
        while j < m && sb[j] == v {
            j += 1;
        }
        let gap = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        sup = sup.max(gap);
    }
    Ok(sup)
}

/// Per-dimension KS with the maximum reported; the scalar case reduces to
/// `ks_statistic` on the single column.
pub fn ks_statistic_max_dim(a: &SampleBatch, b: &SampleBatch) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mut sup: f64 = 0.0;
    for d in 0..a.dim() {
        sup = sup.max(ks_statistic(&a.column(d), &b.column(d))?);
    }
    Ok(sup)
}

/// Asymptotic two-sample critical value `c(alpha) sqrt((n+m)/(nm))` with
/// `c(alpha) = sqrt(-ln(alpha/2)/2)`; `c(0.05) = 1.3581`.
pub fn ks_threshold(n: usize, m: usize, alpha: f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::Argument("ks_threshold needs n, m >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("significance level {} outside (0, 1)", alpha)));
    }
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    Ok(c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub m: usize,
    pub threshold: f64,
    pub reject: bool,
}

impl KsResult {
    pub fn two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
        let statistic = ks_statistic(a, b)?;
        let threshold = ks_threshold(a.len(), b.len(), alpha)?;
        Ok(KsResult { statistic, n: a.len(), m: b.len(), threshold, reject: statistic > threshold })
    }
}

/// Samplable discretization of the true reference prior: the unnormalized
/// Jeffreys density evaluated at the midpoints of `g` equal cells over the
/// working interval, normalized to a distribution. Equal cell widths make the
/// grid probabilities proportional to the density values.
pub fn true_rp_sampler(
    model: &LikelihoodModel,
    bounds: (f64, f64),
    g: usize,
) -> Result<DiscreteGridDistribution> {
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Argument(format!("invalid bounds ({}, {})", lo, hi)));
    }
    if model.param_dim() != 1 {
        return Err(Error::Argument(
            "the discretized true prior covers one-dimensional parameters".into(),
        ));
    }
    if g == 0 {
        return Err(Error::Argument("grid needs at least one cell".into()));
    }
    let points = midpoints(lo, hi, g);
    let logs: Vec<f64> = points
        .iter()
        .map(|&x| model.jeffreys_log_unnorm(&[x]))
        .collect::<Result<_>>()?;
    DiscreteGridDistribution::from_log_weights(points, logs)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveRow {
    pub method: String,
    pub n: usize,
    pub ksd: f64,
    pub threshold: f64,
}

/// KS distance of each method against fresh truth draws at each sample size.
/// One truth batch is drawn per size and shared by every method, so the
/// methods are compared against the same yardstick; each method contributes
/// its first `n` samples.
pub fn ksd_curve(
    methods: &[&SampleBatch],
    truth: &DiscreteGridDistribution,
    sizes: &[usize],
    alpha: f64,
    rng: &mut SeedStream,
) -> Result<Vec<CurveRow>> {
    if methods.is_empty() || sizes.is_empty() {
        return Err(Error::Argument("ksd_curve needs at least one method and one size".into()));
    }
    let max = *sizes.iter().max().expect("sizes nonempty");
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Argument("sample sizes must be >= 1".into()));
    }
    for batch in methods {
        if batch.dim() != 1 {
            return Err(Error::Argument(format!(
                "method '{}' has dimension {}, the curve covers scalars",
                batch.method,
                batch.dim()
            )));
        }
        if batch.rows() < max {
            return Err(Error::Argument(format!(
                "method '{}' has {} samples, need {}",
                batch.method,
                batch.rows(),
                max
            )));
        }
    }
    let mut rows = Vec::with_capacity(sizes.len() * methods.len());
    for &n in sizes {
        let truth_batch = truth.sample(n, rng, "truth", 0)?;
        let truth_col = truth_batch.column(0);
        let threshold = ks_threshold(n, n, alpha)?;
        for batch in methods {
            let head: Vec<f64> = batch.column(0)[..n].to_vec();
            let ksd = ks_statistic(&head, &truth_col)?;
            rows.push(CurveRow { method: batch.method.clone(), n, ksd, threshold });
        }
    }
    Ok(rows)
}

pub fn write_curve_csv(rows: &[CurveRow], path: &std::path::Path) -> Result<()> {
    let mut out = String::from("method,n,ksd,threshold\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.method,
            r.n,
            fmt_f64(r.ksd),
            fmt_f64(r.threshold)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Pearson correlation of two equal-length sequences.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Argument(format!(
            "pearson needs two equal sequences of length >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    check_scalar_sample(x, "pearson")?;
    check_scalar_sample(y, "pearson")?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Domain("pearson undefined for a constant sequence".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}
