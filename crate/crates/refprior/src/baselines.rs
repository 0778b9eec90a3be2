//! Literature baselines: numerical estimation and MCMC.
//!
//! Three reference points for the learned methods. The Berger expected
//! log-posterior construction estimates the objective prior's log density at
//! a chosen parameter by averaging, over simulated datasets, the gap between
//! the dataset's log-likelihood at that parameter and the log-sum of its
//! likelihoods under uniformly drawn parameters; evaluating it on a grid and
//! normalizing yields a samplable approximation. The Lafferty-Wasserman
//! sampler runs Metropolis-Hastings on an iteration-indexed target whose
//! exponent is `-t H(theta) - sum_x dx W(x) p(x|theta)`, with `W` accumulating
//! per-iteration log-mean-likelihood fields over a discretized sample space.
//! The uniform prior over the working bounds is the naive baseline both are
//! judged against.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::SampleBatch;
use crate::error::{Error, Result};
use crate::grid::{linspace, DiscreteGridDistribution};
use crate::models::{LikelihoodModel, ModelKind};
use crate::rng::{stream, SeedStream};

/// Keeps the accumulated field finite where a grid point's mean likelihood
/// underflows to zero; equals ln(f64::MIN_POSITIVE).
const W_FLOOR: f64 = -708.3964185322641;

/// Sub-stream ids: the grid estimator gives point `i` the stream
/// `BERGER_POINT_STREAM + i`, clear of the single-digit ids used by the
/// training loops and the chain.
const BERGER_POINT_STREAM: u64 = 10_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BergerConfig {
    /// Simulated datasets per estimate.
    pub j: usize,
    /// Uniform parameter draws in the denominator.
    pub s: usize,
    /// Observations per simulated dataset.
    pub n: usize,
    /// Per-dimension working interval of the flat prior.
    pub bounds: Vec<(f64, f64)>,
    /// Grid resolution of the samplable approximation.
    pub grid: usize,
}

impl Default for BergerConfig {
    fn default() -> Self {
        BergerConfig { j: 100, s: 50, n: 500, bounds: vec![(1e-3, 1.0 - 1e-3)], grid: 1000 }
    }
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::Config("bounds must cover at least one dimension".into()));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("invalid bounds ({}, {})", lo, hi)));
        }
    }
    Ok(())
}

impl BergerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j == 0 || self.s == 0 || self.n == 0 || self.grid == 0 {
            return Err(Error::Config("berger counts must all be >= 1".into()));
        }
        check_bounds(&self.bounds)
    }
}

/// Log of `sum_s p(D|theta_s)` over a fixed parameter set, shifted by the
/// running maximum so huge likelihood magnitudes cannot overflow.
fn lse_over_hats(
    model: &LikelihoodModel,
    theta_hats: &SampleBatch,
    summary: &crate::models::DatasetSummary,
) -> Result<f64> {
    let mut max = f64::NEG_INFINITY;
    let lls: Vec<f64> = theta_hats
        .iter_rows()
        .map(|th| {
            let ll = model.log_likelihood_summary(th, summary)?;
            max = max.max(ll);
            Ok(ll)
        })
        .collect::<Result<_>>()?;
    Ok(max + lls.iter().map(|l| (l - max).exp()).sum::<f64>().ln())
}

/// Core estimate with the denominator's parameter set supplied by the
/// caller: `(1/J) sum_j [log p(D_j|theta0) - log sum_s p(D_j|theta_s)]` with
/// datasets drawn from `theta0` and the one fixed set shared by every
/// dataset. Exposed separately so the algebraic cancellation when every
/// `theta_s` equals `theta0` can be checked exactly.
pub fn berger_log_prior_given(
    model: &LikelihoodModel,
    theta0: &[f64],
    theta_hats: &SampleBatch,
    j: usize,
    n: usize,
    rng: &mut SeedStream,
) -> Result<f64> {
    if j == 0 || n == 0 {
        return Err(Error::Argument("berger estimate needs j >= 1 and n >= 1".into()));
    }
    if theta_hats.rows() == 0 {
        return Err(Error::Argument("berger estimate needs at least one parameter sample".into()));
    }
    model.check_param(theta0)?;
    let mut acc = 0.0;
    for _ in 0..j {
        let data = model.sample_dataset(theta0, n, rng)?;
        let summary = model.summarize(&data)?;
        let l0 = model.log_likelihood_summary(theta0, &summary)?;
        acc += l0 - lse_over_hats(model, theta_hats, &summary)?;
    }
    Ok(acc / j as f64)
}

/// Log of the estimated objective-prior density at `theta0`. The
/// denominator's S parameter values are redrawn uniformly from the bounds for
/// every dataset, so the J averaged terms are independent draws of the same
/// log-ratio and the estimate settles as J grows. Reusing one set across all
/// datasets would leave the estimate hostage to that single draw no matter
/// how large J is.
pub fn berger_log_prior_at(
    model: &LikelihoodModel,
    theta0: &[f64],
    cfg: &BergerConfig,
    rng: &mut SeedStream,
) -> Result<f64> {
    cfg.validate()?;
    if theta0.len() != cfg.bounds.len() {
        return Err(Error::Argument(format!(
            "theta0 has {} dims, bounds cover {}",
            theta0.len(),
            cfg.bounds.len()
        )));
    }
    for (d, (&t, &(lo, hi))) in theta0.iter().zip(&cfg.bounds).enumerate() {
        if !(lo..=hi).contains(&t) {
            return Err(Error::Domain(format!(
                "theta0[{}] = {} outside bounds ({}, {})",
                d, t, lo, hi
            )));
        }
    }
    let mut acc = 0.0;
    for _ in 0..cfg.j {
        let hats = uniform_sampler(&cfg.bounds, cfg.s, rng, "berger-hats", 0)?;
        let data = model.sample_dataset(theta0, cfg.n, rng)?;
        let summary = model.summarize(&data)?;
        let l0 = model.log_likelihood_summary(theta0, &summary)?;
        acc += l0 - lse_over_hats(model, &hats, &summary)?;
    }
    Ok(acc / cfg.j as f64)
}

/// Estimate on `cfg.grid` evenly spaced points over the bounds, normalized to
/// a samplable distribution. Each point runs on its own deterministic
/// sub-stream so the grid parallelizes without changing results.
pub fn berger_grid_sampler(
    model: &LikelihoodModel,
    cfg: &BergerConfig,
    seed: u64,
) -> Result<DiscreteGridDistribution> {
    cfg.validate()?;
    if model.param_dim() != 1 || cfg.bounds.len() != 1 {
        return Err(Error::Argument("grid estimation covers one-dimensional parameters".into()));
    }
    let (lo, hi) = cfg.bounds[0];
    let points = linspace(lo, hi, cfg.grid);
    let logs: Vec<Result<f64>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut sub = stream(seed, BERGER_POINT_STREAM + i as u64);
            berger_log_prior_at(model, &[x], cfg, &mut sub)
        })
        .collect();
    let logs: Vec<f64> = logs.into_iter().collect::<Result<_>>()?;
    DiscreteGridDistribution::from_log_weights(points, logs)
}

/// `n` i.i.d. draws from the flat prior over the bounds.
pub fn uniform_sampler(
    bounds: &[(f64, f64)],
    n: usize,
    rng: &mut SeedStream,
    method: &str,
    seed: u64,
) -> Result<SampleBatch> {
    check_bounds(bounds)?;
    let dims = bounds.len();
    let mut values = Vec::with_capacity(n * dims);
    for _ in 0..n {
        for &(lo, hi) in bounds {
            values.push(lo + (hi - lo) * rng.gen::<f64>());
        }
    }
    SampleBatch::from_flat(values, n, dims, method, seed)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    /// Chain iterations; each runs `s_t` proposal steps under a fixed target.
    pub iterations: usize,
    /// Proposals per iteration; the resulting states feed the W update.
    pub s_t: usize,
    /// Sample-space grid resolution for continuous or unbounded families.
    pub x_grid: usize,
    /// Iteration-end states returned, taken from the end of the run.
    pub keep: usize,
    pub bounds: Vec<(f64, f64)>,
    /// Also return the per-iteration W increments (for recursion checks).
    pub record_fields: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 10_000,
            s_t: 50,
            x_grid: 1000,
            keep: 1000,
            bounds: vec![(1e-3, 1.0 - 1e-3)],
            record_fields: false,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.keep == 0 || self.s_t == 0 || self.x_grid == 0 {
            return Err(Error::Config("mcmc counts must all be >= 1".into()));
        }
        if self.iterations < self.keep {
            return Err(Error::Config(format!(
                "cannot keep {} samples from {} iterations",
                self.keep, self.iterations
            )));
        }
        check_bounds(&self.bounds)?;
        if self.bounds.len() != 1 {
            return Err(Error::Config("the chain covers one-dimensional parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct McmcResult {
    pub samples: SampleBatch,
    /// Discretized sample space the accumulated field lives on.
    pub x_points: Vec<f64>,
    /// Accumulated log-mean-likelihood field over the sample-space grid.
    pub final_w: Vec<f64>,
    pub stage_fields: Option<Vec<Vec<f64>>>,
}

/// Discretized sample space: evaluation points and quadrature weights.
struct XGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

fn x_grid(model: &LikelihoodModel, bounds: (f64, f64), g: usize) -> Result<XGrid> {
    let (lo, hi) = bounds;
    Ok(match model.kind() {
        ModelKind::BernoulliMean => {
            XGrid { points: vec![0.0, 1.0], weights: vec![1.0, 1.0] }
        }
        ModelKind::PoissonRate => {
            let points: Vec<f64> = (0..g).map(|k| k as f64).collect();
            XGrid { weights: vec![1.0; points.len()], points }
        }
        ModelKind::GaussianMean { sigma } => gaussian_x_grid(lo - 6.0 * sigma, hi + 6.0 * sigma, g),
        ModelKind::GaussianScale { mu } => {
            let sigma_max = hi;
            gaussian_x_grid(mu - 6.0 * sigma_max, mu + 6.0 * sigma_max, g)
        }
    })
}

fn gaussian_x_grid(lo: f64, hi: f64, g: usize) -> XGrid {
    let points = linspace(lo, hi, g);
    let dx = if g > 1 { (hi - lo) / (g - 1) as f64 } else { hi - lo };
    let mut weights = vec![dx; g];
    if g > 1 {
        weights[0] = dx / 2.0;
        weights[g - 1] = dx / 2.0;
    }
    XGrid { points, weights }
}

/// Likelihood of every grid point under `theta`, in linear space.
fn density_row(model: &LikelihoodModel, theta: f64, grid: &XGrid) -> Vec<f64> {
    match model.kind() {
        ModelKind::BernoulliMean => vec![1.0 - theta, theta],
        ModelKind::PoissonRate => {
            let lam = theta;
            let mut row = Vec::with_capacity(grid.points.len());
            let mut p = (-lam).exp();
            for k in 0..grid.points.len() {
                row.push(p);
                p *= lam / (k + 1) as f64;
            }
            row
        }
        ModelKind::GaussianMean { sigma } => gaussian_row(&grid.points, theta, sigma),
        ModelKind::GaussianScale { mu } => gaussian_row(&grid.points, mu, theta),
    }
}

fn gaussian_row(points: &[f64], m: f64, sigma: f64) -> Vec<f64> {
    let c = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let inv = 1.0 / (2.0 * sigma * sigma);
    points
        .iter()
        .map(|&x| {
            let d = x - m;
            c * (-d * d * inv).exp()
        })
        .collect()
}

fn quad_dot(grid: &XGrid, w: &[f64], row: &[f64]) -> f64 {
    grid.weights
        .iter()
        .zip(w)
        .zip(row)
        .map(|((&q, &wi), &ri)| q * wi * ri)
        .sum()
}

/// Acceptance log-ratio of the chain at iteration `t`, proposing a move from
/// the current state to `prop`: `t (H_cur - H_prop) + (dot_cur - dot_prop)`,
/// where each dot is the quadrature sum of `W(x) p(x|theta)`. Identical
/// states give exactly zero.
pub fn lw_accept_log_ratio(
    t: f64,
    h_cur: f64,
    dot_cur: f64,
    h_prop: f64,
    dot_prop: f64,
) -> f64 {
    t * (h_cur - h_prop) + (dot_cur - dot_prop)
}

/// Lafferty-Wasserman iterative sampler. Iteration `t` (counting from zero)
/// runs `s_t` Metropolis-Hastings steps with uniform proposals under the
/// target exponent `-t H(theta) - sum_x dx W(x) p(x|theta)`; iteration zero
/// is therefore uniform. Afterwards the iteration's chain states update
/// `W(x) += ln((1/s_t) sum_states p(x|state))`, floored where the mean
/// underflows so `W` stays finite. Iteration-end states are collected and the
/// last `keep` of them returned.
pub fn lw_mcmc(model: &LikelihoodModel, cfg: &McmcConfig, seed: u64) -> Result<McmcResult> {
    cfg.validate()?;
    if model.param_dim() != 1 {
        return Err(Error::Argument("the chain covers one-dimensional parameters".into()));
    }
    let (lo, hi) = cfg.bounds[0];
    let grid = x_grid(model, (lo, hi), cfg.x_grid)?;
    let g = grid.points.len();
    let mut rng = stream(seed, 5);
    let mut cur = lo + (hi - lo) * rng.gen::<f64>();
    model.check_param(&[cur])?;
    let mut cur_row = density_row(model, cur, &grid);
    let mut cur_h = model.entropy_per_obs(&[cur])?;
    let mut w = vec![0.0; g];
    let mut kept = Vec::with_capacity(cfg.iterations);
    let mut fields: Option<Vec<Vec<f64>>> =
        if cfg.record_fields { Some(Vec::with_capacity(cfg.iterations)) } else { None };
    for t in 0..cfg.iterations {
        let tf = t as f64;
        let mut dot_cur = quad_dot(&grid, &w, &cur_row);
        let mut sum_row = vec![0.0; g];
        let mut pending = 0u32; // steps spent at the current state this iteration
        for _ in 0..cfg.s_t {
            let prop = lo + (hi - lo) * rng.gen::<f64>();
            let prop_row = density_row(model, prop, &grid);
            let prop_h = model.entropy_per_obs(&[prop])?;
            let dot_prop = quad_dot(&grid, &w, &prop_row);
            let log_ratio = lw_accept_log_ratio(tf, cur_h, dot_cur, prop_h, dot_prop);
            let u: f64 = rng.gen();
            if log_ratio >= 0.0 || u.ln() < log_ratio {
                flush_state(&mut sum_row, &cur_row, pending);
                pending = 0;
                cur = prop;
                cur_row = prop_row;
                cur_h = prop_h;
                dot_cur = dot_prop;
            }
            pending += 1;
        }
        flush_state(&mut sum_row, &cur_row, pending);
        let s_t = cfg.s_t as f64;
        let mut field = Vec::with_capacity(g);
        for (wi, &si) in w.iter_mut().zip(&sum_row) {
            let f = (si / s_t).ln().max(W_FLOOR);
            *wi += f;
            field.push(f);
        }
        if let Some(fs) = fields.as_mut() {
            fs.push(field);
        }
        kept.push(cur);
    }
    let tail = kept.split_off(kept.len() - cfg.keep);
    let samples = SampleBatch::from_flat(tail, cfg.keep, 1, "mcmc", seed)?;
    Ok(McmcResult { samples, x_points: grid.points, final_w: w, stage_fields: fields })
}

fn flush_state(sum_row: &mut [f64], row: &[f64], count: u32) {
    if count == 0 {
        return;
    }
    let c = count as f64;
    for (acc, &r) in sum_row.iter_mut().zip(row) {
        *acc += c * r;
    }
}
