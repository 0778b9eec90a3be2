//! Amortized Stein variational gradient descent.
//!
//! Particles drawn from the sampler are pushed along the Stein direction
//! `phi_j = (1/K) sum_k [kappa(x_k, x_j) g_k + grad_{x_k} kappa(x_k, x_j)]`,
//! where `g` is the gradient of the information objective (mean KL divergence
//! against fresh prior samples) and the kernel-gradient term repels particles
//! from each other. The sampler is then regressed onto the shifted particles:
//! one AdaM step on `L(lambda) = ||g(lambda, eps) - stop(theta + eta phi)||^2`,
//! whose gradient at the current lambda is `-2 eta phi` pulled back through
//! the sampler. With a single particle and an RBF kernel the direction equals
//! the raw gradient, recovering plain stochastic gradient ascent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::batch::{NoiseBatch, SampleBatch};
use crate::error::{Error, Result};
use crate::models::LikelihoodModel;
use crate::optim::AdamState;
use crate::priors::Prior;
use crate::rng::stream;
use crate::trace::TrainTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Rbf,
    /// Reproducing kernel of the first-order Sobolev space on [0, 1]:
    /// `kappa(x, y) = cosh(a min) cosh(a (1 - max)) / (a sinh a)`, `a = 1/l`.
    /// One-dimensional, arguments restricted to the open unit interval.
    Sobolev01,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthScale {
    /// Median-of-pairwise-distances heuristic, recomputed on every particle
    /// set. RBF only.
    Median,
    /// For RBF, the squared-distance denominator `h` directly; for Sobolev01,
    /// the length scale `l` with `a = 1/l`.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kernel {
    pub kind: KernelKind,
    pub length_scale: LengthScale,
    /// Evaluate the kernel on log-mapped particles (for positive parameter
    /// domains), applying the chain rule to the kernel gradient on the way
    /// back.
    #[serde(default)]
    pub log_space: bool,
}

impl Kernel {
    pub fn rbf_median() -> Self {
        Kernel { kind: KernelKind::Rbf, length_scale: LengthScale::Median, log_space: false }
    }

    pub fn rbf_median_log() -> Self {
        Kernel { kind: KernelKind::Rbf, length_scale: LengthScale::Median, log_space: true }
    }

    pub fn sobolev(length_scale: f64) -> Self {
        Kernel {
            kind: KernelKind::Sobolev01,
            length_scale: LengthScale::Fixed(length_scale),
            log_space: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let LengthScale::Fixed(v) = self.length_scale {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("length scale must be positive, got {}", v)));
            }
        }
        if self.kind == KernelKind::Sobolev01 {
            if self.length_scale == LengthScale::Median {
                return Err(Error::Config(
                    "median heuristic applies to rbf; sobolev01 needs a fixed length scale".into(),
                ));
            }
            if self.log_space {
                return Err(Error::Config("sobolev01 lives on (0,1); log_space does not apply".into()));
            }
        }
        Ok(())
    }

    /// Fix the bandwidth against a concrete particle set, mapping to log
    /// space first when configured. All evaluations then share the resolved
    /// scale.
    pub fn resolve(&self, particles: &SampleBatch) -> Result<ResolvedKernel> {
        self.validate()?;
        let rows = self.mapped_rows(particles)?;
        let h = match (self.kind, self.length_scale) {
            (KernelKind::Rbf, LengthScale::Median) => {
                if rows.len() < 2 {
                    1.0 // kappa(x,x) and its gradient do not depend on h
                } else {
                    median_heuristic(&rows)?
                }
            }
            (KernelKind::Rbf, LengthScale::Fixed(h)) => h,
            (KernelKind::Sobolev01, LengthScale::Fixed(l)) => l,
            (KernelKind::Sobolev01, LengthScale::Median) => unreachable!("rejected by validate"),
        };
        Ok(ResolvedKernel { kind: self.kind, log_space: self.log_space, h })
    }

    fn mapped_rows(&self, particles: &SampleBatch) -> Result<Vec<Vec<f64>>> {
        particles
            .iter_rows()
            .map(|r| {
                if self.log_space {
                    r.iter()
                        .map(|&x| {
                            if x <= 0.0 {
                                return Err(Error::Domain(format!(
                                    "log-space kernel needs positive particles, got {}",
                                    x
                                )));
                            }
                            Ok(x.ln())
                        })
                        .collect()
                } else {
                    Ok(r.to_vec())
                }
            })
            .collect()
    }
}

/// A kernel with its bandwidth pinned; evaluations take particles in the
/// original parameter space.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedKernel {
    kind: KernelKind,
    log_space: bool,
    h: f64,
}

impl ResolvedKernel {
    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.log_space {
            return Ok(x.to_vec());
        }
        x.iter()
            .map(|&v| {
                if v <= 0.0 {
                    Err(Error::Domain(format!("log-space kernel needs positive particles, got {}", v)))
                } else {
                    Ok(v.ln())
                }
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Argument("kernel arguments differ in dimension".into()));
        }
        let (u, v) = (self.map(x)?, self.map(y)?);
        match self.kind {
            KernelKind::Rbf => {
                let sq: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((-sq / self.h).exp())
            }
            KernelKind::Sobolev01 => {
                let (x, y) = sobolev_args(&u, &v)?;
                let a = 1.0 / self.h;
                Ok((a * x.min(y)).cosh() * (a * (1.0 - x.max(y))).cosh() / (a * a.sinh()))
            }
        }
    }

    /// Gradient of `eval` in its first argument, in the original particle
    /// space. At the Sobolev kernel's diagonal kink the two one-sided
    /// derivatives are averaged.
    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        if x.len() != y.len() {
            return Err(Error::Argument("kernel arguments differ in dimension".into()));
        }
        let (u, v) = (self.map(x)?, self.map(y)?);
        let mut grad = match self.kind {
            KernelKind::Rbf => {
                let sq: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
                let k = (-sq / self.h).exp();
                u.iter().zip(&v).map(|(a, b)| -2.0 * (a - b) / self.h * k).collect::<Vec<f64>>()
            }
            KernelKind::Sobolev01 => {
                let (px, py) = sobolev_args(&u, &v)?;
                let a = 1.0 / self.h;
                let g = if px < py {
                    (a * px).sinh() * (a * (1.0 - py)).cosh() / a.sinh()
                } else if px > py {
                    -(a * py).cosh() * (a * (1.0 - px)).sinh() / a.sinh()
                } else {
                    (a * (2.0 * px - 1.0)).sinh() / (2.0 * a.sinh())
                };
                vec![g]
            }
        };
        if self.log_space {
            for (g, &xi) in grad.iter_mut().zip(x) {
                *g /= xi;
            }
        }
        Ok(grad)
    }
}

fn sobolev_args(u: &[f64], v: &[f64]) -> Result<(f64, f64)> {
    if u.len() != 1 {
        return Err(Error::Argument("sobolev01 kernel is one-dimensional".into()));
    }
    let (x, y) = (u[0], v[0]);
    if !(0.0 < x && x < 1.0 && 0.0 < y && y < 1.0) {
        return Err(Error::Domain(format!("sobolev01 needs arguments in (0,1), got {} and {}", x, y)));
    }
    Ok((x, y))
}

/// Bandwidth heuristic `h = med^2 / ln K` over pairwise Euclidean distances,
/// with `ln K` floored at `ln 2` and the result floored at 1e-8 so coincident
/// particles stay usable.
pub fn median_heuristic(rows: &[Vec<f64>]) -> Result<f64> {
    let k = rows.len();
    if k < 2 {
        return Err(Error::Argument("median heuristic needs at least 2 particles".into()));
    }
    let mut dists = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let sq: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            dists.push(sq.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let mid = dists.len() / 2;
    let med = if dists.len() % 2 == 1 { dists[mid] } else { (dists[mid - 1] + dists[mid]) / 2.0 };
    let ln_k = (k as f64).ln().max(std::f64::consts::LN_2);
    Ok((med * med / ln_k).max(1e-8))
}

/// Gradient in `theta_bar` of the information objective
/// `N (1/S) sum_s KLD[p(.|theta_bar) || p(.|theta_hat_s)]`, with the sampled
/// batch held constant.
pub fn grad_log_f(
    model: &LikelihoodModel,
    theta_bar: &[f64],
    samples: &SampleBatch,
    n: usize,
) -> Result<Vec<f64>> {
    if samples.rows() == 0 {
        return Err(Error::Argument("grad_log_f needs at least one prior sample".into()));
    }
    let mut acc = vec![0.0; theta_bar.len()];
    for s in samples.iter_rows() {
        let (ga, _) = model.kld_grad_per_obs(theta_bar, s)?;
        for (a, g) in acc.iter_mut().zip(&ga) {
            *a += g;
        }
    }
    let scale = n as f64 / samples.rows() as f64;
    for a in acc.iter_mut() {
        *a *= scale;
    }
    Ok(acc)
}

/// Particles with the noise that generated them and the inner step size.
#[derive(Debug, Clone)]
pub struct ParticleState {
    pub particles: SampleBatch,
    pub noise: NoiseBatch,
    pub eta: f64,
}

impl ParticleState {
    pub fn new(particles: SampleBatch, noise: NoiseBatch, eta: f64) -> Result<Self> {
        if particles.rows() != noise.rows() {
            return Err(Error::Argument(format!(
                "{} particles but {} noise rows",
                particles.rows(),
                noise.rows()
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Argument(format!("eta must be positive, got {}", eta)));
        }
        Ok(ParticleState { particles, noise, eta })
    }
}

/// The Stein update direction for every particle.
pub fn svgd_direction(
    particles: &SampleBatch,
    kernel: &Kernel,
    gradients: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let k = particles.rows();
    let d = particles.dim();
    if gradients.len() != k || gradients.iter().any(|g| g.len() != d) {
        return Err(Error::Argument("gradient shape does not match particles".into()));
    }
    let resolved = kernel.resolve(particles)?;
    let phi: Vec<Result<Vec<f64>>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let xj = particles.row(j);
            let mut acc = vec![0.0; d];
            for i in 0..k {
                let xi = particles.row(i);
                let kv = resolved.eval(xi, xj)?;
                let kg = resolved.grad_x(xi, xj)?;
                for dd in 0..d {
                    acc[dd] += kv * gradients[i][dd] + kg[dd];
                }
            }
            for a in acc.iter_mut() {
                *a /= k as f64;
            }
            Ok(acc)
        })
        .collect();
    phi.into_iter().collect()
}

/// Squared norm of the scaled direction, `||eta phi||^2`: the trace objective
/// that vanishes at the method's fixed point.
pub fn direction_sq_norm(phi: &[Vec<f64>], eta: f64) -> f64 {
    phi.iter().flat_map(|row| row.iter()).map(|v| (eta * v) * (eta * v)).sum()
}

/// Regression loss of the sampler against fixed targets.
pub fn amortized_loss(prior: &Prior, noise: &NoiseBatch, targets: &[Vec<f64>]) -> Result<f64> {
    if targets.len() != noise.rows() {
        return Err(Error::Argument("one target per noise row required".into()));
    }
    let mut loss = 0.0;
    for (i, t) in targets.iter().enumerate() {
        let out = prior.transform(noise.row(i))?;
        if out.len() != t.len() {
            return Err(Error::Argument("target width does not match sampler output".into()));
        }
        loss += out.iter().zip(t).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
    }
    Ok(loss)
}

/// Gradient in lambda of the regression loss at the point where the sampler
/// still reproduces the particles: each particle contributes `-2 eta phi_j`
/// pulled back through the sampler.
pub fn amortized_gradient(
    prior: &Prior,
    noise: &NoiseBatch,
    phi: &[Vec<f64>],
    eta: f64,
) -> Result<Vec<f64>> {
    if phi.len() != noise.rows() {
        return Err(Error::Argument("one direction per noise row required".into()));
    }
    let mut grad = vec![0.0; prior.lambda().len()];
    for (j, p) in phi.iter().enumerate() {
        let cot: Vec<f64> = p.iter().map(|v| -2.0 * eta * v).collect();
        let g = prior.vjp_lambda(noise.row(j), &cot)?;
        for (acc, v) in grad.iter_mut().zip(&g) {
            *acc += v;
        }
    }
    for (i, g) in grad.iter().enumerate() {
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("amortized gradient[{}] = {} is not finite", i, g)));
        }
    }
    Ok(grad)
}

/// One AdaM descent step of the regression loss on the sampler's lambda.
pub fn amortized_step(
    prior: &mut Prior,
    noise: &NoiseBatch,
    phi: &[Vec<f64>],
    eta: f64,
    adam: &mut AdamState,
) -> Result<()> {
    let grad = amortized_gradient(prior, noise, phi, eta)?;
    let mut lambda = prior.lambda().to_vec();
    adam.step(&mut lambda, &grad)?;
    prior.set_lambda(lambda)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvgdConfig {
    /// Particles per update.
    pub k: usize,
    /// Prior samples per `grad_log_f` evaluation.
    pub s: usize,
    /// Dataset-size multiplier inside the objective gradient.
    pub n: usize,
    /// Outer iterations; the trace has one row per iteration.
    pub iterations: usize,
    /// Optimizer updates per iteration, each from fresh particles.
    pub batch: usize,
    pub lr: f64,
    /// Inner Stein step size applied to the particles before regression.
    pub eta: f64,
    pub kernel: Kernel,
    pub snapshot_every: usize,
}

impl Default for SvgdConfig {
    fn default() -> Self {
        SvgdConfig {
            k: 50,
            s: 50,
            n: 1,
            iterations: 250,
            batch: 100,
            lr: 1e-4,
            eta: 0.1,
            kernel: Kernel::rbf_median(),
            snapshot_every: 0,
        }
    }
}

impl SvgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.s == 0 {
            return Err(Error::Config("k and s must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        self.kernel.validate()
    }
}

/// Amortized training loop. One iteration runs `cfg.batch` updates; each
/// draws `k` particles and `s` reference samples from the current sampler,
/// forms the Stein direction against the objective gradient, and regresses
/// the sampler onto the shifted particles. The trace records `||eta phi||^2`
/// at the start of each iteration.
pub fn train_svgd(
    model: &LikelihoodModel,
    mut prior: Prior,
    cfg: &SvgdConfig,
    seed: u64,
) -> Result<(Prior, TrainTrace)> {
    cfg.validate()?;
    if prior.out_dim() != model.param_dim() {
        return Err(Error::Argument(format!(
            "prior outputs {} dims, model expects {}",
            prior.out_dim(),
            model.param_dim()
        )));
    }
    let mut particle_rng = stream(seed, 3);
    let mut ref_rng = stream(seed, 4);
    let mut adam = AdamState::new(prior.lambda().len(), cfg.lr)?;
    let mut trace = TrainTrace::new(cfg.snapshot_every);
    let start = Instant::now();
    for iteration in 0..cfg.iterations {
        let mut first_objective = f64::NAN;
        for update in 0..cfg.batch {
            let step = (|| -> Result<f64> {
                let (noise, particles) =
                    prior.sample_batch(cfg.k, &mut particle_rng, "particle", seed)?;
                let (_, refs) = prior.sample_batch(cfg.s, &mut ref_rng, "particle", seed)?;
                let grads: Vec<Result<Vec<f64>>> = (0..cfg.k)
                    .into_par_iter()
                    .map(|j| grad_log_f(model, particles.row(j), &refs, cfg.n))
                    .collect();
                let grads: Vec<Vec<f64>> = grads.into_iter().collect::<Result<_>>()?;
                let phi = svgd_direction(&particles, &cfg.kernel, &grads)?;
                let objective = direction_sq_norm(&phi, cfg.eta);
                if !objective.is_finite() {
                    return Err(Error::NonFinite(format!("direction norm {}", objective)));
                }
                amortized_step(&mut prior, &noise, &phi, cfg.eta, &mut adam)?;
                Ok(objective)
            })()
            .map_err(|e| at_iteration(iteration, e))?;
            if update == 0 {
                first_objective = step;
            }
        }
        trace.record(
            iteration,
            first_objective,
            start.elapsed().as_secs_f64() * 1e3,
            prior.lambda(),
        );
    }
    Ok((prior, trace))
}

/// Inputs were validated before the loop started, so a domain or finiteness
/// error surfacing mid-training means the optimization itself degenerated;
/// both are reported as numeric failures with the iteration attached.
fn at_iteration(iteration: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(m) | Error::Domain(m) => {
            Error::NonFinite(format!("iteration {}: {}", iteration, m))
        }
        other => other,
    }
}
