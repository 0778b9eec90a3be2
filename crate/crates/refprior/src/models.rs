//! Likelihood families with closed-form information quantities.
//!
//! Four one-parameter families drive everything downstream: Bernoulli success
//! probability, Gaussian location with fixed scale, Gaussian scale with fixed
//! location (optionally diagonal multivariate), and Poisson rate. Each exposes
//! dataset sampling, log-likelihood, per-observation entropy and KL
//! divergence, the KL gradient in both arguments, and the unnormalized
//! density of its objective (Jeffreys) prior. The KL divergences are the hot
//! path of both training methods and are all closed-form; Poisson entropy is
//! the one quantity computed by truncated series.

use rand::Rng;
use rand_distr::{Binomial, ChiSquared, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Most-negative finite value, returned by [`LikelihoodModel::log_likelihood`]
/// for datasets with zero probability. Keeps downstream max/argmax comparisons
/// well defined where a raw `-inf` could combine into NaN.
pub const LOG_ZERO: f64 = f64::MIN;

const LN_2PI: f64 = 1.8378770664093453; // ln(2*pi)

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    BernoulliMean,
    GaussianMean { sigma: f64 },
    GaussianScale { mu: f64 },
    PoissonRate,
}

/// A likelihood family together with its parameter dimensionality.
/// `dims > 1` is only meaningful for `GaussianScale`, where the parameter is a
/// vector of per-coordinate scales and observations are vectors of the same
/// width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodModel {
    kind: ModelKind,
    dims: usize,
}

/// Observations stored flat, `n * obs_dim` values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub values: Vec<f64>,
    pub n: usize,
}

impl Dataset {
    pub fn concat(&self, other: &Dataset) -> Dataset {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Dataset { values, n: self.n + other.n }
    }
}

/// Sufficient statistics of a dataset under one family. Evaluating the
/// log-likelihood through the summary is O(dims) instead of O(n), which is
/// what makes the grid-based estimators affordable.
#[derive(Debug, Clone)]
pub enum DatasetSummary {
    Bernoulli { n: f64, ones: f64 },
    GaussianMean { n: f64, sum: f64, sum_sq: f64 },
    GaussianScale { n: f64, sum_sq: Vec<f64> },
    Poisson { n: f64, sum: f64, sum_ln_fact: f64 },
}

/// On-disk model descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default = "one")]
    pub dims: usize,
}

fn one() -> usize {
    1
}

impl LikelihoodModel {
    pub fn bernoulli_mean() -> Self {
        LikelihoodModel { kind: ModelKind::BernoulliMean, dims: 1 }
    }

    pub fn gaussian_mean(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!("gaussian mean model needs sigma > 0, got {}", sigma)));
        }
        Ok(LikelihoodModel { kind: ModelKind::GaussianMean { sigma }, dims: 1 })
    }

    pub fn gaussian_scale(mu: f64, dims: usize) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::Argument("gaussian scale model needs finite mu".into()));
        }
        if dims == 0 {
            return Err(Error::Argument("gaussian scale model needs dims >= 1".into()));
        }
        Ok(LikelihoodModel { kind: ModelKind::GaussianScale { mu }, dims })
    }

    pub fn poisson_rate() -> Self {
        LikelihoodModel { kind: ModelKind::PoissonRate, dims: 1 }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Dimensionality of the parameter vector.
    pub fn param_dim(&self) -> usize {
        self.dims
    }

    /// Dimensionality of a single observation.
    pub fn obs_dim(&self) -> usize {
        match self.kind {
            ModelKind::GaussianScale { .. } => self.dims,
            _ => 1,
        }
    }

    /// Whether `theta` is a valid parameter. Bernoulli admits the closed
    /// interval [0, 1]: the endpoints are degenerate but well-defined
    /// distributions, and sampling/likelihood handle them via sentinels.
    /// Scale and rate parameters must be strictly positive.
    pub fn check_param(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dims {
            return Err(Error::Argument(format!(
                "parameter has {} dims, model expects {}",
                theta.len(),
                self.dims
            )));
        }
        for (d, &t) in theta.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::Domain(format!("parameter[{}] = {} is not finite", d, t)));
            }
            let ok = match self.kind {
                ModelKind::BernoulliMean => (0.0..=1.0).contains(&t),
                ModelKind::GaussianMean { .. } => true,
                ModelKind::GaussianScale { .. } | ModelKind::PoissonRate => t > 0.0,
            };
            if !ok {
                return Err(Error::Domain(format!("parameter[{}] = {} outside domain", d, t)));
            }
        }
        Ok(())
    }

    /// Like `check_param` but excludes the Bernoulli endpoints, where the
    /// Jeffreys density and the KL gradients are undefined.
    pub fn check_param_interior(&self, theta: &[f64]) -> Result<()> {
        self.check_param(theta)?;
        if let ModelKind::BernoulliMean = self.kind {
            let p = theta[0];
            if p == 0.0 || p == 1.0 {
                return Err(Error::Domain(format!("p = {} is on the boundary", p)));
            }
        }
        Ok(())
    }

    fn check_obs(&self, x: &[f64]) -> Result<()> {
        for &v in x {
            if !v.is_finite() {
                return Err(Error::Argument(format!("observation {} is not finite", v)));
            }
            match self.kind {
                ModelKind::BernoulliMean => {
                    if v != 0.0 && v != 1.0 {
                        return Err(Error::Argument(format!("bernoulli observation {} not in {{0,1}}", v)));
                    }
                }
                ModelKind::PoissonRate => {
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(Error::Argument(format!("poisson observation {} not a count", v)));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Draw `n` i.i.d. observations from the likelihood at `theta`.
    pub fn sample_dataset(&self, theta: &[f64], n: usize, rng: &mut SeedStream) -> Result<Dataset> {
        self.check_param(theta)?;
        let mut values = Vec::with_capacity(n * self.obs_dim());
        match self.kind {
            ModelKind::BernoulliMean => {
                let p = theta[0];
                for _ in 0..n {
                    values.push(if rng.gen::<f64>() < p { 1.0 } else { 0.0 });
                }
            }
            ModelKind::GaussianMean { sigma } => {
                let mu = theta[0];
                for _ in 0..n {
                    let z: f64 = StandardNormal.sample(rng);
                    values.push(mu + sigma * z);
                }
            }
            ModelKind::GaussianScale { mu } => {
                for _ in 0..n {
                    for &s in theta {
                        let z: f64 = StandardNormal.sample(rng);
                        values.push(mu + s * z);
                    }
                }
            }
            ModelKind::PoissonRate => {
                let pois = Poisson::new(theta[0])
                    .map_err(|e| Error::Argument(format!("poisson rate {}: {}", theta[0], e)))?;
                for _ in 0..n {
                    let k: f64 = pois.sample(rng);
                    values.push(k);
                }
            }
        }
        Ok(Dataset { values, n })
    }

    /// Draw the sufficient summary of an `n`-observation dataset in O(1)
    /// draws instead of O(n): the count of ones is Binomial, the Poisson sum
    /// is Poisson(n*lambda), Gaussian sums of squares are scaled chi-square.
    /// The result is exchangeable with `summarize(sample_dataset(..))` for
    /// every likelihood comparison across parameters; the one statistic that
    /// is not a function of the sufficient statistic (the Poisson
    /// log-factorial term, constant in the parameter) is set to zero, so
    /// absolute Poisson log-likelihood values are offset by a dataset
    /// constant. Use the dataset path when absolute values matter.
    pub fn sample_summary(&self, theta: &[f64], n: usize, rng: &mut SeedStream) -> Result<DatasetSummary> {
        self.check_param(theta)?;
        if n == 0 {
            return Err(Error::Argument("summary of an empty dataset".into()));
        }
        let nf = n as f64;
        Ok(match self.kind {
            ModelKind::BernoulliMean => {
                let bin = Binomial::new(n as u64, theta[0])
                    .map_err(|e| Error::Argument(format!("bernoulli p {}: {}", theta[0], e)))?;
                DatasetSummary::Bernoulli { n: nf, ones: bin.sample(rng) as f64 }
            }
            ModelKind::GaussianMean { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                let sum = nf * theta[0] + sigma * nf.sqrt() * z;
                // Sum of squares decomposes as (n-1)s^2 + n*mean^2 with the
                // two parts independent, so the residual part is chi-square
                // with n-1 degrees of freedom (zero when n = 1).
                let resid = if n > 1 {
                    let chi = ChiSquared::new(nf - 1.0)
                        .map_err(|e| Error::Argument(format!("chi-square dof {}: {}", nf - 1.0, e)))?;
                    sigma * sigma * chi.sample(rng)
                } else {
                    0.0
                };
                DatasetSummary::GaussianMean { n: nf, sum, sum_sq: resid + sum * sum / nf }
            }
            ModelKind::GaussianScale { .. } => {
                let chi = ChiSquared::new(nf)
                    .map_err(|e| Error::Argument(format!("chi-square dof {}: {}", nf, e)))?;
                let sum_sq = theta.iter().map(|s| s * s * chi.sample(rng)).collect();
                DatasetSummary::GaussianScale { n: nf, sum_sq }
            }
            ModelKind::PoissonRate => {
                let pois = Poisson::new(nf * theta[0])
                    .map_err(|e| Error::Argument(format!("poisson rate {}: {}", nf * theta[0], e)))?;
                let sum: f64 = pois.sample(rng);
                DatasetSummary::Poisson { n: nf, sum, sum_ln_fact: 0.0 }
            }
        })
    }

    /// Reduce a dataset to its sufficient statistics, validating observations.
    pub fn summarize(&self, data: &Dataset) -> Result<DatasetSummary> {
        let d = self.obs_dim();
        if data.values.len() != data.n * d {
            return Err(Error::Argument(format!(
                "dataset holds {} values for {} observations of width {}",
                data.values.len(),
                data.n,
                d
            )));
        }
        self.check_obs(&data.values)?;
        let n = data.n as f64;
        Ok(match self.kind {
            ModelKind::BernoulliMean => {
                let ones = data.values.iter().sum();
                DatasetSummary::Bernoulli { n, ones }
            }
            ModelKind::GaussianMean { .. } => {
                let sum: f64 = data.values.iter().sum();
                let sum_sq: f64 = data.values.iter().map(|x| x * x).sum();
                DatasetSummary::GaussianMean { n, sum, sum_sq }
            }
            ModelKind::GaussianScale { mu } => {
                let mut sum_sq = vec![0.0; d];
                for obs in data.values.chunks_exact(d) {
                    for (acc, &x) in sum_sq.iter_mut().zip(obs) {
                        let c = x - mu;
                        *acc += c * c;
                    }
                }
                DatasetSummary::GaussianScale { n, sum_sq }
            }
            ModelKind::PoissonRate => {
                let sum: f64 = data.values.iter().sum();
                let sum_ln_fact: f64 = data.values.iter().map(|&k| ln_factorial(k as u64)).sum();
                DatasetSummary::Poisson { n, sum, sum_ln_fact }
            }
        })
    }

    /// Joint log-likelihood of a dataset. Returns [`LOG_ZERO`] when any
    /// observation has zero probability (Bernoulli boundary contradictions).
    pub fn log_likelihood(&self, theta: &[f64], data: &Dataset) -> Result<f64> {
        let summary = self.summarize(data)?;
        self.log_likelihood_summary(theta, &summary)
    }

    /// Log-likelihood from sufficient statistics; O(dims) per evaluation.
    pub fn log_likelihood_summary(&self, theta: &[f64], summary: &DatasetSummary) -> Result<f64> {
        self.check_param(theta)?;
        let ll = match (self.kind, summary) {
            (ModelKind::BernoulliMean, DatasetSummary::Bernoulli { n, ones }) => {
                let p = theta[0];
                let zeros = n - ones;
                if p == 0.0 {
                    if *ones > 0.0 {
                        return Ok(LOG_ZERO);
                    }
                    0.0
                } else if p == 1.0 {
                    if zeros > 0.0 {
                        return Ok(LOG_ZERO);
                    }
                    0.0
                } else {
                    ones * p.ln() + zeros * (1.0 - p).ln()
                }
            }
            (ModelKind::GaussianMean { sigma }, DatasetSummary::GaussianMean { n, sum, sum_sq }) => {
                let mu = theta[0];
                let var = sigma * sigma;
                -0.5 * n * (LN_2PI + var.ln()) - (sum_sq - 2.0 * mu * sum + n * mu * mu) / (2.0 * var)
            }
            (ModelKind::GaussianScale { .. }, DatasetSummary::GaussianScale { n, sum_sq }) => {
                if sum_sq.len() != self.dims {
                    return Err(Error::Argument("summary width does not match model dims".into()));
                }
                let mut ll = 0.0;
                for (s, ssq) in theta.iter().zip(sum_sq) {
                    ll += -0.5 * n * LN_2PI - n * s.ln() - ssq / (2.0 * s * s);
                }
                ll
            }
            (ModelKind::PoissonRate, DatasetSummary::Poisson { n, sum, sum_ln_fact }) => {
                let lam = theta[0];
                -n * lam + sum * lam.ln() - sum_ln_fact
            }
            _ => return Err(Error::Argument("dataset summary from a different family".into())),
        };
        Ok(ll)
    }

    /// Differential or discrete entropy of a single observation.
    pub fn entropy_per_obs(&self, theta: &[f64]) -> Result<f64> {
        self.check_param(theta)?;
        Ok(match self.kind {
            ModelKind::BernoulliMean => {
                let p = theta[0];
                if p == 0.0 || p == 1.0 {
                    0.0
                } else {
                    -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
                }
            }
            ModelKind::GaussianMean { sigma } => 0.5 * (LN_2PI + 1.0) + sigma.ln(),
            ModelKind::GaussianScale { .. } => {
                theta.iter().map(|s| 0.5 * (LN_2PI + 1.0) + s.ln()).sum()
            }
            ModelKind::PoissonRate => poisson_entropy(theta[0]),
        })
    }

    /// KL divergence KL(p(.|a) || p(.|b)) for one observation. Nonnegative;
    /// `+inf` when `b` sits on a Bernoulli boundary that `a` does not share.
    pub fn kld_per_obs(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_param(a)?;
        self.check_param(b)?;
        let v = match self.kind {
            ModelKind::BernoulliMean => {
                let (pa, pb) = (a[0], b[0]);
                if pb == 0.0 {
                    if pa == 0.0 { 0.0 } else { f64::INFINITY }
                } else if pb == 1.0 {
                    if pa == 1.0 { 0.0 } else { f64::INFINITY }
                } else {
                    let t1 = if pa > 0.0 { pa * (pa / pb).ln() } else { 0.0 };
                    let t2 = if pa < 1.0 { (1.0 - pa) * ((1.0 - pa) / (1.0 - pb)).ln() } else { 0.0 };
                    t1 + t2
                }
            }
            ModelKind::GaussianMean { sigma } => {
                let d = a[0] - b[0];
                d * d / (2.0 * sigma * sigma)
            }
            ModelKind::GaussianScale { .. } => {
                let mut acc = 0.0;
                for (sa, sb) in a.iter().zip(b) {
                    let r = sa / sb;
                    acc += (sb / sa).ln() + 0.5 * r * r - 0.5;
                }
                acc
            }
            ModelKind::PoissonRate => {
                let (la, lb) = (a[0], b[0]);
                la * (la / lb).ln() + lb - la
            }
        };
        // The closed forms can round a hair below zero near a == b.
        Ok(v.max(0.0))
    }

    /// Gradient of `kld_per_obs(a, b)` in both arguments.
    pub fn kld_grad_per_obs(&self, a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_param_interior(a)?;
        self.check_param_interior(b)?;
        Ok(match self.kind {
            ModelKind::BernoulliMean => {
                let (pa, pb) = (a[0], b[0]);
                let ga = (pa / pb).ln() - ((1.0 - pa) / (1.0 - pb)).ln();
                let gb = -pa / pb + (1.0 - pa) / (1.0 - pb);
                (vec![ga], vec![gb])
            }
            ModelKind::GaussianMean { sigma } => {
                let g = (a[0] - b[0]) / (sigma * sigma);
                (vec![g], vec![-g])
            }
            ModelKind::GaussianScale { .. } => {
                let mut ga = Vec::with_capacity(self.dims);
                let mut gb = Vec::with_capacity(self.dims);
                for (sa, sb) in a.iter().zip(b) {
                    ga.push(-1.0 / sa + sa / (sb * sb));
                    gb.push(1.0 / sb - sa * sa / (sb * sb * sb));
                }
                (ga, gb)
            }
            ModelKind::PoissonRate => {
                let (la, lb) = (a[0], b[0]);
                ((vec![(la / lb).ln()]), vec![1.0 - la / lb])
            }
        })
    }

    /// Unnormalized density of the family's objective (Jeffreys) prior:
    /// (p(1-p))^{-1/2}, constant, prod 1/sigma_d, lambda^{-1/2}.
    pub fn jeffreys_density_unnorm(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.jeffreys_log_unnorm(theta)?.exp())
    }

    /// Log of `jeffreys_density_unnorm`, the numerically safe form for grids.
    pub fn jeffreys_log_unnorm(&self, theta: &[f64]) -> Result<f64> {
        self.check_param_interior(theta)?;
        Ok(match self.kind {
            ModelKind::BernoulliMean => {
                let p = theta[0];
                -0.5 * (p * (1.0 - p)).ln()
            }
            ModelKind::GaussianMean { .. } => 0.0,
            ModelKind::GaussianScale { .. } => -theta.iter().map(|s| s.ln()).sum::<f64>(),
            ModelKind::PoissonRate => -0.5 * theta[0].ln(),
        })
    }

    pub fn to_spec(&self) -> ModelSpec {
        let mut params = serde_json::Map::new();
        let kind = match self.kind {
            ModelKind::BernoulliMean => "bernoulli-mean",
            ModelKind::GaussianMean { sigma } => {
                params.insert("sigma".into(), serde_json::json!(sigma));
                "gaussian-mean"
            }
            ModelKind::GaussianScale { mu } => {
                params.insert("mu".into(), serde_json::json!(mu));
                "gaussian-scale"
            }
            ModelKind::PoissonRate => "poisson-rate",
        };
        ModelSpec { kind: kind.to_string(), params, dims: self.dims }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let get = |name: &str, default: f64| -> Result<f64> {
            match spec.params.get(name) {
                None => Ok(default),
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| Error::Config(format!("model param {:?} must be a number", name))),
            }
        };
        match spec.kind.as_str() {
            "bernoulli-mean" => Ok(Self::bernoulli_mean()),
            "gaussian-mean" => Self::gaussian_mean(get("sigma", 1.0)?),
            "gaussian-scale" => Self::gaussian_scale(get("mu", 0.0)?, spec.dims),
            "poisson-rate" => Ok(Self::poisson_rate()),
            other => Err(Error::Config(format!("unknown model kind {:?}", other))),
        }
    }
}

/// ln(k!) by direct summation; exact enough for the count magnitudes that
/// Poisson datasets produce here, and free of extra dependencies.
pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Poisson entropy -sum p_k ln p_k by series, truncated once the geometric
/// bound on the remaining terms falls below 1e-10.
fn poisson_entropy(lambda: f64) -> f64 {
    let mut ln_p = -lambda; // ln p_0
    let ln_lambda = lambda.ln();
    let mut h = 0.0;
    let mut k = 0u64;
    loop {
        let p = ln_p.exp();
        if p > 0.0 {
            h -= p * ln_p;
        }
        // Past the mode, p_{k+1}/p_k = lambda/(k+1) < 1 shrinks monotonically,
        // so the tail is dominated by a geometric series; |ln p| grows by at
        // most |ln r| per term along it.
        if (k as f64) > lambda {
            let ln_p_next = ln_p + ln_lambda - ((k + 1) as f64).ln();
            let r = lambda / (k as f64 + 2.0);
            let p_next = ln_p_next.exp();
            let tail = p_next / (1.0 - r) * (ln_p_next.abs() + r / (1.0 - r) * (1.0 / r).ln().max(1.0));
            if tail < 1e-10 {
                break;
            }
        }
        k += 1;
        ln_p += ln_lambda - (k as f64).ln();
        if k > 100_000_000 {
            break; // unreachable for any rate the callers use
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    fn bern() -> LikelihoodModel {
        LikelihoodModel::bernoulli_mean()
    }
    fn gmean() -> LikelihoodModel {
        LikelihoodModel::gaussian_mean(1.0).unwrap()
    }
    fn gscale() -> LikelihoodModel {
        LikelihoodModel::gaussian_scale(0.0, 1).unwrap()
    }
    fn pois() -> LikelihoodModel {
        LikelihoodModel::poisson_rate()
    }

    #[test]
    fn degenerate_bernoulli_samples_all_ones() {
        let d = bern().sample_dataset(&[1.0], 5, &mut stream(0, 0)).unwrap();
        assert_eq!(d.values, vec![1.0; 5]);
    }

    #[test]
    fn bernoulli_boundary_contradiction_is_sentinel_not_panic() {
        let data = Dataset { values: vec![1.0, 0.0], n: 2 };
        assert_eq!(bern().log_likelihood(&[1.0], &data).unwrap(), LOG_ZERO);
        assert_eq!(bern().log_likelihood(&[0.0], &data).unwrap(), LOG_ZERO);
        let consistent = Dataset { values: vec![1.0, 1.0], n: 2 };
        assert_eq!(bern().log_likelihood(&[1.0], &consistent).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_mean_kld_is_half_squared_distance() {
        let v = gmean().kld_per_obs(&[0.0], &[2.0]).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_scale_kld_known_value() {
        let v = gscale().kld_per_obs(&[1.0], &[2.0]).unwrap();
        assert_relative_eq!(v, std::f64::consts::LN_2 + 0.125 - 0.5, max_relative = 1e-12);
    }

    #[test]
    fn poisson_kld_known_value() {
        let v = pois().kld_per_obs(&[2.0], &[1.0]).unwrap();
        assert_relative_eq!(v, 2.0 * std::f64::consts::LN_2 - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn poisson_entropy_at_unit_rate() {
        let h = pois().entropy_per_obs(&[1.0]).unwrap();
        assert_relative_eq!(h, 1.3049, max_relative = 5e-4);
    }

    #[test]
    fn bernoulli_kld_to_boundary_is_infinite() {
        assert_eq!(bern().kld_per_obs(&[0.3], &[1.0]).unwrap(), f64::INFINITY);
        assert_eq!(bern().kld_per_obs(&[0.3], &[0.0]).unwrap(), f64::INFINITY);
        assert_eq!(bern().kld_per_obs(&[1.0], &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn kld_nonnegative_and_zero_only_at_equality() {
        let mut rng = stream(11, 0);
        let models = [bern(), gmean(), gscale(), pois()];
        for model in models {
            for _ in 0..1000 {
                let (a, b) = match model.kind() {
                    ModelKind::BernoulliMean => {
                        (0.01 + 0.98 * rng.gen::<f64>(), 0.01 + 0.98 * rng.gen::<f64>())
                    }
                    ModelKind::GaussianMean { .. } => {
                        (4.0 * rng.gen::<f64>() - 2.0, 4.0 * rng.gen::<f64>() - 2.0)
                    }
                    _ => (0.1 + 5.0 * rng.gen::<f64>(), 0.1 + 5.0 * rng.gen::<f64>()),
                };
                let v = model.kld_per_obs(&[a], &[b]).unwrap();
                assert!(v >= 0.0, "{:?} kld({}, {}) = {}", model.kind(), a, b, v);
                if (a - b).abs() > 1e-6 {
                    assert!(v > 0.0);
                }
                assert_eq!(model.kld_per_obs(&[a], &[a]).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn kld_gradients_match_finite_differences() {
        let mut rng = stream(13, 0);
        let models = [bern(), gmean(), gscale(), pois()];
        let h = 1e-6;
        for model in models {
            for _ in 0..200 {
                let draw = |rng: &mut SeedStream| match model.kind() {
                    ModelKind::BernoulliMean => 0.05 + 0.9 * rng.gen::<f64>(),
                    ModelKind::GaussianMean { .. } => 4.0 * rng.gen::<f64>() - 2.0,
                    _ => 0.2 + 4.0 * rng.gen::<f64>(),
                };
                let (a, b) = (draw(&mut rng), draw(&mut rng));
                let (ga, gb) = model.kld_grad_per_obs(&[a], &[b]).unwrap();
                let fa = (model.kld_per_obs(&[a + h], &[b]).unwrap()
                    - model.kld_per_obs(&[a - h], &[b]).unwrap())
                    / (2.0 * h);
                let fb = (model.kld_per_obs(&[a], &[b + h]).unwrap()
                    - model.kld_per_obs(&[a], &[b - h]).unwrap())
                    / (2.0 * h);
                assert_relative_eq!(ga[0], fa, max_relative = 1e-4, epsilon = 1e-6);
                assert_relative_eq!(gb[0], fb, max_relative = 1e-4, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn multivariate_scale_kld_sums_over_dims() {
        let model = LikelihoodModel::gaussian_scale(0.0, 3).unwrap();
        let a = [1.0, 2.0, 0.5];
        let b = [0.8, 2.0, 1.1];
        let whole = model.kld_per_obs(&a, &b).unwrap();
        let uni = gscale();
        let parts: f64 = (0..3).map(|d| uni.kld_per_obs(&[a[d]], &[b[d]]).unwrap()).sum();
        assert_relative_eq!(whole, parts, max_relative = 1e-12);
    }

    #[test]
    fn log_likelihood_is_additive_over_concatenation() {
        let mut rng = stream(17, 0);
        let models = [bern(), gmean(), gscale(), pois()];
        for model in models {
            let theta = match model.kind() {
                ModelKind::BernoulliMean => vec![0.37],
                _ => vec![1.7],
            };
            let d1 = model.sample_dataset(&theta, 40, &mut rng).unwrap();
            let d2 = model.sample_dataset(&theta, 25, &mut rng).unwrap();
            let whole = model.log_likelihood(&theta, &d1.concat(&d2)).unwrap();
            let parts = model.log_likelihood(&theta, &d1).unwrap()
                + model.log_likelihood(&theta, &d2).unwrap();
            // Exact up to float re-association of the two partial sums.
            assert_relative_eq!(whole, parts, max_relative = 1e-13);
        }
    }

    #[test]
    fn summary_likelihood_matches_per_observation_formula() {
        let model = gmean();
        let data = Dataset { values: vec![0.3, -1.2, 2.5], n: 3 };
        let by_summary = model.log_likelihood(&[0.4], &data).unwrap();
        let direct: f64 = data
            .values
            .iter()
            .map(|x| {
                let d = x - 0.4;
                -0.5 * (LN_2PI) - 0.5 * d * d
            })
            .sum();
        assert_relative_eq!(by_summary, direct, max_relative = 1e-12);
    }

    #[test]
    fn sample_means_land_near_theta() {
        let mut rng = stream(23, 0);
        let n = 100_000;
        let d = bern().sample_dataset(&[0.3], n, &mut rng).unwrap();
        let mean: f64 = d.values.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 0.01, "bernoulli mean {}", mean);
        let d = pois().sample_dataset(&[3.0], n, &mut rng).unwrap();
        let mean: f64 = d.values.iter().sum::<f64>() / n as f64;
        assert!((mean - 3.0).abs() < 0.05, "poisson mean {}", mean);
        let d = gscale().sample_dataset(&[2.0], n, &mut rng).unwrap();
        let var: f64 = d.values.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var - 4.0).abs() < 0.1, "gaussian scale var {}", var);
    }

    #[test]
    fn jeffreys_densities_have_expected_shapes() {
        assert_relative_eq!(
            bern().jeffreys_density_unnorm(&[0.5]).unwrap(),
            2.0,
            max_relative = 1e-12
        );
        assert_eq!(gmean().jeffreys_density_unnorm(&[123.0]).unwrap(), 1.0);
        assert_relative_eq!(
            gscale().jeffreys_density_unnorm(&[4.0]).unwrap(),
            0.25,
            max_relative = 1e-12
        );
        let r = pois().jeffreys_density_unnorm(&[1.0]).unwrap()
            / pois().jeffreys_density_unnorm(&[4.0]).unwrap();
        assert_relative_eq!(r, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn jeffreys_rejects_boundary() {
        assert!(bern().jeffreys_density_unnorm(&[0.0]).is_err());
        assert!(bern().jeffreys_density_unnorm(&[1.0]).is_err());
    }

    #[test]
    fn out_of_domain_parameters_rejected() {
        assert!(bern().check_param(&[1.2]).is_err());
        assert!(pois().check_param(&[0.0]).is_err());
        assert!(gscale().check_param(&[-1.0]).is_err());
        assert!(gmean().check_param(&[f64::NAN]).is_err());
        assert!(bern().check_param(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn invalid_observations_rejected() {
        let data = Dataset { values: vec![0.5], n: 1 };
        assert!(bern().log_likelihood(&[0.5], &data).is_err());
        let data = Dataset { values: vec![2.5], n: 1 };
        assert!(pois().log_likelihood(&[1.0], &data).is_err());
    }

    #[test]
    fn model_spec_round_trip() {
        let m = LikelihoodModel::gaussian_scale(0.5, 4).unwrap();
        let spec = m.to_spec();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(LikelihoodModel::from_spec(&back).unwrap(), m);
        assert!(LikelihoodModel::from_spec(&ModelSpec {
            kind: "weibull".into(),
            params: Default::default(),
            dims: 1,
        })
        .is_err());
    }

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert_relative_eq!(ln_factorial(5), 120f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn sampled_summary_is_deterministic_per_seed() {
        for model in [bern(), gmean(), gscale(), pois()] {
            let theta = vec![0.4; model.param_dim()];
            let a = model.sample_summary(&theta, 17, &mut stream(9, 4)).unwrap();
            let b = model.sample_summary(&theta, 17, &mut stream(9, 4)).unwrap();
            assert_eq!(format!("{:?}", a), format!("{:?}", b));
        }
    }

    #[test]
    fn sampled_summary_matches_dataset_summary_moments() {
        // The direct sufficient-statistic draws must agree in mean and
        // variance with summaries of literally sampled datasets.
        const REPS: usize = 4000;
        const N: usize = 25;
        let cases: Vec<(LikelihoodModel, Vec<f64>)> = vec![
            (bern(), vec![0.3]),
            (gmean(), vec![-0.7]),
            (gscale(), vec![1.6]),
            (pois(), vec![2.5]),
        ];
        for (model, theta) in cases {
            let stat_of = |s: &DatasetSummary| match s {
                DatasetSummary::Bernoulli { ones, .. } => *ones,
                DatasetSummary::GaussianMean { sum_sq, .. } => *sum_sq,
                DatasetSummary::GaussianScale { sum_sq, .. } => sum_sq[0],
                DatasetSummary::Poisson { sum, .. } => *sum,
            };
            let mut direct = stream(31, 0);
            let mut via_data = stream(31, 1);
            let (mut m_direct, mut m_data, mut v_direct, mut v_data) = (0.0, 0.0, 0.0, 0.0);
            for _ in 0..REPS {
                let x = stat_of(&model.sample_summary(&theta, N, &mut direct).unwrap());
                let data = model.sample_dataset(&theta, N, &mut via_data).unwrap();
                let y = stat_of(&model.summarize(&data).unwrap());
                m_direct += x;
                m_data += y;
                v_direct += x * x;
                v_data += y * y;
            }
            let n = REPS as f64;
            let (m_direct, m_data) = (m_direct / n, m_data / n);
            let sd_direct = (v_direct / n - m_direct * m_direct).sqrt();
            let sd_data = (v_data / n - m_data * m_data).sqrt();
            // Mean difference at ~4 standard errors; spread within 10%.
            assert!(
                (m_direct - m_data).abs() < 4.0 * sd_data / n.sqrt() + 1e-9,
                "{:?}: means {} vs {}",
                model.kind(),
                m_direct,
                m_data
            );
            assert!(
                (sd_direct - sd_data).abs() < 0.1 * sd_data,
                "{:?}: spreads {} vs {}",
                model.kind(),
                sd_direct,
                sd_data
            );
        }
    }

    #[test]
    fn sampled_summary_gaussian_mean_square_sum_dominates_mean_part() {
        // sum_sq must carry the residual chi-square part, not just sum^2/n:
        // with sigma = 1 and n = 40, E[sum_sq] = n(sigma^2 + mu^2) = 40.
        let mut rng = stream(12, 0);
        let mut acc = 0.0;
        for _ in 0..2000 {
            match gmean().sample_summary(&[0.0], 40, &mut rng).unwrap() {
                DatasetSummary::GaussianMean { sum_sq, .. } => acc += sum_sq,
                other => panic!("unexpected summary {:?}", other),
            }
        }
        assert_relative_eq!(acc / 2000.0, 40.0, max_relative = 0.05);
    }

    #[test]
    fn sampled_summary_single_observation_has_no_residual() {
        match gmean().sample_summary(&[2.0], 1, &mut stream(3, 0)).unwrap() {
            DatasetSummary::GaussianMean { sum, sum_sq, .. } => {
                assert_relative_eq!(sum_sq, sum * sum, max_relative = 1e-12);
            }
            other => panic!("unexpected summary {:?}", other),
        }
    }

    #[test]
    fn sampled_summary_rejects_empty_and_boundary() {
        assert!(bern().sample_summary(&[0.5], 0, &mut stream(0, 0)).is_err());
        assert!(pois().sample_summary(&[0.0], 5, &mut stream(0, 0)).is_err());
    }
}
